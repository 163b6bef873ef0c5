#include "hsdn/dataplane.hpp"

#include <algorithm>

namespace hsdn {

DstMatch DstMatch::exact(NodeId dst, int width) {
  return DstMatch{dst, width, width};
}

DstMatch DstMatch::any(int width) { return DstMatch{0, 0, width}; }

DstMatch DstMatch::prefix(std::uint32_t bits, int len, int width) {
  return DstMatch{bits, len, width};
}

bool DstMatch::matches(NodeId dst) const {
  if (len == 0) return true;
  const int shift = width - len;
  return (dst >> shift) == (bits >> shift);
}

std::string DstMatch::str() const {
  std::string out;
  for (int i = width - 1; i >= 0; --i) {
    const int pos = width - 1 - i;  // 0-based from the left
    if (pos < len)
      out += ((bits >> i) & 1u) ? '1' : '0';
    else
      out += '*';
  }
  return out.empty() ? "*" : out;
}

bool DstMatch::operator<(const DstMatch& o) const {
  if (width != o.width) return width < o.width;
  if (len != o.len) return len < o.len;
  return bits < o.bits;
}

bool TagMatch::matches(std::optional<TagId> top) const {
  switch (kind) {
    case Kind::kAny: return true;
    case Kind::kNone: return !top.has_value();
    case Kind::kValue: return top.has_value() && *top == value;
  }
  return false;
}

std::string TagMatch::str() const {
  switch (kind) {
    case Kind::kAny: return "any";
    case Kind::kNone: return "none";
    case Kind::kValue: return std::to_string(value);
  }
  return "?";
}

std::string Action::str() const {
  switch (type) {
    case Type::kForward: return "fwd(" + std::to_string(arg) + ")";
    case Type::kPopTag: return "pop";
    case Type::kPushTag: return "push(" + std::to_string(arg) + ")";
    case Type::kDrop: return "drop";
  }
  return "?";
}

std::string FlowRule::signature() const {
  std::string out = "prio=" + std::to_string(priority) +
                    " dst=" + dst.str() + " tag=" + top_tag.str() +
                    " pred=" + (pred ? pred->str() : std::string("-")) +
                    " act=[";
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (i) out += ',';
    out += actions[i].str();
  }
  out += "] kind=";
  out += (kind == RuleKind::kBackup ? "backup" : "primary");
  out += " origin=";
  out += (origin == RuleOrigin::kController ? "ctrl" : "local");
  return out;
}

std::string FlowRule::str() const {
  return "id=" + std::to_string(id) + " " + signature();
}

std::optional<NodeId> FlowRule::forward_target() const {
  for (const auto& a : actions)
    if (a.type == Action::Type::kForward) return a.arg;
  return std::nullopt;
}

void FlowRule::validate() const {
  if (priority < 0) throw TagStackError("rule priority must be >= 0");
  int forwards = 0;
  for (const auto& a : actions)
    if (a.type == Action::Type::kForward) ++forwards;
  if (forwards > 1)
    throw TagStackError("rule has more than one forward action: " + str());
  if (kind == RuleKind::kBackup && !pred)
    throw TagStackError("backup rule without state predicate: " + str());
}

bool TagStack::push_front(TagId t) {
  if (entries_.size() >= max_depth_) return false;
  entries_.insert(entries_.begin(), t);
  return true;
}

void TagStack::pop_front() {
  if (entries_.empty()) throw TagStackError("pop on empty tag stack");
  entries_.erase(entries_.begin());
}

std::string TagStack::str() const {
  std::string out = "[";
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(entries_[i]);
  }
  return out + "]";
}

bool FlowTable::install(FlowRule rule) {
  rule.validate();
  if (rules_.size() >= capacity_) return false;
  auto pos = std::lower_bound(
      rules_.begin(), rules_.end(), rule,
      [](const FlowRule& a, const FlowRule& b) {
        if (a.priority != b.priority) return a.priority > b.priority;
        return a.id < b.id;
      });
  rules_.insert(pos, std::move(rule));
  high_water_ = std::max(high_water_, rules_.size());
  return true;
}

bool FlowTable::remove(RuleId id) {
  auto it = std::find_if(rules_.begin(), rules_.end(),
                         [id](const FlowRule& r) { return r.id == id; });
  if (it == rules_.end()) return false;
  rules_.erase(it);
  return true;
}

void FlowTable::clear() { rules_.clear(); }

const FlowRule* FlowTable::match(
    NodeId dst, std::optional<TagId> top_tag,
    const std::function<bool(NodeId)>& link_believed_down) const {
  for (const FlowRule& r : rules_) {
    if (!r.dst.matches(dst)) continue;
    if (!r.top_tag.matches(top_tag)) continue;
    if (r.pred) {
      const bool down = link_believed_down(r.pred->neighbor);
      if (down != r.pred->want_down) continue;
    }
    return &r;
  }
  return nullptr;
}

const FlowRule* FlowTable::find(RuleId id) const {
  for (const FlowRule& r : rules_)
    if (r.id == id) return &r;
  return nullptr;
}

std::string FlowTable::dump() const {
  std::string out;
  for (const FlowRule& r : rules_) {
    out += r.str();
    out += '\n';
  }
  return out;
}

}  // namespace hsdn
