#include "hsdn/compress.hpp"

#include <map>
#include <set>

namespace hsdn {

namespace {

// A candidate block: prefix of length `len` starting at `base`, covering
// 2^(width-len) consecutive addresses.
bool block_fully_present(const std::set<std::uint32_t>& values,
                         std::uint32_t base, unsigned span) {
  for (std::uint32_t v = base; v < base + span; ++v)
    if (values.count(v) == 0) return false;
  return true;
}

}  // namespace

std::vector<DstMatch> prefix_cover(const std::vector<std::uint32_t>& values,
                                   unsigned width) {
  std::set<std::uint32_t> remaining(values.begin(), values.end());
  std::vector<DstMatch> out;
  while (!remaining.empty()) {
    const std::uint32_t v = *remaining.begin();
    // Grow the aligned block at v as far as it stays aligned and fully
    // present. Taking the maximal aligned block at the minimum uncovered
    // address is optimal: any disjoint prefix cover must cover v with some
    // aligned block through v, and larger blocks subsume smaller ones.
    int len = static_cast<int>(width);
    std::uint32_t base = v;
    while (len > 0) {
      const int cand_len = len - 1;
      const unsigned span = 1u << (width - cand_len);
      const std::uint32_t cand_base = v & ~(span - 1);
      if (cand_base != v) break;  // v is not the low address of the block
      if (!block_fully_present(remaining, cand_base, span)) break;
      len = cand_len;
      base = cand_base;
    }
    const unsigned span = 1u << (width - len);
    for (std::uint32_t a = base; a < base + span; ++a) remaining.erase(a);
    out.push_back(DstMatch::prefix(base, len, static_cast<int>(width)));
  }
  return out;
}

std::vector<FlowRule> compress_rules(const std::vector<FlowRule>& rules,
                                     unsigned width, RuleIdGen& ids) {
  // Group exact-dst rules by everything except the destination.
  struct GroupKey {
    int priority;
    std::string rest;  // tag/pred/actions/kind/origin signature
    bool operator<(const GroupKey& o) const {
      if (priority != o.priority) return priority < o.priority;
      return rest < o.rest;
    }
  };
  auto rest_sig = [](const FlowRule& r) {
    std::string s = r.top_tag.str();
    s += '|';
    s += r.pred ? r.pred->str() : std::string("-");
    s += '|';
    for (const auto& a : r.actions) {
      s += a.str();
      s += ',';
    }
    s += '|';
    s += (r.kind == RuleKind::kBackup ? 'B' : 'P');
    s += (r.origin == RuleOrigin::kLocalAgent ? 'L' : 'C');
    return s;
  };

  std::vector<FlowRule> out;
  std::map<GroupKey, std::vector<const FlowRule*>> groups;
  for (const auto& r : rules) {
    if (r.dst.is_exact() && r.dst.width == static_cast<int>(width))
      groups[{r.priority, rest_sig(r)}].push_back(&r);
    else
      out.push_back(r);
  }

  for (auto& [key, members] : groups) {
    std::vector<std::uint32_t> dsts;
    dsts.reserve(members.size());
    for (const FlowRule* r : members)
      dsts.push_back(r->dst.bits);
    const auto cover = prefix_cover(dsts, width);
    for (const auto& m : cover) {
      FlowRule r = *members.front();
      r.id = ids.next();
      r.dst = m;
      out.push_back(r);
    }
  }
  return out;
}

}  // namespace hsdn
