#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hsdn/metrics.hpp"
#include "hsdn/topology.hpp"

namespace hsdn {

using RuleId = std::uint64_t;
using ClusterId = std::uint32_t;

// Monotonic rule-id source. Ids only break priority ties, so any assignment
// order works as long as it is deterministic.
class RuleIdGen {
 public:
  RuleId next() { return ++last_; }

 private:
  RuleId last_ = 0;
};

// Tag values are cluster ids in the cluster method and waypoint node ids in
// the backup method; the data plane treats them uniformly.
using TagId = std::uint32_t;

// Binary-prefix match over fixed-width node ids. len == width is an exact
// match, len == 0 matches every destination.
struct DstMatch {
  std::uint32_t bits = 0;
  int len = 0;
  int width = 0;

  static DstMatch exact(NodeId dst, int width);
  static DstMatch any(int width);
  static DstMatch prefix(std::uint32_t bits, int len, int width);

  bool matches(NodeId dst) const;
  bool is_exact() const { return len == width; }
  // e.g. "10*" for width 3, bits 0b10x.
  std::string str() const;

  bool operator==(const DstMatch& o) const {
    return bits == o.bits && len == o.len && width == o.width;
  }
  bool operator<(const DstMatch& o) const;
};

struct TagMatch {
  enum class Kind { kAny, kNone, kValue };
  Kind kind = Kind::kAny;
  TagId value = 0;

  static TagMatch any() { return {Kind::kAny, 0}; }
  static TagMatch none() { return {Kind::kNone, 0}; }
  static TagMatch tag(TagId v) { return {Kind::kValue, v}; }

  bool matches(std::optional<TagId> top) const;
  std::string str() const;
  bool operator==(const TagMatch& o) const {
    return kind == o.kind && value == o.value;
  }
};

// Predicate over the state of one link incident to the rule's node,
// evaluated against the node's believed local link states.
struct StatePred {
  NodeId neighbor = 0;
  bool want_down = true;

  std::string str() const {
    return (want_down ? "down(" : "up(") + std::to_string(neighbor) + ")";
  }
  bool operator==(const StatePred& o) const {
    return neighbor == o.neighbor && want_down == o.want_down;
  }
};

struct Action {
  enum class Type { kForward, kPopTag, kPushTag, kDrop };
  Type type = Type::kDrop;
  std::uint32_t arg = 0;  // forward: out neighbor; push: tag value

  static Action forward(NodeId out) { return {Type::kForward, out}; }
  static Action pop_tag() { return {Type::kPopTag, 0}; }
  static Action push_tag(TagId t) { return {Type::kPushTag, t}; }
  static Action drop() { return {Type::kDrop, 0}; }

  std::string str() const;
  bool operator==(const Action& o) const {
    return type == o.type && arg == o.arg;
  }
};

enum class RuleKind { kPrimary, kBackup };
enum class RuleOrigin { kController, kLocalAgent };

struct FlowRule {
  RuleId id = 0;
  int priority = 0;
  DstMatch dst;
  TagMatch top_tag = TagMatch::any();
  std::optional<StatePred> pred;
  std::vector<Action> actions;
  RuleKind kind = RuleKind::kPrimary;
  RuleOrigin origin = RuleOrigin::kController;

  // Content identity used for install/remove deltas; excludes the id.
  std::string signature() const;
  // One-line dump, stable across runs.
  std::string str() const;

  std::optional<NodeId> forward_target() const;
  // priority >= 0, at most one forward action, backups always carry a pred.
  void validate() const;
};

class TagStackError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Ordered remaining-tag sequence carried by a packet; front = next tag.
class TagStack {
 public:
  TagStack() = default;
  explicit TagStack(std::size_t max_depth) : max_depth_(max_depth) {}

  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  std::size_t max_depth() const { return max_depth_; }
  std::optional<TagId> top() const {
    if (entries_.empty()) return std::nullopt;
    return entries_.front();
  }
  // Returns false when the stack is full (depth limit D).
  bool push_front(TagId t);
  void pop_front();
  const std::vector<TagId>& entries() const { return entries_; }
  std::string str() const;

 private:
  std::vector<TagId> entries_;
  std::size_t max_depth_ = 16;
};

struct HopRecord {
  NodeId node = 0;
  std::uint32_t stack_len = 0;
  std::uint64_t stack_hash = 0;  // FNV over the remaining tags at arrival
  RuleId rule_id = 0;            // 0 when no rule was applied at this hop
};

struct Packet {
  std::uint64_t id = 0;
  NodeId src = 0;
  NodeId dst = 0;
  TagStack stack;
  std::uint32_t hop_count = 0;
  std::uint64_t tag_epoch = 0;  // clustering epoch the stack was computed for
  SimTime injected_at = 0;
  std::vector<HopRecord> path_log;
};

// Priority-ordered match-action table of one node. Rules are totally ordered
// by (priority desc, rule id asc); installs beyond the capacity are rejected
// and counted by the caller.
class FlowTable {
 public:
  explicit FlowTable(std::size_t capacity = 4096) : capacity_(capacity) {}

  std::size_t size() const { return rules_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::size_t high_water() const { return high_water_; }
  const std::vector<FlowRule>& rules() const { return rules_; }

  bool install(FlowRule rule);  // false on overflow
  bool remove(RuleId id);
  void clear();

  // Highest-priority rule matching (dst, top tag) whose predicate, if any,
  // holds under the node's believed local link states.
  const FlowRule* match(
      NodeId dst, std::optional<TagId> top_tag,
      const std::function<bool(NodeId)>& link_believed_down) const;

  const FlowRule* find(RuleId id) const;
  std::string dump() const;

 private:
  std::size_t capacity_;
  std::size_t high_water_ = 0;
  std::vector<FlowRule> rules_;  // kept sorted by (priority desc, id asc)
};

// Priority bands used by rule construction. Backups sit strictly above the
// primaries they protect, so predicate flips activate them with no table
// rewrite.
constexpr int kPrioCatchAll = 0;
constexpr int kPrioPrimary = 100;
constexpr int kPrioTag = 150;
constexpr int kPrioBackup = 200;

}  // namespace hsdn
