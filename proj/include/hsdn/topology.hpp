#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>

#include "hsdn/time.hpp"

namespace hsdn {

using NodeId = std::uint32_t;

enum class LinkKind { kData, kControl };

// Undirected link key stored in canonical (min, max) order.
struct LinkKey {
  NodeId a = 0;
  NodeId b = 0;

  LinkKey() = default;
  LinkKey(NodeId x, NodeId y) : a(x < y ? x : y), b(x < y ? y : x) {}

  bool operator<(const LinkKey& o) const {
    return a != o.a ? a < o.a : b < o.b;
  }
  bool operator==(const LinkKey& o) const { return a == o.a && b == o.b; }
  std::string str() const {
    return "(" + std::to_string(a) + "," + std::to_string(b) + ")";
  }
};

struct LinkAttr {
  bool up = true;
  SimTime latency = kMillisecond;  // one-hop transmission latency, > 0
  double loss_prob = 0.0;          // per-traversal loss, in [0, 1)
  LinkKind kind = LinkKind::kData;
};

class TopologyError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Timestamped graph of nodes and links. The simulator keeps the single
// authoritative ("true") copy; the controller and every agent keep believed
// copies that only change when reports or advertisements reach them.
class TopologyView {
 public:
  std::uint64_t version() const { return version_; }
  const std::set<NodeId>& nodes() const { return nodes_; }
  const std::map<LinkKey, LinkAttr>& links() const { return links_; }

  bool has_node(NodeId n) const { return nodes_.count(n) != 0; }
  bool has_link(NodeId a, NodeId b) const {
    return links_.count(LinkKey(a, b)) != 0;
  }

  void add_node(NodeId n);
  void add_link(NodeId a, NodeId b, const LinkAttr& attr);
  void set_link_up(NodeId a, NodeId b, bool up);

  // Symmetric lookup: attr(a, b) and attr(b, a) return the same entry.
  const LinkAttr& attr(NodeId a, NodeId b) const;
  bool link_up(NodeId a, NodeId b) const { return attr(a, b).up; }

  // Neighbors over up links. data_only excludes control links.
  std::set<NodeId> neighbors_up(NodeId n, bool data_only = true) const;
  std::set<NodeId> neighbors_all(NodeId n, bool data_only = true) const;

  // Reachability over up links of any kind (used for control connectivity).
  bool reachable(NodeId from, NodeId to) const;

 private:
  std::set<NodeId> nodes_;
  std::map<LinkKey, LinkAttr> links_;
  std::uint64_t version_ = 0;
};

}  // namespace hsdn
