#include "hsdn/topology.hpp"

#include <deque>

namespace hsdn {

void TopologyView::add_node(NodeId n) {
  if (nodes_.insert(n).second) ++version_;
}

void TopologyView::add_link(NodeId a, NodeId b, const LinkAttr& attr) {
  if (a == b) throw TopologyError("self-loop link " + LinkKey(a, b).str());
  if (!has_node(a) || !has_node(b))
    throw TopologyError("link endpoint unknown: " + LinkKey(a, b).str());
  if (attr.latency <= 0)
    throw TopologyError("link latency must be > 0: " + LinkKey(a, b).str());
  if (attr.loss_prob < 0.0 || attr.loss_prob >= 1.0)
    throw TopologyError("link loss_prob must be in [0,1): " + LinkKey(a, b).str());
  links_[LinkKey(a, b)] = attr;
  ++version_;
}

void TopologyView::set_link_up(NodeId a, NodeId b, bool up) {
  auto it = links_.find(LinkKey(a, b));
  if (it == links_.end())
    throw TopologyError("unknown link " + LinkKey(a, b).str());
  it->second.up = up;
  ++version_;
}

const LinkAttr& TopologyView::attr(NodeId a, NodeId b) const {
  auto it = links_.find(LinkKey(a, b));
  if (it == links_.end())
    throw TopologyError("unknown link " + LinkKey(a, b).str());
  return it->second;
}

std::set<NodeId> TopologyView::neighbors_up(NodeId n, bool data_only) const {
  std::set<NodeId> out;
  for (const auto& [key, attr] : links_) {
    if (!attr.up) continue;
    if (data_only && attr.kind != LinkKind::kData) continue;
    if (key.a == n) out.insert(key.b);
    if (key.b == n) out.insert(key.a);
  }
  return out;
}

std::set<NodeId> TopologyView::neighbors_all(NodeId n, bool data_only) const {
  std::set<NodeId> out;
  for (const auto& [key, attr] : links_) {
    if (data_only && attr.kind != LinkKind::kData) continue;
    if (key.a == n) out.insert(key.b);
    if (key.b == n) out.insert(key.a);
  }
  return out;
}

bool TopologyView::reachable(NodeId from, NodeId to) const {
  if (from == to) return true;
  std::set<NodeId> seen{from};
  std::deque<NodeId> frontier{from};
  while (!frontier.empty()) {
    NodeId u = frontier.front();
    frontier.pop_front();
    for (NodeId v : neighbors_up(u, /*data_only=*/false)) {
      if (v == to) return true;
      if (seen.insert(v).second) frontier.push_back(v);
    }
  }
  return false;
}

}  // namespace hsdn
