#include "hsdn/clustering.hpp"

#include <deque>

namespace hsdn {

Partition make_partition(const Adjacency& graph, std::size_t target_size,
                         std::uint64_t epoch) {
  Partition p;
  p.epoch = epoch;
  if (target_size == 0) target_size = 1;

  std::set<NodeId> unassigned;
  for (const auto& [n, _] : graph) unassigned.insert(n);

  ClusterId next_cluster = 0;
  while (!unassigned.empty()) {
    const NodeId seed = *unassigned.begin();
    const ClusterId cid = next_cluster++;
    std::set<NodeId> members;
    std::deque<NodeId> frontier{seed};
    members.insert(seed);
    unassigned.erase(seed);
    while (!frontier.empty() && members.size() < target_size) {
      const NodeId u = frontier.front();
      frontier.pop_front();
      for (NodeId v : graph.at(u)) {
        if (members.size() >= target_size) break;
        if (unassigned.count(v) == 0) continue;
        unassigned.erase(v);
        members.insert(v);
        frontier.push_back(v);
      }
    }
    for (NodeId n : members) p.of_node[n] = cid;
    p.clusters[cid] = std::move(members);
  }

  if (!is_connected(graph) && graph.size() > 1) p.spans_components = true;
  return p;
}

Overlay make_overlay(const Partition& partition, const TopologyView& view) {
  std::set<NodeId> data_nodes;
  for (const auto& [n, _] : partition.of_node) data_nodes.insert(n);
  return make_overlay(partition, data_adjacency(view, data_nodes));
}

Overlay make_overlay(const Partition& partition, const Adjacency& node_adj) {
  Overlay o;
  for (const auto& [cid, _] : partition.clusters) o.adj[cid];
  for (const auto& [u, nbrs] : node_adj) {
    auto cu = partition.of_node.find(u);
    if (cu == partition.of_node.end()) continue;
    for (NodeId v : nbrs) {
      auto cv = partition.of_node.find(v);
      if (cv == partition.of_node.end()) continue;
      if (cu->second == cv->second) continue;
      add_edge(o.adj, cu->second, cv->second);
      o.borders[cu->second].insert({u, cv->second});
    }
  }
  return o;
}

bool partition_valid(const Partition& partition, const Adjacency& graph) {
  std::set<NodeId> seen;
  for (const auto& [cid, members] : partition.clusters) {
    if (members.empty()) return false;
    for (NodeId n : members) {
      if (graph.count(n) == 0) return false;
      if (!seen.insert(n).second) return false;  // overlap
      auto it = partition.of_node.find(n);
      if (it == partition.of_node.end() || it->second != cid) return false;
    }
    // Induced subgraph must be connected.
    Adjacency induced;
    for (NodeId n : members) {
      induced[n];
      for (NodeId v : graph.at(n))
        if (members.count(v)) induced[n].insert(v);
    }
    if (!is_connected(induced)) return false;
  }
  return seen.size() == graph.size();
}

double intra_loss_fraction(const Partition& partition, ClusterId cluster,
                           const Adjacency& reference,
                           const Adjacency& current) {
  const auto it = partition.clusters.find(cluster);
  if (it == partition.clusters.end()) return 0.0;
  const auto& members = it->second;
  std::size_t total = 0, lost = 0;
  for (NodeId u : members) {
    auto ru = reference.find(u);
    if (ru == reference.end()) continue;
    for (NodeId v : ru->second) {
      if (v <= u || members.count(v) == 0) continue;
      ++total;
      auto cu = current.find(u);
      if (cu == current.end() || cu->second.count(v) == 0) ++lost;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(lost) / static_cast<double>(total);
}

}  // namespace hsdn
