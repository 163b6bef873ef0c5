#pragma once

#include <cstdint>
#include <map>
#include <set>

#include "hsdn/dataplane.hpp"
#include "hsdn/routing.hpp"
#include "hsdn/topology.hpp"

namespace hsdn {

// Disjoint cover of the data nodes; every cluster's induced subgraph is
// connected by construction.
struct Partition {
  std::map<ClusterId, std::set<NodeId>> clusters;
  std::map<NodeId, ClusterId> of_node;
  std::uint64_t epoch = 0;
  bool spans_components = false;  // set when the input graph was disconnected

  ClusterId cluster_of(NodeId n) const { return of_node.at(n); }
  std::size_t size() const { return clusters.size(); }
};

// Cluster-level view of the node graph plus the border bookkeeping: for each
// cluster, the (border node, neighbor cluster) pairs backed by an up link.
struct Overlay {
  Adjacency adj;
  std::map<ClusterId, std::set<std::pair<NodeId, ClusterId>>> borders;
};

// Deterministic seeded-BFS growth: repeatedly seed at the lowest-id
// unassigned node and grow breadth-first (neighbors in ascending id order)
// up to target_size nodes among the unassigned. target_size 1 yields
// singletons, target_size >= |nodes| yields one cluster per component.
Partition make_partition(const Adjacency& graph, std::size_t target_size,
                         std::uint64_t epoch = 0);

Overlay make_overlay(const Partition& partition, const TopologyView& view);
Overlay make_overlay(const Partition& partition, const Adjacency& node_adj);

// Disjoint cover + intra-cluster connectivity.
bool partition_valid(const Partition& partition, const Adjacency& graph);

// Fraction of a cluster's intra links that are down in `current` relative to
// `reference`; drives the threshold recluster policy.
double intra_loss_fraction(const Partition& partition, ClusterId cluster,
                           const Adjacency& reference,
                           const Adjacency& current);

}  // namespace hsdn
