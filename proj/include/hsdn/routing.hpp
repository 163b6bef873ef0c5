#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "hsdn/topology.hpp"

namespace hsdn {

// Generic undirected adjacency over 32-bit vertex ids; used both for the
// node graph and for the cluster overlay. Keys are present for every vertex,
// neighbor sets are sorted, which fixes all tie-breaks to lowest id.
using Adjacency = std::map<std::uint32_t, std::set<std::uint32_t>>;

// Adjacency over up data links, restricted to the given node set (all data
// nodes when empty).
Adjacency data_adjacency(const TopologyView& view,
                         const std::set<NodeId>& restrict_to = {});

void add_edge(Adjacency& adj, std::uint32_t a, std::uint32_t b);
void remove_edge(Adjacency& adj, std::uint32_t a, std::uint32_t b);

// Hop distance from every vertex to target; unreachable vertices absent.
std::map<std::uint32_t, int> bfs_dist(const Adjacency& adj,
                                      std::uint32_t target);

// Distance to the nearest vertex of a target set.
std::map<std::uint32_t, int> bfs_dist_multi(
    const Adjacency& adj, const std::set<std::uint32_t>& targets);

// Lowest-id neighbor of `from` strictly closer to the target, per dist map.
std::optional<std::uint32_t> next_hop(const Adjacency& adj,
                                      const std::map<std::uint32_t, int>& dist,
                                      std::uint32_t from);

// Walks next_hop() choices from src to dst. Empty when unreachable.
std::vector<std::uint32_t> shortest_path(const Adjacency& adj,
                                         std::uint32_t src, std::uint32_t dst);

bool is_connected(const Adjacency& adj);

// Subgraph induced by `keep`: vertices and edges fully inside the set.
Adjacency induced(const Adjacency& adj, const std::set<std::uint32_t>& keep);

}  // namespace hsdn
