#pragma once

// Shared test fixtures: seeded graph generators and brute-force routing
// oracles, implemented independently of src/routing.cpp so the suites check
// two different algorithms against each other.

#include <algorithm>
#include <optional>
#include <set>
#include <vector>

#include "hsdn/config.hpp"
#include "hsdn/rng.hpp"
#include "hsdn/routing.hpp"

namespace hsdn::testutil {

// Connected undirected graph on ids 1..n: a random spanning tree (each new
// node attaches to a uniformly chosen earlier one) plus independent extra
// edges with probability `extra`.
inline Adjacency random_connected_graph(RngStream& rng, int n,
                                        double extra = 0.3) {
  Adjacency adj;
  for (int i = 1; i <= n; ++i) adj[static_cast<NodeId>(i)];
  for (int i = 2; i <= n; ++i) {
    const NodeId peer = static_cast<NodeId>(1 + rng.uniform_index(i - 1));
    add_edge(adj, static_cast<NodeId>(i), peer);
  }
  for (int i = 1; i <= n; ++i)
    for (int j = i + 1; j <= n; ++j)
      if (rng.bernoulli(extra))
        add_edge(adj, static_cast<NodeId>(i), static_cast<NodeId>(j));
  return adj;
}

// Biconnected graph: Hamiltonian cycle 1..n plus chords. Every single link
// failure leaves it connected.
inline Adjacency ring_with_chords(RngStream& rng, int n, double extra = 0.2) {
  Adjacency adj;
  for (int i = 1; i <= n; ++i)
    add_edge(adj, static_cast<NodeId>(i), static_cast<NodeId>(i % n + 1));
  for (int i = 1; i <= n; ++i)
    for (int j = i + 2; j <= n; ++j) {
      if (i == 1 && j == n) continue;  // already a cycle edge
      if (rng.bernoulli(extra))
        add_edge(adj, static_cast<NodeId>(i), static_cast<NodeId>(j));
    }
  return adj;
}

// Exhaustive oracle: the lexicographically smallest node sequence among all
// shortest src->dst paths, found by DFS over distance-decreasing moves.
inline std::vector<NodeId> lex_min_shortest_path(const Adjacency& adj,
                                                 NodeId src, NodeId dst) {
  if (src == dst) return {src};
  const auto dist = bfs_dist(adj, dst);
  if (dist.count(src) == 0) return {};
  std::vector<NodeId> best;
  std::vector<NodeId> cur{src};
  auto dfs = [&](auto&& self, NodeId u) -> void {
    if (u == dst) {
      if (best.empty() || cur < best) best = cur;
      return;
    }
    for (NodeId v : adj.at(u)) {
      auto dv = dist.find(v);
      if (dv == dist.end() || dv->second != dist.at(u) - 1) continue;
      cur.push_back(v);
      self(self, v);
      cur.pop_back();
    }
  };
  dfs(dfs, src);
  return best;
}

// Scenario skeleton: data nodes 1..n wired per `adj`, controller node 0 with
// a control star, one demand list. Knob defaults from ScenarioConfig.
inline ScenarioConfig graph_config(const Adjacency& adj,
                                   const std::vector<DemandSpec>& demands,
                                   SimTime data_latency = ms(2),
                                   SimTime control_latency = ms(1)) {
  ScenarioConfig cfg;
  cfg.nodes.push_back({0, true});
  for (const auto& [n, _] : adj) cfg.nodes.push_back({n, false});
  for (const auto& [n, _] : adj)
    cfg.links.push_back({0, n, control_latency, 0.0, LinkKind::kControl});
  std::set<LinkKey> seen;
  for (const auto& [u, nbrs] : adj)
    for (NodeId v : nbrs)
      if (seen.insert(LinkKey(u, v)).second)
        cfg.links.push_back({u, v, data_latency, 0.0, LinkKind::kData});
  cfg.demands = demands;
  return cfg;
}

}  // namespace hsdn::testutil
