#include "hsdn/routing.hpp"

#include <deque>

namespace hsdn {

Adjacency data_adjacency(const TopologyView& view,
                         const std::set<NodeId>& restrict_to) {
  Adjacency adj;
  auto wanted = [&](NodeId n) {
    return restrict_to.empty() || restrict_to.count(n) != 0;
  };
  for (NodeId n : view.nodes())
    if (wanted(n)) adj[n];
  for (const auto& [key, attr] : view.links()) {
    if (!attr.up || attr.kind != LinkKind::kData) continue;
    if (!wanted(key.a) || !wanted(key.b)) continue;
    adj[key.a].insert(key.b);
    adj[key.b].insert(key.a);
  }
  return adj;
}

void add_edge(Adjacency& adj, std::uint32_t a, std::uint32_t b) {
  adj[a].insert(b);
  adj[b].insert(a);
}

void remove_edge(Adjacency& adj, std::uint32_t a, std::uint32_t b) {
  auto ia = adj.find(a);
  if (ia != adj.end()) ia->second.erase(b);
  auto ib = adj.find(b);
  if (ib != adj.end()) ib->second.erase(a);
}

std::map<std::uint32_t, int> bfs_dist(const Adjacency& adj,
                                      std::uint32_t target) {
  return bfs_dist_multi(adj, {target});
}

std::map<std::uint32_t, int> bfs_dist_multi(
    const Adjacency& adj, const std::set<std::uint32_t>& targets) {
  std::map<std::uint32_t, int> dist;
  std::deque<std::uint32_t> frontier;
  for (std::uint32_t t : targets) {
    if (adj.count(t) == 0) continue;
    dist[t] = 0;
    frontier.push_back(t);
  }
  while (!frontier.empty()) {
    std::uint32_t u = frontier.front();
    frontier.pop_front();
    auto it = adj.find(u);
    if (it == adj.end()) continue;
    for (std::uint32_t v : it->second) {
      if (dist.count(v)) continue;
      dist[v] = dist[u] + 1;
      frontier.push_back(v);
    }
  }
  return dist;
}

std::optional<std::uint32_t> next_hop(const Adjacency& adj,
                                      const std::map<std::uint32_t, int>& dist,
                                      std::uint32_t from) {
  auto df = dist.find(from);
  if (df == dist.end() || df->second == 0) return std::nullopt;
  auto it = adj.find(from);
  if (it == adj.end()) return std::nullopt;
  for (std::uint32_t v : it->second) {  // ascending id: first hit wins ties
    auto dv = dist.find(v);
    if (dv != dist.end() && dv->second == df->second - 1) return v;
  }
  return std::nullopt;
}

std::vector<std::uint32_t> shortest_path(const Adjacency& adj,
                                         std::uint32_t src,
                                         std::uint32_t dst) {
  const auto dist = bfs_dist(adj, dst);
  if (dist.count(src) == 0) return {};
  std::vector<std::uint32_t> path{src};
  std::uint32_t cur = src;
  while (cur != dst) {
    auto nh = next_hop(adj, dist, cur);
    if (!nh) return {};
    cur = *nh;
    path.push_back(cur);
  }
  return path;
}

bool is_connected(const Adjacency& adj) {
  if (adj.empty()) return true;
  const auto dist = bfs_dist(adj, adj.begin()->first);
  return dist.size() == adj.size();
}

Adjacency induced(const Adjacency& adj, const std::set<std::uint32_t>& keep) {
  Adjacency out;
  for (const auto& [u, nbrs] : adj) {
    if (keep.count(u) == 0) continue;
    out[u];
    for (std::uint32_t v : nbrs)
      if (keep.count(v)) out[u].insert(v);
  }
  return out;
}

}  // namespace hsdn
