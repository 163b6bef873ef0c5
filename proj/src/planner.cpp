#include "hsdn/planner.hpp"

#include <algorithm>

namespace hsdn {

int id_bit_width(NodeId max_id) {
  int w = 1;
  while ((max_id >> w) != 0) ++w;
  return w;
}

namespace {

FlowRule hop_rule(NodeId dst, NodeId out, int width, RuleIdGen& ids) {
  FlowRule r;
  r.id = ids.next();
  r.priority = kPrioPrimary;
  r.dst = DstMatch::exact(dst, width);
  r.top_tag = TagMatch::none();
  r.actions = {Action::forward(out)};
  return r;
}

}  // namespace

SdnPlan compute_sdn_rules(const Adjacency& adj,
                          const std::vector<Demand>& demands, int width,
                          RuleIdGen& ids) {
  SdnPlan plan;
  // (node, dst) pairs already routed; demands sharing a path segment must not
  // produce duplicate rules.
  std::set<std::pair<NodeId, NodeId>> have;
  for (const Demand& d : demands) {
    if (d.src == d.dst) continue;
    const auto path = shortest_path(adj, d.src, d.dst);
    if (path.empty()) {
      plan.unreachable.push_back(d);
      if (have.insert({d.src, d.dst}).second)
        plan.rules[d.src].push_back(
            drop_rule_for_dst(d.dst, width, ids, RuleOrigin::kController));
      continue;
    }
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
      if (!have.insert({path[i], d.dst}).second) continue;
      plan.rules[path[i]].push_back(hop_rule(d.dst, path[i + 1], width, ids));
    }
  }
  return plan;
}

std::vector<FlowRule> waypoint_infra_rules(NodeId node,
                                           const std::set<NodeId>& neighbors,
                                           int width, RuleIdGen& ids) {
  std::vector<FlowRule> rules;
  FlowRule self;
  self.id = ids.next();
  self.priority = kPrioTag;
  self.dst = DstMatch::any(width);
  self.top_tag = TagMatch::tag(node);
  self.actions = {Action::pop_tag()};
  self.origin = RuleOrigin::kLocalAgent;
  rules.push_back(self);
  for (NodeId w : neighbors) {
    FlowRule f;
    f.id = ids.next();
    f.priority = kPrioTag;
    f.dst = DstMatch::any(width);
    f.top_tag = TagMatch::tag(w);
    f.actions = {Action::forward(w)};
    f.origin = RuleOrigin::kLocalAgent;
    rules.push_back(f);
  }
  return rules;
}

FlowRule source_route_rule(const std::vector<NodeId>& path, int width,
                           RuleIdGen& ids, RuleOrigin origin) {
  FlowRule r;
  r.id = ids.next();
  r.priority = kPrioPrimary;
  r.dst = DstMatch::exact(path.back(), width);
  r.top_tag = TagMatch::none();
  r.origin = origin;
  // Push back-to-front so the front of the stack is the hop after path[1].
  for (std::size_t i = path.size(); i-- > 2;)
    r.actions.push_back(Action::push_tag(path[i]));
  r.actions.push_back(Action::forward(path[1]));
  return r;
}

FlowRule drop_rule_for_dst(NodeId dst, int width, RuleIdGen& ids,
                           RuleOrigin origin) {
  FlowRule r;
  r.id = ids.next();
  r.priority = kPrioPrimary;
  r.dst = DstMatch::exact(dst, width);
  r.top_tag = TagMatch::none();
  r.actions = {Action::drop()};
  r.origin = origin;
  return r;
}

FlowRule catch_all_drop(int width, RuleIdGen& ids, RuleOrigin origin) {
  FlowRule r;
  r.id = ids.next();
  r.priority = kPrioCatchAll;
  r.dst = DstMatch::any(width);
  r.top_tag = TagMatch::any();
  r.actions = {Action::drop()};
  r.origin = origin;
  return r;
}

std::optional<std::vector<ClusterId>> cluster_sequence(const Overlay& overlay,
                                                       ClusterId from,
                                                       ClusterId to) {
  if (from == to) return std::vector<ClusterId>{};
  const auto path = shortest_path(overlay.adj, from, to);
  if (path.empty()) return std::nullopt;
  return std::vector<ClusterId>(path.begin() + 1, path.end());
}

ClusterControllerPlan compute_cluster_rules(const Partition& partition,
                                            const Overlay& overlay,
                                            const std::vector<Demand>& demands,
                                            int width, RuleIdGen& ids) {
  ClusterControllerPlan plan;
  for (const auto& [cid, members] : partition.clusters) {
    for (NodeId n : members) {
      FlowRule pop;
      pop.id = ids.next();
      pop.priority = kPrioTag;
      pop.dst = DstMatch::any(width);
      pop.top_tag = TagMatch::tag(cluster_tag(cid));
      pop.actions = {Action::pop_tag()};
      plan.rules[n].push_back(pop);
    }
  }
  std::set<std::pair<NodeId, NodeId>> have;
  for (const Demand& d : demands) {
    if (d.src == d.dst) continue;
    if (!have.insert({d.src, d.dst}).second) continue;
    const ClusterId cs = partition.of_node.at(d.src);
    const ClusterId cd = partition.of_node.at(d.dst);
    if (cs == cd) continue;  // agent-owned intra-cluster routing
    const auto seq = cluster_sequence(overlay, cs, cd);
    if (!seq) {
      plan.unreachable.push_back(d);
      plan.rules[d.src].push_back(
          drop_rule_for_dst(d.dst, width, ids, RuleOrigin::kController));
      continue;
    }
    FlowRule push;
    push.id = ids.next();
    push.priority = kPrioPrimary;
    push.dst = DstMatch::exact(d.dst, width);
    push.top_tag = TagMatch::none();
    for (std::size_t i = seq->size(); i-- > 0;)
      push.actions.push_back(Action::push_tag(cluster_tag((*seq)[i])));
    // No forward: the re-match after the pushes hands the packet to the
    // node's border rule for the now-topmost cluster tag.
    plan.rules[d.src].push_back(push);
  }
  return plan;
}

ReconcilePlan reconcile_boundary(const Adjacency& full_adj,
                                 const std::set<NodeId>& region,
                                 const std::set<NodeId>& advertised,
                                 const std::vector<Demand>& demands, int width,
                                 RuleIdGen& ids) {
  ReconcilePlan plan;
  std::set<NodeId> sdn_nodes;
  for (const auto& [n, _] : full_adj)
    if (region.count(n) == 0) sdn_nodes.insert(n);
  const Adjacency sdn_adj = induced(full_adj, sdn_nodes);

  // SDN nodes with at least one link into the region, and for each its
  // lowest-id region neighbor.
  std::map<NodeId, NodeId> region_gateway;
  for (NodeId n : sdn_nodes) {
    for (NodeId v : full_adj.at(n)) {
      if (region.count(v)) {
        region_gateway.emplace(n, v);  // neighbors ascend: first is lowest
        break;
      }
    }
  }
  std::set<NodeId> border_sdn;
  for (const auto& [n, _] : region_gateway) border_sdn.insert(n);
  const auto dist_to_border = bfs_dist_multi(sdn_adj, border_sdn);

  std::set<std::pair<NodeId, NodeId>> have;
  auto add_rule = [&](NodeId node, FlowRule r) {
    plan.rules[node].push_back(std::move(r));
  };

  for (const Demand& d : demands) {
    if (d.src == d.dst || region.count(d.src)) continue;
    if (region.count(d.dst) == 0) {
      // External destination: route strictly around the region.
      const auto path = shortest_path(sdn_adj, d.src, d.dst);
      if (path.empty()) {
        plan.unreachable.push_back(d);
        if (have.insert({d.src, d.dst}).second)
          add_rule(d.src,
                   drop_rule_for_dst(d.dst, width, ids, RuleOrigin::kController));
        continue;
      }
      for (std::size_t i = 0; i + 1 < path.size(); ++i)
        if (have.insert({path[i], d.dst}).second)
          add_rule(path[i], hop_rule(d.dst, path[i + 1], width, ids));
      continue;
    }
    if (advertised.count(d.dst) == 0) {
      // Region does not advertise this destination: drop at the source and
      // defensively at every region-adjacent node.
      plan.unreachable.push_back(d);
      if (have.insert({d.src, d.dst}).second)
        add_rule(d.src,
                 drop_rule_for_dst(d.dst, width, ids, RuleOrigin::kController));
      for (NodeId b : border_sdn)
        if (have.insert({b, d.dst}).second)
          add_rule(b,
                   drop_rule_for_dst(d.dst, width, ids, RuleOrigin::kController));
      continue;
    }
    // Advertised region destination: walk to the nearest region-adjacent SDN
    // node, then hand over to its lowest-id region neighbor.
    NodeId cur = d.src;
    if (dist_to_border.count(cur) == 0) {
      plan.unreachable.push_back(d);
      if (have.insert({d.src, d.dst}).second)
        add_rule(d.src,
                 drop_rule_for_dst(d.dst, width, ids, RuleOrigin::kController));
      continue;
    }
    while (true) {
      if (dist_to_border.at(cur) == 0) {
        if (have.insert({cur, d.dst}).second)
          add_rule(cur, hop_rule(d.dst, region_gateway.at(cur), width, ids));
        break;
      }
      const auto nh = next_hop(sdn_adj, dist_to_border, cur);
      if (!nh) break;  // cannot happen: dist entry implies a next hop
      if (have.insert({cur, d.dst}).second)
        add_rule(cur, hop_rule(d.dst, *nh, width, ids));
      cur = *nh;
    }
  }

  for (const auto& [node, rules] : plan.rules) {
    for (const FlowRule& r : rules) {
      const auto out = r.forward_target();
      if (!out || region.count(*out) == 0) continue;
      // Recover the concrete dst: reconcile rules are exact matches.
      const NodeId dst = r.dst.bits;
      if (advertised.count(dst) == 0) plan.postcondition_ok = false;
    }
  }
  return plan;
}

BackupPlan compute_backup_rules(const Adjacency& adj,
                                const std::vector<Demand>& demands, int budget,
                                int width, RuleIdGen& ids) {
  BackupPlan plan;
  if (budget <= 0) return plan;

  // flows per (node, out-link, dst) over all demand primary paths
  std::map<std::tuple<NodeId, NodeId, NodeId>, int> use;  // (u, v, dst) -> n
  for (const Demand& d : demands) {
    if (d.src == d.dst) continue;
    const auto path = shortest_path(adj, d.src, d.dst);
    for (std::size_t i = 0; i + 1 < path.size(); ++i)
      ++use[{path[i], path[i + 1], d.dst}];
  }

  std::map<NodeId, std::vector<BackupCandidate>> candidates;
  for (const auto& [key, flows] : use) {
    const auto [u, v, dst] = key;
    Adjacency cut = adj;
    remove_edge(cut, u, v);
    BackupCandidate c{u, LinkKey{u, v}, dst, shortest_path(cut, u, dst), flows};
    plan.affected[c.link.str()].insert({u, dst});
    if (c.detour.empty()) {
      plan.uncoverable.push_back(c);
      continue;
    }
    candidates[u].push_back(std::move(c));
  }

  for (auto& [u, cands] : candidates) {
    std::stable_sort(cands.begin(), cands.end(),
                     [](const BackupCandidate& a, const BackupCandidate& b) {
                       if (a.flows != b.flows) return a.flows > b.flows;
                       if (!(a.link == b.link)) return a.link < b.link;
                       return a.dst < b.dst;
                     });
    const std::size_t take =
        std::min<std::size_t>(cands.size(), static_cast<std::size_t>(budget));
    for (std::size_t i = 0; i < take; ++i) {
      const BackupCandidate& c = cands[i];
      FlowRule r = source_route_rule(c.detour, width, ids, RuleOrigin::kController);
      r.priority = kPrioBackup;
      r.kind = RuleKind::kBackup;
      const NodeId peer = c.link.a == u ? c.link.b : c.link.a;
      r.pred = StatePred{peer, true};
      plan.rules[u].push_back(std::move(r));
      plan.coverage[c.link.str()].insert({u, c.dst});
      plan.covered_flows += c.flows;
    }
  }
  return plan;
}

}  // namespace hsdn
