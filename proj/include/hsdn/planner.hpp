#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hsdn/clustering.hpp"
#include "hsdn/dataplane.hpp"
#include "hsdn/routing.hpp"

namespace hsdn {

struct Demand {
  NodeId src = 0;
  NodeId dst = 0;

  bool operator<(const Demand& o) const {
    if (src != o.src) return src < o.src;
    return dst < o.dst;
  }
  bool operator==(const Demand& o) const {
    return src == o.src && dst == o.dst;
  }
};

// Bits needed for an exact match on the largest id in play; never 0.
int id_bit_width(NodeId max_id);

// Cluster-sequence tags and node-id waypoint tags share the TagId space;
// cluster tags live above this base so the two rule families cannot collide.
constexpr TagId kClusterTagBase = 1u << 20;
inline TagId cluster_tag(ClusterId c) { return kClusterTagBase + c; }
inline bool is_cluster_tag(TagId t) { return t >= kClusterTagBase; }
inline ClusterId tag_cluster(TagId t) { return t - kClusterTagBase; }

using RuleSets = std::map<NodeId, std::vector<FlowRule>>;

// ---- pure-SDN routing ------------------------------------------------------

// Hop-by-hop next-hop rules along each demand's shortest path (lowest-id
// ties). Unreachable demands get a drop rule at the source and are listed.
struct SdnPlan {
  RuleSets rules;
  std::vector<Demand> unreachable;
};
SdnPlan compute_sdn_rules(const Adjacency& adj,
                          const std::vector<Demand>& demands, int width,
                          RuleIdGen& ids);

// ---- shared rule builders --------------------------------------------------

// Static per-node tag plumbing: pop own node tag, forward a neighbor's tag
// toward that neighbor. These never change after install; failed links show
// up as in-flight drops, never as rerouting decisions at intermediate nodes.
std::vector<FlowRule> waypoint_infra_rules(NodeId node,
                                           const std::set<NodeId>& neighbors,
                                           int width, RuleIdGen& ids);

// (dst, no tag) -> push the remaining path as node tags and forward to the
// first hop. path must start at the rule's node and end at dst (length >= 2).
FlowRule source_route_rule(const std::vector<NodeId>& path, int width,
                           RuleIdGen& ids, RuleOrigin origin);

FlowRule drop_rule_for_dst(NodeId dst, int width, RuleIdGen& ids,
                           RuleOrigin origin);

// Lowest-priority drop for everything; keeps unroutable packets an explicit
// decision instead of a table miss.
FlowRule catch_all_drop(int width, RuleIdGen& ids, RuleOrigin origin);

// ---- cluster-sequence routing ----------------------------------------------

// Shortest overlay path from `from` to `to` excluding `from` itself
// (lowest-cluster-id ties). Empty sequence iff from == to; nullopt when the
// overlay does not connect them.
std::optional<std::vector<ClusterId>> cluster_sequence(const Overlay& overlay,
                                                       ClusterId from,
                                                       ClusterId to);

// Controller-owned part of the cluster method: per-node ingress pop rules and
// per-demand cluster-stack push rules at sources. Intra-cluster forwarding
// and border selection are agent-owned and not produced here.
struct ClusterControllerPlan {
  RuleSets rules;
  std::vector<Demand> unreachable;
};
ClusterControllerPlan compute_cluster_rules(const Partition& partition,
                                            const Overlay& overlay,
                                            const std::vector<Demand>& demands,
                                            int width, RuleIdGen& ids);

// ---- migration boundary ----------------------------------------------------

// SDN-side routing with `region` contracted out: external destinations are
// routed strictly around the region; destinations inside the region that the
// region advertises are routed to the nearest SDN node adjacent to it, which
// hands the packet to its lowest-id region neighbor. Unadvertised region
// destinations get drop rules at the source and at region-adjacent nodes.
struct ReconcilePlan {
  RuleSets rules;
  std::vector<Demand> unreachable;
  // No produced rule forwards into the region for an unadvertised dst;
  // computed defensively rather than assumed.
  bool postcondition_ok = true;
};
ReconcilePlan reconcile_boundary(const Adjacency& full_adj,
                                 const std::set<NodeId>& region,
                                 const std::set<NodeId>& advertised,
                                 const std::vector<Demand>& demands, int width,
                                 RuleIdGen& ids);

// ---- budgeted backup rules ---------------------------------------------------

struct BackupCandidate {
  NodeId node = 0;
  LinkKey link{0, 1};
  NodeId dst = 0;
  std::vector<NodeId> detour;  // node .. dst, avoiding link
  int flows = 0;               // demands whose primary uses link at node for dst
};

struct BackupPlan {
  RuleSets rules;
  // protected link -> (node, dst) pairs whose forwarding survives its loss
  std::map<std::string, std::set<std::pair<NodeId, NodeId>>> coverage;
  // link -> every (node, dst) pair routed over it, coverable or not; a link
  // is fully protected iff coverage[l] == affected[l]
  std::map<std::string, std::set<std::pair<NodeId, NodeId>>> affected;
  std::vector<BackupCandidate> uncoverable;
  int covered_flows = 0;
};

// Candidates: for every node u, incident primary-path link l and destination
// d routed over l at u, the shortest detour on adj minus l. Greedy per node by
// descending flows (ties: lower link, then lower dst) up to `budget` rules.
BackupPlan compute_backup_rules(const Adjacency& adj,
                                const std::vector<Demand>& demands, int budget,
                                int width, RuleIdGen& ids);

}  // namespace hsdn
