#include "hsdn/network.hpp"

#include <algorithm>
#include <limits>

#include "hsdn/compress.hpp"

namespace hsdn {

namespace {

std::uint64_t stack_fnv(const TagStack& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (TagId t : s.entries()) {
    h ^= t;
    h *= 1099511628211ull;
  }
  return h;
}

std::string ns(NodeId id) { return std::to_string(id); }

// Resync batches apply out of band with the wave pipeline, so a plain
// next-hop rule can interleave with a neighbor's rules from a different plan
// snapshot and form a transient cycle. Rewriting each forward as a source
// route over the static waypoint rules makes the batch inert to such mixing:
// the packet carries its whole corridor and intermediate nodes only relay on
// the tag. A walk that leaves the plan ends the corridor at the handover
// node, which routes the rest natively.
std::vector<FlowRule> source_routed_batch(const RuleSets& plan, NodeId node,
                                          const std::vector<FlowRule>& batch,
                                          RuleIdGen& ids) {
  std::vector<FlowRule> out;
  out.reserve(batch.size());
  for (const FlowRule& r : batch) {
    if (!r.forward_target() || !r.dst.is_exact()) {
      out.push_back(r);
      continue;
    }
    const NodeId d = r.dst.bits;
    std::vector<NodeId> path{node, *r.forward_target()};
    while (path.back() != d && path.size() < 64) {
      const auto at = plan.find(path.back());
      const FlowRule* next = nullptr;
      if (at != plan.end())
        for (const FlowRule& q : at->second)
          if (q.dst.is_exact() && q.dst.matches(d) && q.forward_target()) {
            next = &q;
            break;
          }
      if (!next) break;
      path.push_back(*next->forward_target());
    }
    if (path.size() <= 2 || path.size() >= 64) {
      out.push_back(r);  // direct hop, or a walk the plan cannot explain
      continue;
    }
    FlowRule sr;
    sr.id = ids.next();
    sr.priority = r.priority;
    sr.dst = r.dst;
    sr.top_tag = TagMatch::none();
    sr.origin = RuleOrigin::kController;
    for (std::size_t i = path.size(); i-- > 2;)
      sr.actions.push_back(Action::push_tag(path[i]));
    sr.actions.push_back(Action::forward(path[1]));
    out.push_back(std::move(sr));
  }
  return out;
}

}  // namespace

Network::Network(Simulator& sim, const ScenarioConfig& cfg)
    : sim_(sim), cfg_(cfg), method_(cfg.method) {
  NodeId max_id = 0;
  for (const auto& n : cfg_.nodes) max_id = std::max(max_id, n.id);
  width_ = id_bit_width(max_id);
  controller_id_ = cfg_.controller_id();
  data_nodes_ = cfg_.data_node_ids();
  ttl_ = cfg_.knobs.ttl ? cfg_.knobs.ttl
                        : 2 * static_cast<std::uint32_t>(cfg_.nodes.size());
  tag_depth_ = cfg_.knobs.tag_depth
                   ? cfg_.knobs.tag_depth
                   : std::max<std::size_t>(cfg_.nodes.size(), 4);
  measured_ = cfg_.measured_link;
  if (!measured_) {
    for (const auto& e : cfg_.schedule)
      if (e.type == EventType::kLinkDown) {
        measured_ = LinkKey(e.a, e.b);
        break;
      }
  }
}

// --- setup -----------------------------------------------------------------

void Network::start() {
  build_topology();

  for (const auto& nd : cfg_.nodes) {
    NodeState st;
    st.id = nd.id;
    st.is_controller = nd.controller;
    st.table = FlowTable(cfg_.knobs.table_capacity);
    st.live = LivenessDetector(cfg_.knobs.tau, cfg_.knobs.k);
    MigrationMachine::Config mc;
    mc.keepalive = cfg_.knobs.keepalive;
    mc.m = cfg_.knobs.m;
    mc.stability_window = cfg_.knobs.stability_window;
    mc.discovery_round = cfg_.knobs.discovery_round;
    mc.pre_execution = cfg_.knobs.pre_execution;
    st.mig = MigrationMachine(mc);
    st.mig.warm(0);
    nodes_.emplace(nd.id, std::move(st));
  }
  for (const auto& l : cfg_.links) {
    if (l.kind != LinkKind::kData) continue;
    nodes_.at(l.a).data_neighbors.insert(l.b);
    nodes_.at(l.b).data_neighbors.insert(l.a);
    if (data_nodes_.count(l.a) && data_nodes_.count(l.b))
      add_edge(static_adj_, l.a, l.b);
  }
  for (NodeId id : data_nodes_)
    if (!static_adj_.count(id)) static_adj_[id];  // isolated nodes keep a key
  for (auto& [id, n] : nodes_)
    for (NodeId v : n.data_neighbors) n.live.warm(v, 0);

  believed_ = sim_.topology();
  for (const Demand& d : cfg_.demand_pairs())
    if (d.src != d.dst) routed_.insert(d);

  warm_start();
  start_timers();
  schedule_scenario();
  for (std::size_t i = 0; i < cfg_.demands.size(); ++i)
    schedule_injection(i, 0, std::max<SimTime>(cfg_.demands[i].start, 0));
}

void Network::build_topology() {
  auto& topo = sim_.topology();
  for (const auto& n : cfg_.nodes) topo.add_node(n.id);
  for (const auto& l : cfg_.links) {
    LinkAttr a;
    a.up = true;
    a.latency = l.latency;
    a.loss_prob = l.loss_prob;
    a.kind = l.kind;
    topo.add_link(l.a, l.b, a);
  }
  sim_.set_control_channel(cfg_.control);
}

void Network::warm_start() {
  switch (method_) {
    case Method::kPureSdn:
      warm_pure_sdn();
      break;
    case Method::kBackup:
      warm_backup();
      break;
    case Method::kPureDist:
      warm_pure_dist();
      break;
    case Method::kMigration:
      warm_migration();
      break;
    case Method::kCluster:
      warm_cluster();
      break;
  }
}

void Network::warm_pure_sdn() {
  auto plan = compute_sdn_rules(believed_data_adj(), routed_vector(), width_,
                                ids_);
  for (auto& [node, rules] : plan.rules) install_direct(node, rules, true);
}

void Network::warm_backup() {
  warm_pure_sdn();
  for (NodeId id : data_nodes_) {
    NodeState& n = nodes_.at(id);
    install_direct(id, waypoint_infra_rules(id, n.data_neighbors, width_, ids_),
                   false);
  }
  backup_plan_ = compute_backup_rules(believed_data_adj(), routed_vector(),
                                      cfg_.knobs.backup_budget, width_, ids_);
  backup_rules_ = backup_plan_.rules;
  for (auto& [node, rules] : backup_rules_) install_direct(node, rules, true);
}

void Network::warm_pure_dist() {
  seed_lsdbs();
  for (NodeId id : data_nodes_) {
    NodeState& n = nodes_.at(id);
    install_direct(id, waypoint_infra_rules(id, n.data_neighbors, width_, ids_),
                   false);
    for (FlowRule& r : agent_route_rules(n)) {
      RuleId rid = r.id;
      table_install(n, r);
      n.agent_route_ids.insert(rid);
    }
  }
}

void Network::warm_migration() {
  warm_pure_sdn();
  for (NodeId id : data_nodes_) {
    NodeState& n = nodes_.at(id);
    install_direct(id, waypoint_infra_rules(id, n.data_neighbors, width_, ids_),
                   false);
    last_ack_[id] = 0;
    contact_since_[id] = 0;
  }
  if (cfg_.knobs.pre_execution) seed_lsdbs();
}

void Network::warm_cluster() {
  cluster_epoch_ = 1;
  partition_ = make_partition(believed_data_adj(), cfg_.knobs.cluster_size,
                              cluster_epoch_);
  partition_reference_ = believed_data_adj();
  for (const auto& [cid, members] : partition_.clusters)
    for (NodeId m : members) {
      NodeState& n = nodes_.at(m);
      n.cluster = cid;
      n.epoch = cluster_epoch_;
      n.members = members;
    }
  for (NodeId id : data_nodes_) {
    NodeState& n = nodes_.at(id);
    for (NodeId m : n.members)
      for (NodeId v : static_adj_.at(m))
        if (!n.members.count(v)) n.neighbor_clusters[v] = partition_.cluster_of(v);
  }
  seed_lsdbs();

  Overlay ov = make_overlay(partition_, believed_data_adj());
  auto plan =
      compute_cluster_rules(partition_, ov, routed_vector(), width_, ids_);
  for (auto& [node, rules] : plan.rules) install_direct(node, rules, true);
  for (NodeId id : data_nodes_) {
    NodeState& n = nodes_.at(id);
    install_direct(id, waypoint_infra_rules(id, n.data_neighbors, width_, ids_),
                   false);
    mirror_epoch_[id] = cluster_epoch_;
    apply_recompute(n);
  }
}

void Network::seed_lsdbs() {
  for (NodeId id : data_nodes_) nodes_.at(id).lsa_seq = 1;
  for (NodeId id : data_nodes_) {
    NodeState& target = nodes_.at(id);
    for (NodeId o : data_nodes_) {
      if (method_ == Method::kCluster && !target.members.count(o)) continue;
      target.lsdb.apply(o, 1, nodes_.at(o).data_neighbors, 0);
    }
  }
}

void Network::start_timers() {
  const Knobs& kb = cfg_.knobs;
  const bool lsa_method = method_ == Method::kPureDist ||
                          method_ == Method::kCluster ||
                          method_ == Method::kMigration;
  for (NodeId id : data_nodes_) {
    NodeState& n = nodes_.at(id);
    if (!n.data_neighbors.empty()) {
      auto phase = static_cast<SimTime>(
          sim_.rng("hb_phase/" + ns(id)).uniform() * double(kb.tau));
      sim_.schedule(phase, EventKind::kTimer, "hb_tick node=" + ns(id),
                    [this, id] { heartbeat_tick(id); });
    }
    if (lsa_method) {
      auto phase = static_cast<SimTime>(
          sim_.rng("lsa_phase/" + ns(id)).uniform() * double(kb.sigma));
      sim_.schedule(phase, EventKind::kTimer, "lsa_tick node=" + ns(id),
                    [this, id] { lsa_tick(id); });
    }
    if (method_ == Method::kMigration) {
      auto kphase = static_cast<SimTime>(
          sim_.rng("ka_phase/" + ns(id)).uniform() * double(kb.keepalive));
      sim_.schedule(kphase, EventKind::kTimer, "ka_tick node=" + ns(id),
                    [this, id] { keepalive_tick(id); });
      auto cphase = static_cast<SimTime>(
          sim_.rng("ka_check/" + ns(id)).uniform() * double(kb.keepalive));
      sim_.schedule(cphase, EventKind::kTimer, "mig_check node=" + ns(id),
                    [this, id] { migration_check_tick(id); });
    }
  }
  if (method_ != Method::kPureDist) {
    SimTime rto = cfg_.control.effective_rto();
    sim_.schedule(rto, EventKind::kTimer, "controller_tick",
                  [this] { controller_tick(); });
  }
  if (method_ == Method::kCluster &&
      kb.recluster == ReclusterPolicy::kPeriodic) {
    sim_.schedule(kb.recluster_period, EventKind::kTimer, "recluster_tick",
                  [this] { do_recluster(); });
  }
}

void Network::schedule_scenario() {
  for (const EventSpec& e : cfg_.schedule) {
    switch (e.type) {
      case EventType::kLinkDown:
      case EventType::kLinkUp: {
        const bool up = e.type == EventType::kLinkUp;
        sim_.schedule_link_event(e.a, e.b, up, e.t);
        if (measured_ && LinkKey(e.a, e.b) == *measured_)
          sim_.schedule(e.t, EventKind::kMark, "measured_link_change",
                        [this, up] { on_measured_link_change(up); });
        break;
      }
      case EventType::kControllerDisconnect:
      case EventType::kControllerReconnect: {
        const bool up = e.type == EventType::kControllerReconnect;
        for (const auto& l : cfg_.links)
          if (l.kind == LinkKind::kControl &&
              (l.a == controller_id_ || l.b == controller_id_))
            sim_.schedule_link_event(l.a, l.b, up, e.t);
        break;
      }
    }
  }
}

void Network::schedule_injection(std::size_t demand_ix, std::uint64_t n,
                                 SimTime at) {
  const DemandSpec& d = cfg_.demands[demand_ix];
  if (at >= cfg_.horizon) return;
  if (d.count && n >= d.count) return;
  sim_.schedule(at, EventKind::kTimer,
                "inject demand=" + ns(d.src) + "->" + ns(d.dst),
                [this, demand_ix, n, at] {
                  inject(demand_ix);
                  schedule_injection(demand_ix, n + 1,
                                     at + cfg_.demands[demand_ix].period);
                });
}

// --- data plane -------------------------------------------------------------

void Network::inject(std::size_t demand_ix) {
  const DemandSpec& d = cfg_.demands[demand_ix];
  ++sim_.metrics().generated;
  NodeState& src = nodes_.at(d.src);
  Packet p;
  p.id = next_packet_id_++;
  p.src = d.src;
  p.dst = d.dst;
  p.stack = TagStack(tag_depth_);
  p.tag_epoch = src.epoch;
  p.injected_at = sim_.now();
  live_packets_.insert(p.id);
  if (d.src == d.dst) {
    p.path_log.push_back({d.src, 0, stack_fnv(p.stack), 0});
    finish_deliver(src, std::move(p));
    return;
  }
  process_locally(src, std::move(p));
}

void Network::on_packet(NodeState& n, Packet pkt) {
  if (n.id == pkt.dst) {
    pkt.path_log.push_back(
        {n.id, static_cast<std::uint32_t>(pkt.stack.size()),
         stack_fnv(pkt.stack), 0});
    finish_deliver(n, std::move(pkt));
    return;
  }
  if (pkt.hop_count >= ttl_) {
    pkt.path_log.push_back(
        {n.id, static_cast<std::uint32_t>(pkt.stack.size()),
         stack_fnv(pkt.stack), 0});
    sim_.metrics().anomalies.push_back(
        {Anomaly::Kind::kTtlExpiry, pkt.id, n.id,
         "ttl " + std::to_string(ttl_) + " exhausted"});
    finish_drop(n, std::move(pkt), DropCause::kTtlExceeded);
    return;
  }
  process_locally(n, std::move(pkt));
}

void Network::process_locally(NodeState& n, Packet pkt) {
  const auto arrival_len = static_cast<std::uint32_t>(pkt.stack.size());
  const std::uint64_t arrival_hash = stack_fnv(pkt.stack);
  const auto log = [&](RuleId rid) {
    pkt.path_log.push_back({n.id, arrival_len, arrival_hash, rid});
  };
  const auto down = believed_down_fn(n);

  // A bounded number of pop/push re-matches per node keeps malformed rule
  // sets from spinning; well-formed chains are 2-3 deep.
  for (int budget = 0; budget < 8; ++budget) {
    const auto top = pkt.stack.top();
    if (method_ == Method::kCluster && top && is_cluster_tag(*top) &&
        pkt.tag_epoch != n.epoch) {
      log(0);
      // Behind the packet: our swap for its epoch has not applied yet, so
      // wait for it rather than asking for a stack we cannot interpret.
      park(n, std::move(pkt), pkt.tag_epoch < n.epoch);
      return;
    }
    const FlowRule* rule = n.table.match(pkt.dst, top, down);
    if (!rule) {
      log(0);
      if (method_ == Method::kPureSdn || method_ == Method::kBackup ||
          (method_ == Method::kMigration && n.mode == AgentMode::kSdn)) {
        Json p;
        p["node"] = n.id;
        p["dst"] = pkt.dst;
        sim_.send_control(n.id, controller_id_, "MissReport", true,
                          [this, p](const ControlDelivery&) {
                            on_miss_report(p);
                          });
      } else {
        // Every other mode installs a catch-all, so a miss means a harness
        // bug, not a routing gap.
        sim_.metrics().anomalies.push_back(
            {Anomaly::Kind::kDeadEnd, pkt.id, n.id, "table miss"});
      }
      finish_drop(n, std::move(pkt), DropCause::kNoRule);
      return;
    }
    bool acted = false;
    for (const Action& a : rule->actions) {
      switch (a.type) {
        case Action::Type::kForward:
          log(rule->id);
          forward(n, std::move(pkt), a.arg);
          return;
        case Action::Type::kDrop:
          log(rule->id);
          finish_drop(n, std::move(pkt), DropCause::kDropRule);
          return;
        case Action::Type::kPopTag:
          if (!pkt.stack.empty()) pkt.stack.pop_front();
          acted = true;
          break;
        case Action::Type::kPushTag:
          if (!pkt.stack.push_front(a.arg)) {
            log(rule->id);
            finish_drop(n, std::move(pkt), DropCause::kTagOverflow);
            return;
          }
          acted = true;
          break;
      }
    }
    if (!acted) break;  // defensively treat an empty action list as a miss
  }
  log(0);
  sim_.metrics().anomalies.push_back(
      {Anomaly::Kind::kDeadEnd, pkt.id, n.id, "re-match budget exhausted"});
  finish_drop(n, std::move(pkt), DropCause::kNoRule);
}

void Network::forward(NodeState& n, Packet pkt, NodeId out) {
  ++pkt.hop_count;
  const NodeId from = n.id;
  std::string label = "pkt=" + std::to_string(pkt.id) + " " + ns(from) + "->" +
                      ns(out);
  Packet moved = std::move(pkt);
  sim_.transmit(
      from, out, TransmitClass::kDataPacket, std::move(label),
      [this, out, moved]() mutable { on_packet(nodes_.at(out), std::move(moved)); },
      [this, from, moved](TransmitDrop d) mutable {
        DropCause c = d == TransmitDrop::kDownAtSend
                          ? DropCause::kLinkDownAtSend
                          : d == TransmitDrop::kLoss
                                ? DropCause::kLinkLoss
                                : DropCause::kLinkDownInFlight;
        finish_drop(nodes_.at(from), std::move(moved), c);
      });
}

void Network::finish_deliver(NodeState& n, Packet pkt) {
  (void)n;
  ++sim_.metrics().delivered;
  if (live_packets_.erase(pkt.id) == 0)
    record_incident("double-terminal",
                    "pkt=" + std::to_string(pkt.id) + " delivered twice");
  requery_counts_.erase(pkt.id);
  archive_.push_back(std::move(pkt));
}

void Network::finish_drop(NodeState& n, Packet pkt, DropCause cause) {
  (void)n;
  sim_.metrics().drop(cause);
  if (live_packets_.erase(pkt.id) == 0)
    record_incident("double-terminal",
                    "pkt=" + std::to_string(pkt.id) + " dropped twice");
  requery_counts_.erase(pkt.id);
  archive_.push_back(std::move(pkt));
}

void Network::park(NodeState& n, Packet pkt, bool with_query) {
  const std::uint64_t pid = pkt.id;
  int& count = requery_counts_[pid];
  if (++count > 3) {
    finish_drop(n, std::move(pkt), DropCause::kParkTimeout);
    return;
  }
  sim_.trace_event("park node=" + ns(n.id) + " pkt=" + std::to_string(pid) +
                   " query=" + (with_query ? "1" : "0"));
  const NodeId dst = pkt.dst;
  ParkedPacket pp;
  pp.pkt = std::move(pkt);
  pp.parked_at = sim_.now();
  const NodeId node = n.id;
  pp.timeout = sim_.schedule_in(
      cfg_.knobs.park_timeout, EventKind::kTimer,
      "park_timeout pkt=" + std::to_string(pid), [this, node, pid] {
        NodeState& s = nodes_.at(node);
        auto it = s.parked.find(pid);
        if (it == s.parked.end()) return;
        Packet p = std::move(it->second.pkt);
        s.parked.erase(it);
        finish_drop(s, std::move(p), DropCause::kParkTimeout);
      });
  n.parked.emplace(pid, std::move(pp));
  if (!with_query) return;
  Json q;
  q["node"] = node;
  q["dst"] = dst;
  q["packet_id"] = pid;
  sim_.send_control(node, controller_id_, "ClusterRouteQuery", true,
                    [this, q](const ControlDelivery&) { on_route_query(q); });
}

void Network::release_parked(NodeState& n) {
  if (n.parked.empty()) return;
  std::vector<std::uint64_t> ids;
  for (const auto& [pid, pp] : n.parked) ids.push_back(pid);
  for (std::uint64_t pid : ids) {
    auto it = n.parked.find(pid);
    if (it == n.parked.end()) continue;
    Simulator::cancel(it->second.timeout);
    Packet p = std::move(it->second.pkt);
    n.parked.erase(it);
    sim_.trace_event("unpark node=" + ns(n.id) + " pkt=" + std::to_string(pid));
    process_locally(n, std::move(p));
  }
}

void Network::on_route_reply(NodeId node, const Json& payload) {
  NodeState& n = nodes_.at(node);
  const std::uint64_t pid = payload.at("packet_id").get<std::uint64_t>();
  auto it = n.parked.find(pid);
  if (it == n.parked.end()) return;  // timed out or already released
  Simulator::cancel(it->second.timeout);
  Packet pkt = std::move(it->second.pkt);
  n.parked.erase(it);
  if (payload.at("drop").get<bool>()) {
    finish_drop(n, std::move(pkt), DropCause::kDropRule);
    return;
  }
  // Replace the whole stack: tags parked here are cluster tags only, and a
  // partial splice against a newer partition would mix epochs.
  TagStack fresh(tag_depth_);
  const auto& arr = payload.at("stack");
  for (auto rit = arr.rbegin(); rit != arr.rend(); ++rit)
    fresh.push_front(rit->get<TagId>());
  pkt.stack = std::move(fresh);
  pkt.tag_epoch = payload.at("epoch").get<std::uint64_t>();
  ++sim_.metrics().retags;
  sim_.trace_event("retag node=" + ns(node) + " pkt=" + std::to_string(pid));
  process_locally(n, std::move(pkt));
}

std::function<bool(NodeId)> Network::believed_down_fn(
    const NodeState& n) const {
  const LivenessDetector* live = &n.live;
  return [live](NodeId peer) { return live->believed_down(peer); };
}

// --- liveness and heartbeats -------------------------------------------------

void Network::heartbeat_tick(NodeId id) {
  NodeState& n = nodes_.at(id);
  for (NodeId v : n.data_neighbors)
    sim_.transmit(id, v, TransmitClass::kHeartbeat,
                  "hb " + ns(id) + "->" + ns(v),
                  [this, id, v] { on_heartbeat_rx(nodes_.at(v), id); });
  for (NodeId peer : n.live.check(sim_.now())) on_link_down_detected(n, peer);
  sim_.schedule_in(cfg_.knobs.tau, EventKind::kTimer, "hb_tick node=" + ns(id),
                   [this, id] { heartbeat_tick(id); });
}

void Network::on_heartbeat_rx(NodeState& n, NodeId from) {
  if (n.live.on_heartbeat(from, sim_.now())) on_link_restored(n, from);
}

void Network::on_link_down_detected(NodeState& n, NodeId peer) {
  ++sim_.metrics().detections;
  sim_.trace_event("detect_down node=" + ns(n.id) + " peer=" + ns(peer));
  note_detection(n, peer);
  switch (method_) {
    case Method::kPureSdn:
      send_link_report(n, peer, false);
      break;
    case Method::kBackup:
      if (!can_repair_locally(n, peer)) {
        if (measured_ && LinkKey(n.id, peer) == *measured_)
          record_incident("uncovered-failure",
                          "node=" + ns(n.id) + " link " +
                              LinkKey(n.id, peer).str() +
                              " has unprotected flows");
        send_link_report(n, peer, false);
      }
      break;
    case Method::kPureDist:
      originate_lsa(n);
      schedule_recompute(n);
      break;
    case Method::kMigration:
      if (n.mode == AgentMode::kSdn) {
        send_link_report(n, peer, false);
        if (lsa_participant(n)) originate_lsa(n);  // pre-execution keeps warm
      } else {
        originate_lsa(n);
        if (n.mode == AgentMode::kDistributed) schedule_recompute(n);
      }
      break;
    case Method::kCluster:
      originate_lsa(n);
      schedule_recompute(n);
      if (!link_is_intra(n, peer) ||
          cfg_.knobs.recluster == ReclusterPolicy::kThreshold)
        send_link_report(n, peer, false);
      break;
  }
  // A declaration can repair the probe by itself: predicate rules flip with
  // the belief, with no table write at all.
  try_close(nullptr, n.id);
}

void Network::on_link_restored(NodeState& n, NodeId peer) {
  sim_.trace_event("detect_up node=" + ns(n.id) + " peer=" + ns(peer));
  switch (method_) {
    case Method::kPureSdn:
      send_link_report(n, peer, true);
      break;
    case Method::kBackup:
      // The flipped predicate already put primaries back in charge; the
      // controller only needs to hear about it if it heard about the loss.
      if (!can_repair_locally(n, peer)) send_link_report(n, peer, true);
      break;
    case Method::kPureDist:
      originate_lsa(n);
      schedule_recompute(n);
      break;
    case Method::kMigration:
      if (n.mode == AgentMode::kSdn) {
        send_link_report(n, peer, true);
        if (lsa_participant(n)) originate_lsa(n);
      } else {
        originate_lsa(n);
        if (n.mode == AgentMode::kDistributed) schedule_recompute(n);
      }
      break;
    case Method::kCluster:
      originate_lsa(n);
      schedule_recompute(n);
      if (!link_is_intra(n, peer) ||
          cfg_.knobs.recluster == ReclusterPolicy::kThreshold)
        send_link_report(n, peer, true);
      break;
  }
  try_close(nullptr, n.id);
}

bool Network::link_is_intra(const NodeState& n, NodeId peer) const {
  return n.members.count(peer) != 0;
}

bool Network::can_repair_locally(const NodeState& n, NodeId peer) const {
  // Every destination we currently forward toward `peer` unconditionally
  // must have a backup rule keyed on down(peer); otherwise the controller
  // has to hear about the failure.
  std::set<NodeId> exposed, protected_;
  for (const FlowRule& r : n.table.rules()) {
    if (!r.dst.is_exact()) continue;
    if (r.pred && r.pred->neighbor == peer && r.pred->want_down) {
      protected_.insert(r.dst.bits);
      continue;
    }
    if (!r.pred && r.forward_target() && *r.forward_target() == peer)
      exposed.insert(r.dst.bits);
  }
  for (NodeId d : exposed)
    if (!protected_.count(d)) return false;
  return true;
}

void Network::send_link_report(NodeState& n, NodeId peer, bool up) {
  Json p;
  const LinkKey l(n.id, peer);
  p["a"] = l.a;
  p["b"] = l.b;
  p["up"] = up;
  p["reporter"] = n.id;
  p["detected_at"] = sim_.now();
  sim_.send_control(
      n.id, controller_id_, "LinkReport", true,
      [this, p](const ControlDelivery& dl) { on_link_report(p, dl); },
      [this, l] {
        sim_.trace_event("report_exhausted link=" + l.str());
      });
}

// --- link-state sync ----------------------------------------------------------

bool Network::lsa_participant(const NodeState& n) const {
  if (n.is_controller) return false;
  switch (method_) {
    case Method::kPureDist:
    case Method::kCluster:
      return true;
    case Method::kMigration:
      return cfg_.knobs.pre_execution || n.mode != AgentMode::kSdn;
    default:
      return false;
  }
}

void Network::lsa_tick(NodeId id) {
  NodeState& n = nodes_.at(id);
  if (lsa_participant(n)) {
    if (!n.lsdb.expire(sim_.now(), 3 * cfg_.knobs.sigma).empty())
      schedule_recompute(n);
    originate_lsa(n);
  }
  sim_.schedule_in(cfg_.knobs.sigma, EventKind::kTimer,
                   "lsa_tick node=" + ns(id), [this, id] { lsa_tick(id); });
}

void Network::originate_lsa(NodeState& n) {
  ++n.lsa_seq;
  const std::set<NodeId> up = n.live.believed_up();
  n.lsdb.apply(n.id, n.lsa_seq, up, sim_.now());
  ++sim_.metrics().messages.lsa_originated[n.id];
  flood_lsa(n, n.id, n.lsa_seq, up, cfg_.knobs.flood_scope, n.id);
}

void Network::flood_lsa(NodeState& from, NodeId origin, std::uint64_t seq,
                        const std::set<NodeId>& up, int ttl, NodeId exclude) {
  if (ttl <= 0) return;
  for (NodeId v : from.data_neighbors) {
    if (v == exclude) continue;
    if (method_ == Method::kCluster && !from.members.count(v)) continue;
    if (!data_nodes_.count(v)) continue;
    sim_.transmit(from.id, v, TransmitClass::kLsa,
                  "lsa o=" + ns(origin) + " " + ns(from.id) + "->" + ns(v),
                  [this, v, origin, seq, up, ttl] {
                    on_lsa_rx(nodes_.at(v), origin, seq, up, ttl - 1);
                  });
  }
}

void Network::on_lsa_rx(NodeState& n, NodeId origin, std::uint64_t seq,
                        const std::set<NodeId>& up, int ttl) {
  if (!lsa_participant(n)) return;
  if (method_ == Method::kCluster && !n.members.count(origin)) return;
  const auto before = n.lsdb.claims().find(origin);
  const bool same_content =
      before != n.lsdb.claims().end() && before->second.up == up;
  if (!n.lsdb.apply(origin, seq, up, sim_.now())) return;  // stale: no relay
  if (!same_content) schedule_recompute(n);
  flood_lsa(n, origin, seq, up, ttl, n.id);
}

void Network::schedule_recompute(NodeState& n) {
  if (n.recompute_pending) return;
  n.recompute_pending = true;
  const NodeId id = n.id;
  sim_.schedule_in(cfg_.knobs.a_proc + cfg_.knobs.t_install, EventKind::kTimer,
                   "recompute node=" + ns(id), [this, id] {
                     NodeState& s = nodes_.at(id);
                     if (!s.recompute_pending) return;
                     apply_recompute(s);
                   });
}

void Network::apply_recompute(NodeState& n) {
  n.recompute_pending = false;
  if (method_ == Method::kMigration && n.mode != AgentMode::kDistributed)
    return;
  for (RuleId id : n.agent_route_ids) table_remove(n, id);
  n.agent_route_ids.clear();
  for (FlowRule& r : agent_route_rules(n)) {
    RuleId rid = r.id;
    table_install(n, r);
    n.agent_route_ids.insert(rid);
  }
  try_close(nullptr, n.id);
}

std::vector<FlowRule> Network::agent_route_rules(NodeState& n) {
  std::vector<FlowRule> out;
  if (method_ == Method::kPureDist ||
      (method_ == Method::kMigration && n.mode == AgentMode::kDistributed)) {
    const Adjacency adj = n.lsdb.adjacency();
    for (const auto& [d, nbrs] : adj) {
      if (d == n.id) continue;
      auto path = shortest_path(adj, n.id, d);
      if (path.size() >= 2)
        out.push_back(
            source_route_rule(path, width_, ids_, RuleOrigin::kLocalAgent));
    }
    out.push_back(catch_all_drop(width_, ids_, RuleOrigin::kLocalAgent));
    return out;
  }
  if (method_ != Method::kCluster) return out;

  const Adjacency intra = n.lsdb.adjacency();
  for (NodeId d : n.members) {
    if (d == n.id) continue;
    auto path = shortest_path(intra, n.id, d);
    if (path.size() >= 2)
      out.push_back(
          source_route_rule(path, width_, ids_, RuleOrigin::kLocalAgent));
  }
  std::set<ClusterId> neighbor_cids;
  for (const auto& [v, c] : n.neighbor_clusters) neighbor_cids.insert(c);
  const auto dist_self = bfs_dist(intra, n.id);
  for (ClusterId c : neighbor_cids) {
    FlowRule r;
    r.id = ids_.next();
    r.priority = kPrioTag;
    r.dst = DstMatch::any(width_);
    r.top_tag = TagMatch::tag(cluster_tag(c));
    r.origin = RuleOrigin::kLocalAgent;
    std::optional<NodeId> direct;
    bool static_border = false;
    for (NodeId v : n.data_neighbors) {
      auto it = n.neighbor_clusters.find(v);
      if (it == n.neighbor_clusters.end() || it->second != c) continue;
      static_border = true;
      if (!n.live.believed_down(v)) {
        direct = v;
        break;
      }
    }
    if (direct) {
      r.actions = {Action::forward(*direct)};
    } else if (static_border) {
      // All own border links to c are down. Dropping here instead of
      // redirecting sideways keeps two stale border nodes from bouncing the
      // packet between each other.
      r.actions = {Action::drop()};
    } else {
      std::optional<NodeId> best;
      int best_d = std::numeric_limits<int>::max();
      for (const auto& [o, claim] : n.lsdb.claims()) {
        if (o == n.id || !n.members.count(o)) continue;
        bool exits = false;
        for (NodeId x : claim.up) {
          auto it = n.neighbor_clusters.find(x);
          if (it != n.neighbor_clusters.end() && it->second == c) {
            exits = true;
            break;
          }
        }
        if (!exits) continue;
        auto dit = dist_self.find(o);
        if (dit == dist_self.end()) continue;
        if (dit->second < best_d) {
          best_d = dit->second;
          best = o;
        }
      }
      bool built = false;
      if (best) {
        auto path = shortest_path(intra, n.id, *best);
        if (path.size() >= 2) {
          for (std::size_t i = path.size(); i-- > 2;)
            r.actions.push_back(Action::push_tag(path[i]));
          r.actions.push_back(Action::forward(path[1]));
          built = true;
        }
      }
      if (!built) r.actions = {Action::drop()};
    }
    out.push_back(r);
  }
  out.push_back(catch_all_drop(width_, ids_, RuleOrigin::kLocalAgent));
  return out;
}

// --- migration ----------------------------------------------------------------

void Network::keepalive_tick(NodeId id) {
  sim_.send_control(controller_id_, id, "Keepalive", false,
                    [this, id](const ControlDelivery&) {
                      NodeState& n = nodes_.at(id);
                      n.mig.on_keepalive(sim_.now());
                      const AgentMode mode = n.mig.mode();
                      const SimTime sampled = sim_.now();
                      sim_.send_control(id, controller_id_, "KeepaliveAck",
                                        false,
                                        [this, id, mode,
                                         sampled](const ControlDelivery&) {
                                          on_keepalive_ack(id, mode, sampled);
                                        });
                    });

  const SimTime now = sim_.now();
  const SimTime miss_window = cfg_.knobs.m * cfg_.knobs.keepalive;
  if (now - last_ack_[id] >= miss_window && !region_.count(id)) {
    region_.insert(id);
    installed_.erase(id);
    stale_nodes_.erase(id);
    resync_sent_.erase(id);
    mode_asof_[id] = now;  // silence verdict outranks older in-flight acks
    sim_.trace_event("region_enter node=" + ns(id));
    sim_.send_control(controller_id_, id, "MigrateCmd", false,
                      [this, id](const ControlDelivery&) {
                        NodeState& n = nodes_.at(id);
                        enter_modes(n, n.mig.force_migrate(sim_.now()));
                      });
    mark_dirty();
  }
  if (region_.count(id)) {
    auto am = ack_mode_.find(id);
    auto cs = contact_since_.find(id);
    if (am != ack_mode_.end() && am->second == AgentMode::kDistributed &&
        cs != contact_since_.end() && last_ack_[id] > cs->second &&
        now - cs->second >= cfg_.knobs.stability_window)
      send_resync(id);
  }
  sim_.schedule_in(cfg_.knobs.keepalive, EventKind::kTimer,
                   "ka_tick node=" + ns(id), [this, id] { keepalive_tick(id); });
}

void Network::migration_check_tick(NodeId id) {
  NodeState& n = nodes_.at(id);
  enter_modes(n, n.mig.check(sim_.now()));
  sim_.schedule_in(cfg_.knobs.keepalive, EventKind::kTimer,
                   "mig_check node=" + ns(id),
                   [this, id] { migration_check_tick(id); });
}

void Network::enter_modes(NodeState& n, const std::vector<AgentMode>& entered) {
  for (AgentMode m : entered) {
    n.mode = m;
    sim_.trace_event("mode node=" + ns(n.id) +
                     " mode=" + agent_mode_name(m));
    if (m == AgentMode::kMigrating) originate_lsa(n);
    if (m == AgentMode::kDistributed) apply_distributed_entry(n);
  }
}

void Network::apply_distributed_entry(NodeState& n) {
  const NodeId id = n.id;
  sim_.schedule_in(cfg_.knobs.t_install, EventKind::kTimer,
                   "distributed_entry node=" + ns(id), [this, id] {
                     NodeState& s = nodes_.at(id);
                     if (s.mode != AgentMode::kDistributed) return;
                     std::vector<RuleId> gone;
                     for (const FlowRule& r : s.table.rules())
                       if (r.origin == RuleOrigin::kController)
                         gone.push_back(r.id);
                     for (RuleId rid : gone) table_remove(s, rid);
                     apply_recompute(s);
                   });
}

void Network::on_keepalive_ack(NodeId node, AgentMode mode, SimTime sampled) {
  const SimTime now = sim_.now();
  const SimTime miss_window = cfg_.knobs.m * cfg_.knobs.keepalive;
  if (now - last_ack_[node] >= miss_window) contact_since_[node] = now;
  last_ack_[node] = now;
  // Acks can overtake each other and a resync completion; a mode sampled
  // before evidence we already acted on says nothing about the present.
  if (sampled < mode_asof_[node]) return;
  mode_asof_[node] = sampled;
  ack_mode_[node] = mode;
  if (mode == AgentMode::kSdn) {
    confirm_sdn(node, sampled);
  } else if (region_.insert(node).second) {
    // The node migrated on its own; the miss detector had not fired yet.
    installed_.erase(node);
    resync_sent_.erase(node);
    sim_.trace_event("region_enter node=" + ns(node));
    mark_dirty();
  }
}

void Network::confirm_sdn(NodeId node, SimTime sampled) {
  if (sampled < mode_asof_[node]) return;
  mode_asof_[node] = sampled;
  if (!region_.erase(node)) return;
  // The mirror becomes the pinned batch: that is exactly what the node's
  // table holds the instant the resync applied.
  auto& mir = installed_[node];
  mir.clear();
  auto rs = resync_sent_.find(node);
  if (rs != resync_sent_.end()) {
    for (const FlowRule& r : rs->second) mir[r.signature()] = r;
    resync_sent_.erase(rs);
  }
  sim_.trace_event("region_exit node=" + ns(node));
  mark_dirty();
}

void Network::send_resync(NodeId node) {
  auto it = resync_sent_.find(node);
  if (it == resync_sent_.end()) {
    // Pin the batch now and retransmit it byte-identical until the ack:
    // whichever copy the node applies is then exactly what the mirror says.
    // Nodes that already hold a pinned batch are committed to SDN even if
    // their confirming keepalive has not come back yet; planning around
    // them as if still distributed would route traffic into rules they no
    // longer have.
    std::set<NodeId> region_after = region_;
    region_after.erase(node);
    for (const auto& [sent, _] : resync_sent_) region_after.erase(sent);
    RuleSets rs;
    if (region_after.empty()) {
      rs = compute_sdn_rules(believed_data_adj(), routed_vector(), width_,
                             ids_).rules;
    } else {
      rs = reconcile_boundary(believed_data_adj(), region_after, region_after,
                              routed_vector(), width_, ids_).rules;
    }
    std::vector<FlowRule> batch;
    if (auto found = rs.find(node); found != rs.end())
      batch = source_routed_batch(rs, node, found->second, ids_);
    it = resync_sent_.emplace(node, std::move(batch)).first;
  }
  Json p;
  p["node"] = node;
  Json arr = Json::array();
  for (const FlowRule& r : it->second) arr.push_back(rule_to_json(r));
  p["rules"] = arr;
  sim_.trace_event("resync_tx node=" + ns(node));
  sim_.send_control(controller_id_, node, "ResyncCmd", true,
                    [this, node, p](const ControlDelivery&) {
                      on_resync_cmd(nodes_.at(node), p);
                    });
}

void Network::on_resync_cmd(NodeState& n, const Json& payload) {
  if (method_ != Method::kMigration) return;
  if (!n.mig.on_resync(sim_.now())) {
    sim_.trace_event("resync_reject node=" + ns(n.id));
    return;
  }
  n.mode = AgentMode::kSdn;
  sim_.trace_event("mode node=" + ns(n.id) + " mode=sdn");
  const Json rules = payload.at("rules");
  const NodeId id = n.id;
  sim_.schedule_in(cfg_.knobs.t_install, EventKind::kTimer,
                   "resync_apply node=" + ns(id), [this, id, rules] {
                     NodeState& s = nodes_.at(id);
                     if (s.mode != AgentMode::kSdn) return;
                     std::vector<RuleId> gone;
                     for (const FlowRule& r : s.table.rules())
                       if (r.origin == RuleOrigin::kController ||
                           s.agent_route_ids.count(r.id))
                         gone.push_back(r.id);
                     for (RuleId rid : gone) table_remove(s, rid);
                     s.agent_route_ids.clear();
                     for (const auto& rj : rules)
                       table_install(s, rule_from_json(rj));
                     try_close(nullptr, id);
                     // Waiting for the next keepalive round to notice the
                     // mode change would leave the controller planning
                     // around this node for up to a full period; report
                     // completion directly instead.
                     sim_.send_control(id, controller_id_, "ResyncDone", true,
                                       [this, id](const ControlDelivery&) {
                                         confirm_sdn(id);
                                       });
                   });
}

// --- controller -----------------------------------------------------------

void Network::on_link_report(const Json& payload, const ControlDelivery& dl) {
  const NodeId a = payload.at("a").get<NodeId>();
  const NodeId b = payload.at("b").get<NodeId>();
  const bool up = payload.at("up").get<bool>();
  const LinkKey l(a, b);
  if (!up) ++sim_.metrics().link_reports_received[l.str()];

  if (!up && measured_ && l == *measured_ && meas_ && !meas_->closed &&
      !meas_->chain_started) {
    meas_->chain_started = true;
    meas_->detected = true;
    // The reporter detected at first_sent; measuring the chain from there
    // makes the component sum exact.
    meas_->detected_at = dl.first_sent;
    meas_->detector = payload.at("reporter").get<NodeId>();
    meas_->signal_up = dl.latency;
    meas_->retries_up = dl.retry_wait;
    meas_->report_arrived = dl.arrived_at;
  }

  const bool changed = believed_.link_up(a, b) != up;
  sim_.trace_event("report_rx link=" + l.str() + " up=" +
                   (up ? "1" : "0") + " changed=" + (changed ? "1" : "0"));
  if (!changed) return;
  believed_.set_link_up(a, b, up);
  mark_dirty();
  if (!up && method_ == Method::kCluster &&
      cfg_.knobs.recluster == ReclusterPolicy::kThreshold) {
    auto ca = partition_.of_node.find(a);
    auto cb = partition_.of_node.find(b);
    if (ca != partition_.of_node.end() && cb != partition_.of_node.end() &&
        ca->second == cb->second) {
      const double frac = intra_loss_fraction(
          partition_, ca->second, partition_reference_, believed_data_adj());
      if (frac >= cfg_.knobs.recluster_threshold) do_recluster();
    }
  }
}

void Network::on_miss_report(const Json& payload) {
  Demand d{payload.at("node").get<NodeId>(), payload.at("dst").get<NodeId>()};
  if (d.src == d.dst) return;
  if (!nodes_.count(d.dst)) return;
  if (routed_.insert(d).second) mark_dirty();
}

void Network::on_route_query(const Json& payload) {
  if (method_ != Method::kCluster) return;
  const NodeId node = payload.at("node").get<NodeId>();
  const NodeId dst = payload.at("dst").get<NodeId>();
  Json r;
  r["node"] = node;
  r["dst"] = dst;
  r["packet_id"] = payload.at("packet_id");
  r["epoch"] = cluster_epoch_;
  Json stack = Json::array();
  bool drop = true;
  auto cn = partition_.of_node.find(node);
  auto cd = partition_.of_node.find(dst);
  if (cn != partition_.of_node.end() && cd != partition_.of_node.end()) {
    Overlay ov = make_overlay(partition_, believed_data_adj());
    auto seq = cluster_sequence(ov, cn->second, cd->second);
    if (seq) {
      drop = false;
      for (ClusterId c : *seq) stack.push_back(cluster_tag(c));
    }
  }
  r["stack"] = stack;
  r["drop"] = drop;
  sim_.send_control(controller_id_, node, "ClusterRouteReply", true,
                    [this, node, r](const ControlDelivery&) {
                      on_route_reply(node, r);
                    });
}

void Network::mark_dirty() {
  dirty_ = true;
  if (wave_ || wave_start_pending_) return;
  wave_start_pending_ = true;
  sim_.schedule_in(cfg_.knobs.c_proc, EventKind::kTimer, "wave_start",
                   [this] {
                     wave_start_pending_ = false;
                     maybe_start_wave();
                   });
}

void Network::controller_tick() {
  bool retry = dirty_;
  if (!retry)
    for (NodeId s : stale_nodes_)
      if (sim_.topology().reachable(controller_id_, s)) {
        retry = true;
        break;
      }
  if (retry && !wave_ && !wave_start_pending_) maybe_start_wave();
  sim_.schedule_in(cfg_.control.effective_rto(), EventKind::kTimer,
                   "controller_tick", [this] { controller_tick(); });
}

void Network::maybe_start_wave() {
  if (wave_) return;
  // An unconfirmed resync is a routing commitment the planner cannot place
  // yet: the node already holds its pinned batch, but region_ still counts
  // it as distributed. A wave planned now would route around a boundary
  // that no longer exists. The confirming ack marks dirty again, so the
  // deferral ends with the last outstanding pin.
  if (!resync_sent_.empty()) return;
  if (!dirty_ && stale_nodes_.empty()) return;
  start_wave();
}

RuleSets Network::desired_controller_rules() {
  switch (method_) {
    case Method::kPureSdn:
      return compute_sdn_rules(believed_data_adj(), routed_vector(), width_,
                               ids_).rules;
    case Method::kBackup: {
      auto rules = compute_sdn_rules(believed_data_adj(), routed_vector(),
                                     width_, ids_).rules;
      for (const auto& [node, bs] : backup_rules_) {
        auto& v = rules[node];
        v.insert(v.end(), bs.begin(), bs.end());
      }
      return rules;
    }
    case Method::kMigration: {
      if (region_.empty())
        return compute_sdn_rules(believed_data_adj(), routed_vector(), width_,
                                 ids_).rules;
      auto plan = reconcile_boundary(believed_data_adj(), region_, region_,
                                     routed_vector(), width_, ids_);
      if (!plan.postcondition_ok)
        record_incident("reconcile-postcondition",
                        "a rule forwards into the region");
      return plan.rules;
    }
    case Method::kCluster: {
      Overlay ov = make_overlay(partition_, believed_data_adj());
      return compute_cluster_rules(partition_, ov, routed_vector(), width_,
                                   ids_).rules;
    }
    case Method::kPureDist:
      return {};
  }
  return {};
}

void Network::start_wave() {
  dirty_ = false;
  Wave w;
  w.started_at = sim_.now();

  RuleSets desired = desired_controller_rules();
  if (cfg_.knobs.compress)
    for (auto& [node, rules] : desired)
      rules = compress_rules(rules, static_cast<unsigned>(width_), ids_);

  // Round assignment: a forwarding rule for destination d applies in round
  // dist(node, d) - 1 on the believed post-change graph, so every node it can
  // send to is already re-pointed when it switches (downstream first). A
  // packet that enters updated territory then walks strictly decreasing
  // distances, and stale-only territory is loop-free because the old config
  // was. Rules for destinations inside a migration region use the distance
  // to the region border instead.
  const Adjacency believed = believed_data_adj();
  std::set<std::uint32_t> keep;
  for (NodeId id : data_nodes_)
    if (!region_.count(id)) keep.insert(id);
  const Adjacency routing_adj = induced(believed, keep);
  std::map<std::uint32_t, int> border_dist;
  if (method_ == Method::kMigration && !region_.empty()) {
    std::set<std::uint32_t> border;
    for (const auto& [id, nbrs] : routing_adj) {
      auto bit = believed.find(id);
      if (bit == believed.end()) continue;
      for (NodeId v : bit->second)
        if (region_.count(v)) {
          border.insert(id);
          break;
        }
    }
    border_dist = bfs_dist_multi(routing_adj, border);
  }
  std::map<NodeId, std::map<std::uint32_t, int>> dist_cache;
  const auto round_of = [&](NodeId node, const FlowRule& r) -> std::size_t {
    if (cfg_.knobs.compress) return 0;  // mixed prefixes collapse the order
    if (!r.forward_target() || !r.dst.is_exact()) return 0;
    const NodeId d = r.dst.bits;
    if (method_ == Method::kMigration && region_.count(d)) {
      auto it = border_dist.find(node);
      return it == border_dist.end() ? 0 : static_cast<std::size_t>(it->second);
    }
    auto [cit, fresh] = dist_cache.try_emplace(d);
    if (fresh) cit->second = bfs_dist(routing_adj, d);
    auto it = cit->second.find(node);
    if (it == cit->second.end() || it->second <= 0) return 0;
    return static_cast<std::size_t>(it->second - 1);
  };

  std::map<std::size_t, std::vector<WaveMsg>> rounds;
  std::vector<WaveMsg> removal_only;
  for (NodeId node : data_nodes_) {
    if (method_ == Method::kMigration && region_.count(node)) continue;
    static const std::vector<FlowRule> kNone;
    auto dit = desired.find(node);
    const std::vector<FlowRule>& want_rules =
        dit == desired.end() ? kNone : dit->second;
    auto& have = installed_[node];
    std::map<std::string, const FlowRule*> want;
    for (const FlowRule& r : want_rules) want.emplace(r.signature(), &r);

    std::vector<const FlowRule*> adds;
    std::vector<std::pair<std::string, const FlowRule*>> rms;
    for (const auto& [sig, rp] : want)
      if (!have.count(sig)) adds.push_back(rp);
    for (const auto& [sig, old] : have)
      if (!want.count(sig)) rms.push_back({sig, &old});
    const bool epoch_stale =
        method_ == Method::kCluster && mirror_epoch_[node] != cluster_epoch_;
    if (adds.empty() && rms.empty() && !epoch_stale) continue;

    if (!sim_.topology().reachable(controller_id_, node)) {
      if (stale_nodes_.insert(node).second)
        record_incident("unreconfigured-node",
                        "node=" + ns(node) + " unreachable; rules stale");
      w.any_exhausted = true;
      continue;
    }
    stale_nodes_.erase(node);

    if (method_ == Method::kCluster) {
      // Cluster batches swap the whole controller-owned slice in one apply;
      // parking absorbs the cross-node skew.
      WaveMsg m;
      m.node = node;
      m.swap = true;
      for (const auto& [sig, rp] : want) m.installs.push_back(*rp);
      rounds[0].push_back(std::move(m));
      continue;
    }

    std::map<std::size_t, WaveMsg> split;
    std::map<std::uint32_t, std::size_t> dst_round;
    for (const FlowRule* rp : adds) {
      const std::size_t rd = round_of(node, *rp);
      WaveMsg& m = split[rd];
      m.node = node;
      m.installs.push_back(*rp);
      if (rp->dst.is_exact()) {
        auto it = dst_round.find(rp->dst.bits);
        if (it == dst_round.end() || rd > it->second)
          dst_round[rp->dst.bits] = rd;
      }
    }
    WaveMsg leftovers;
    leftovers.node = node;
    for (const auto& [sig, old] : rms) {
      // Same-destination replacements must swap atomically: the old rule has
      // the lower id and would keep winning ties until removed.
      std::optional<std::size_t> rd;
      if (old->dst.is_exact()) {
        auto it = dst_round.find(old->dst.bits);
        if (it != dst_round.end()) rd = it->second;
      } else if (cfg_.knobs.compress && !split.empty()) {
        rd = split.begin()->first;
      }
      if (rd) {
        WaveMsg& m = split[*rd];
        m.node = node;
        m.removes.push_back(old->id);
        m.remove_sigs.push_back(sig);
      } else {
        leftovers.removes.push_back(old->id);
        leftovers.remove_sigs.push_back(sig);
      }
    }
    for (auto& [rd, m] : split) rounds[rd].push_back(std::move(m));
    if (!leftovers.removes.empty()) removal_only.push_back(std::move(leftovers));
  }

  for (auto& [rd, msgs] : rounds) w.rounds.push_back(std::move(msgs));
  if (!removal_only.empty()) w.rounds.push_back(std::move(removal_only));

  std::size_t msgs = 0;
  for (const auto& rd : w.rounds) msgs += rd.size();
  sim_.trace_event("wave_start rounds=" + std::to_string(w.rounds.size()) +
                   " msgs=" + std::to_string(msgs));
  wave_ = std::move(w);
  if (wave_->rounds.empty())
    wave_complete();
  else
    send_wave_round();
}

void Network::send_wave_round() {
  const auto& round = wave_->rounds[wave_->round];
  wave_->unresolved = static_cast<int>(round.size());
  wave_->round_last_apply = sim_.now();
  for (const WaveMsg& m : round) {
    Json p;
    p["node"] = m.node;
    p["swap"] = m.swap;
    Json arr = Json::array();
    for (const FlowRule& r : m.installs) arr.push_back(rule_to_json(r));
    p["rules"] = arr;
    p["remove_ids"] = m.removes;
    if (method_ == Method::kCluster) push_cluster_state(p, m.node);

    const NodeId node = m.node;
    const bool swap = m.swap;
    const std::vector<FlowRule> sent = m.installs;
    const std::vector<std::string> rsigs = m.remove_sigs;
    const std::uint64_t ep = cluster_epoch_;
    sim_.send_control(
        controller_id_, node, "RuleInstall", true,
        [this, node, p, swap, sent, rsigs, ep](const ControlDelivery& dl) {
          // The apply below is deterministic, so mirror it at delivery.
          auto& mir = installed_[node];
          if (swap) mir.clear();
          for (const std::string& sig : rsigs) mir.erase(sig);
          for (const FlowRule& r : sent) mir[r.signature()] = r;
          if (method_ == Method::kCluster) mirror_epoch_[node] = ep;
          const SimTime apply_at = sim_.now() + cfg_.knobs.t_install;
          sim_.schedule(apply_at, EventKind::kTimer,
                        "rule_apply node=" + ns(node),
                        [this, node, p, dl] { apply_install(node, p, dl); });
          resolve_wave_msg(true, apply_at);
        },
        [this, node] {
          if (stale_nodes_.insert(node).second)
            record_incident("unreconfigured-node",
                            "node=" + ns(node) + " install retries exhausted");
          resolve_wave_msg(false, 0);
        });
  }
  if (round.empty()) advance_wave();
}

void Network::resolve_wave_msg(bool delivered, SimTime apply_at) {
  if (!wave_) return;
  Wave& w = *wave_;
  if (delivered)
    w.round_last_apply = std::max(w.round_last_apply, apply_at);
  else
    w.any_exhausted = true;
  if (--w.unresolved > 0) return;
  const SimTime at = std::max(sim_.now(), w.round_last_apply);
  sim_.schedule(at, EventKind::kTimer, "wave_advance",
                [this] { advance_wave(); });
}

void Network::advance_wave() {
  if (!wave_) return;
  ++wave_->round;
  if (wave_->round < wave_->rounds.size())
    send_wave_round();
  else
    wave_complete();
}

void Network::apply_install(NodeId node, const Json& payload,
                            const ControlDelivery& dl) {
  NodeState& n = nodes_.at(node);
  if (method_ == Method::kMigration && n.mode != AgentMode::kSdn) {
    sim_.trace_event("install_reject node=" + ns(node) +
                     " mode=" + agent_mode_name(n.mode));
    return;
  }
  if (payload.at("swap").get<bool>()) {
    std::vector<RuleId> gone;
    for (const FlowRule& r : n.table.rules())
      if (r.origin == RuleOrigin::kController) gone.push_back(r.id);
    for (RuleId rid : gone) table_remove(n, rid);
  }
  for (const auto& rid : payload.at("remove_ids"))
    table_remove(n, rid.get<RuleId>());
  std::size_t installs = 0;
  for (const auto& rj : payload.at("rules")) {
    table_install(n, rule_from_json(rj));
    ++installs;
  }
  sim_.trace_event("rule_apply node=" + ns(node) +
                   " install=" + std::to_string(installs) +
                   " remove=" + std::to_string(payload.at("remove_ids").size()) +
                   " swap=" + payload.at("swap").dump());

  if (method_ == Method::kCluster && payload.contains("own_cluster")) {
    const auto ep = payload.at("epoch").get<std::uint64_t>();
    const bool epoch_changed = ep != n.epoch;
    n.epoch = ep;
    n.cluster = payload.at("own_cluster").get<ClusterId>();
    n.members.clear();
    for (const auto& m : payload.at("members"))
      n.members.insert(m.get<NodeId>());
    n.neighbor_clusters.clear();
    for (const auto& pair : payload.at("neighbor_clusters"))
      n.neighbor_clusters[pair.at(0).get<NodeId>()] =
          pair.at(1).get<ClusterId>();
    if (epoch_changed) {
      Lsdb pruned;
      for (const auto& [o, c] : n.lsdb.claims())
        if (n.members.count(o)) pruned.apply(o, c.seq, c.up, c.received_at);
      n.lsdb = std::move(pruned);
    }
    apply_recompute(n);
    if (epoch_changed) release_parked(n);
  }
  try_close(&dl);
}

void Network::wave_complete() {
  sim_.trace_event("wave_done exhausted=" +
                   std::string(wave_->any_exhausted ? "1" : "0"));
  wave_.reset();
  if (dirty_) mark_dirty();  // re-schedules the next wave after c_proc
}

void Network::do_recluster() {
  if (method_ != Method::kCluster) return;
  ++sim_.metrics().reclusters;
  ++cluster_epoch_;
  partition_ = make_partition(believed_data_adj(), cfg_.knobs.cluster_size,
                              cluster_epoch_);
  partition_reference_ = believed_data_adj();
  sim_.trace_event("recluster epoch=" + std::to_string(cluster_epoch_) +
                   " clusters=" + std::to_string(partition_.size()));
  mark_dirty();
  if (cfg_.knobs.recluster == ReclusterPolicy::kPeriodic)
    sim_.schedule_in(cfg_.knobs.recluster_period, EventKind::kTimer,
                     "recluster_tick", [this] { do_recluster(); });
}

void Network::push_cluster_state(Json& payload, NodeId node) const {
  payload["epoch"] = cluster_epoch_;
  const ClusterId c = partition_.of_node.at(node);
  payload["own_cluster"] = c;
  Json mem = Json::array();
  const auto& members = partition_.clusters.at(c);
  for (NodeId m : members) mem.push_back(m);
  payload["members"] = mem;
  Json nc = Json::array();
  std::map<NodeId, ClusterId> neigh;
  for (NodeId m : members) {
    auto it = static_adj_.find(m);
    if (it == static_adj_.end()) continue;
    for (NodeId v : it->second)
      if (!members.count(v)) neigh[v] = partition_.of_node.at(v);
  }
  for (const auto& [v, cid] : neigh) nc.push_back(Json::array({v, cid}));
  payload["neighbor_clusters"] = nc;
}

// --- measurement ------------------------------------------------------------

void Network::on_measured_link_change(bool up) {
  if (!up) {
    if (meas_ && !meas_->closed) {
      const SimTime start = meas_->detected ? meas_->detected_at
                                            : meas_->failed_at;
      const SimTime delay = sim_.now() - start;
      emit_sample(delay, 0, delay, 0, 0, 0, true);
      meas_->closed = true;
    }
    meas_.emplace();
    meas_->failed_at = sim_.now();
    for (const Demand& d : cfg_.demand_pairs())
      if (d.src != d.dst && !probe_deliverable(d.src, d.dst))
        meas_->affected.push_back(d);
    sim_.trace_event("measured_down affected=" +
                     std::to_string(meas_->affected.size()));
    return;
  }
  sim_.trace_event("measured_up");
  if (!meas_ || meas_->closed) return;
  if (!meas_->detected) {
    meas_.reset();  // a blip nobody saw leaves no sample
    return;
  }
  // Restoration repaired the network before the reaction finished; the
  // reaction time is unobservable past this point.
  const SimTime delay = sim_.now() - meas_->detected_at;
  emit_sample(delay, 0, delay, 0, 0, 0, true);
  meas_->closed = true;
}

void Network::note_detection(NodeState& n, NodeId peer) {
  if (!measured_ || LinkKey(n.id, peer) != *measured_) return;
  if (!meas_ || meas_->closed) return;
  meas_->endpoint_declared.emplace(n.id, sim_.now());
  if (meas_->detected) return;
  meas_->detected = true;
  meas_->detected_at = sim_.now();
  meas_->detector = n.id;
}

bool Network::probe_deliverable(NodeId src, NodeId dst) const {
  NodeId at = src;
  TagStack stack(tag_depth_);
  const std::uint64_t epoch = nodes_.at(src).epoch;
  for (std::uint32_t hops = 0; hops <= ttl_; ++hops) {
    if (at == dst) return true;
    const NodeState& n = nodes_.at(at);
    bool moved = false;
    for (int budget = 0; budget < 8 && !moved; ++budget) {
      const auto top = stack.top();
      if (method_ == Method::kCluster && top && is_cluster_tag(*top) &&
          epoch != n.epoch)
        return false;  // would park
      const LivenessDetector* live = &n.live;
      const FlowRule* rule = n.table.match(
          dst, top, [live](NodeId p) { return live->believed_down(p); });
      if (!rule) return false;
      bool acted = false;
      for (const Action& a : rule->actions) {
        if (a.type == Action::Type::kForward) {
          if (!sim_.topology().link_up(n.id, a.arg)) return false;
          at = a.arg;
          moved = true;
          acted = true;
          break;
        }
        if (a.type == Action::Type::kDrop) return false;
        if (a.type == Action::Type::kPopTag) {
          if (stack.empty()) return false;
          stack.pop_front();
          acted = true;
        } else if (a.type == Action::Type::kPushTag) {
          if (!stack.push_front(a.arg)) return false;
          acted = true;
        }
      }
      if (!acted) return false;
    }
    if (!moved) return false;
  }
  return false;
}

void Network::try_close(const ControlDelivery* dl,
                        std::optional<NodeId> local_node) {
  if (!meas_ || meas_->closed || !meas_->detected) return;
  for (const Demand& d : meas_->affected)
    if (!probe_deliverable(d.src, d.dst)) return;
  SimTime anchor = meas_->detected_at;
  if (!dl && local_node) {
    auto it = meas_->endpoint_declared.find(*local_node);
    if (it != meas_->endpoint_declared.end()) anchor = it->second;
  }
  const SimTime delay = sim_.now() - anchor;
  SimTime sig_up = 0, retries = 0, compute = 0, sig_down = 0, install = 0;
  bool attributed = false;
  if (dl && meas_->chain_started) {
    sig_down = dl->latency;
    retries = meas_->retries_up + dl->retry_wait;
    install = cfg_.knobs.t_install;
    sig_up = meas_->signal_up;
    compute = delay - sig_up - retries - sig_down - install;
    attributed = compute >= 0;
  }
  if (!attributed) {
    // Local repair: detection-to-recompute wait plus the agent's compute and
    // install costs; no control-channel legs.
    sig_down = 0;
    retries = 0;
    install = std::min<SimTime>(delay, cfg_.knobs.t_install);
    compute = std::min<SimTime>(delay - install, cfg_.knobs.a_proc);
    sig_up = delay - install - compute;
  }
  emit_sample(delay, sig_up, compute, sig_down, install, retries, false);
  meas_->closed = true;
}

void Network::emit_sample(SimTime delay, SimTime sig_up, SimTime compute,
                          SimTime sig_down, SimTime install, SimTime retries,
                          bool censored) {
  DelaySample s;
  s.method = method_name(method_);
  s.delay_us = delay;
  s.signal_up_us = sig_up;
  s.compute_us = compute;
  s.signal_down_us = sig_down;
  s.install_us = install;
  s.retries_us = retries;
  s.censored = censored;
  if (delay != sig_up + compute + sig_down + install + retries)
    record_incident("sample-accounting",
                    "component sum mismatch at delay=" + std::to_string(delay));
  samples_.push_back(s);
  sim_.trace_event("sample delay=" + std::to_string(delay) +
                   " up=" + std::to_string(sig_up) +
                   " compute=" + std::to_string(compute) +
                   " down=" + std::to_string(sig_down) +
                   " install=" + std::to_string(install) +
                   " retries=" + std::to_string(retries) +
                   " censored=" + (censored ? "1" : "0"));
}

// --- shared helpers -----------------------------------------------------------

Adjacency Network::believed_data_adj() const {
  return data_adjacency(believed_, data_nodes_);
}

void Network::install_direct(NodeId node, const std::vector<FlowRule>& rules,
                             bool mirror) {
  NodeState& n = nodes_.at(node);
  for (const FlowRule& r : rules) {
    table_install(n, r);
    if (mirror) installed_[node][r.signature()] = r;
  }
}

void Network::table_install(NodeState& n, const FlowRule& rule) {
  rule.validate();
  if (!n.table.install(rule)) {
    ++sim_.metrics().table_overflows;
    return;
  }
  ++sim_.metrics().rule_installs;
}

void Network::table_remove(NodeState& n, RuleId id) {
  if (n.table.remove(id)) ++sim_.metrics().rule_removes;
}

std::vector<Demand> Network::routed_vector() const {
  return {routed_.begin(), routed_.end()};
}

void Network::record_incident(const std::string& kind,
                              const std::string& detail) {
  sim_.metrics().incidents.push_back({kind, detail, sim_.now()});
  sim_.trace_event("incident kind=" + kind + " detail=" + detail);
}

void Network::finalize() {
  if (meas_ && !meas_->closed) {
    const SimTime start = meas_->detected ? meas_->detected_at
                                          : meas_->failed_at;
    const SimTime delay = std::max<SimTime>(cfg_.horizon - start, 0);
    emit_sample(delay, 0, delay, 0, 0, 0, true);
    meas_->closed = true;
  }
  auto& m = sim_.metrics();
  m.in_flight_end = live_packets_.size();
  for (const auto& [id, n] : nodes_) m.table_high_water[id] = n.table.high_water();
}

}  // namespace hsdn
