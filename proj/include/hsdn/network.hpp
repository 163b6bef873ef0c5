#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hsdn/agent_core.hpp"
#include "hsdn/clustering.hpp"
#include "hsdn/compress.hpp"
#include "hsdn/config.hpp"
#include "hsdn/dataplane.hpp"
#include "hsdn/messages.hpp"
#include "hsdn/planner.hpp"
#include "hsdn/sim.hpp"

namespace hsdn {

struct ParkedPacket {
  Packet pkt;
  SimTime parked_at = 0;
  EventHandle timeout;
};

// Everything one node owns: its flow table, liveness beliefs, link-state
// database, migration state machine and clustering view. The Network class
// is the only writer.
struct NodeState {
  NodeId id = 0;
  bool is_controller = false;
  AgentMode mode = AgentMode::kSdn;
  FlowTable table;
  LivenessDetector live;
  MigrationMachine mig;
  Lsdb lsdb;
  std::uint64_t lsa_seq = 0;  // own-origin sequence counter

  ClusterId cluster = 0;
  std::uint64_t epoch = 0;
  std::set<NodeId> members;                       // own cluster, incl. self
  std::map<NodeId, ClusterId> neighbor_clusters;  // nodes adjacent to cluster

  std::set<NodeId> data_neighbors;  // static, from the configured topology
  std::map<std::uint64_t, ParkedPacket> parked;

  bool recompute_pending = false;
  std::set<RuleId> agent_route_ids;  // rebuilt wholesale on each recompute
};

// One failure of the measured link and the reaction to it. `affected` holds
// the demands whose forwarding the failure actually broke (probed at the
// failure instant); the sample closes at the first table change after
// detection that makes all of them deliverable again.
struct Measurement {
  SimTime failed_at = 0;
  std::vector<Demand> affected;
  bool detected = false;
  SimTime detected_at = 0;
  NodeId detector = 0;
  // Per-endpoint declaration instants. A local repair completed by endpoint
  // n is n's own reaction, so its sample is clocked from n's declaration.
  std::map<NodeId, SimTime> endpoint_declared;
  bool chain_started = false;  // the failure report reached the controller
  SimTime signal_up = 0;       // flight of the delivering report attempt
  SimTime retries_up = 0;
  SimTime report_arrived = 0;
  bool closed = false;
};

// Wires the whole scenario together on top of the simulator: builds the
// topology, warms per-method tables, runs agents and the controller, and
// keeps the packet archive and delay samples that the scenario layer turns
// into artifacts.
class Network {
 public:
  Network(Simulator& sim, const ScenarioConfig& cfg);

  // Populates the simulator topology, installs warm-start tables, starts all
  // periodic machinery and schedules scenario events and packet injections.
  void start();

  // Called once the clock reached the horizon: censors open measurements and
  // snapshots end-of-run gauges.
  void finalize();

  const std::vector<DelaySample>& samples() const { return samples_; }
  // Every packet that reached a terminal state, with its hop log.
  const std::vector<Packet>& archive() const { return archive_; }

  const NodeState& node(NodeId id) const { return nodes_.at(id); }
  const TopologyView& controller_view() const { return believed_; }
  const BackupPlan& backup_plan() const { return backup_plan_; }
  Method method() const { return method_; }
  int id_width() const { return width_; }

 private:
  struct WaveMsg {
    NodeId node = 0;
    std::vector<FlowRule> installs;
    std::vector<RuleId> removes;
    std::vector<std::string> remove_sigs;  // mirror keys of `removes`
    bool swap = false;
  };
  struct Wave {
    std::vector<std::vector<WaveMsg>> rounds;
    std::size_t round = 0;
    int unresolved = 0;
    SimTime round_last_apply = 0;  // release time of the next round
    bool any_exhausted = false;
    SimTime started_at = 0;
  };

  // --- setup ----------------------------------------------------------------
  void build_topology();
  void warm_start();
  void warm_pure_sdn();
  void warm_backup();
  void warm_pure_dist();
  void warm_migration();
  void warm_cluster();
  void seed_lsdbs();
  void start_timers();
  void schedule_scenario();
  void schedule_injection(std::size_t demand_ix, std::uint64_t n, SimTime at);

  // --- data plane -------------------------------------------------------
  void inject(std::size_t demand_ix);
  void on_packet(NodeState& n, Packet pkt);
  void process_locally(NodeState& n, Packet pkt);
  void forward(NodeState& n, Packet pkt, NodeId out);
  void finish_deliver(NodeState& n, Packet pkt);
  void finish_drop(NodeState& n, Packet pkt, DropCause cause);
  void park(NodeState& n, Packet pkt, bool with_query);
  void release_parked(NodeState& n);
  void on_route_reply(NodeId node, const Json& payload);
  std::function<bool(NodeId)> believed_down_fn(const NodeState& n) const;

  // --- liveness and heartbeats -------------------------------------------
  void heartbeat_tick(NodeId id);
  void on_heartbeat_rx(NodeState& n, NodeId from);
  void on_link_down_detected(NodeState& n, NodeId peer);
  void on_link_restored(NodeState& n, NodeId peer);
  bool link_is_intra(const NodeState& n, NodeId peer) const;
  bool can_repair_locally(const NodeState& n, NodeId peer) const;
  void send_link_report(NodeState& n, NodeId peer, bool up);

  // --- link-state sync ------------------------------------------------------
  bool lsa_participant(const NodeState& n) const;
  void lsa_tick(NodeId id);
  void originate_lsa(NodeState& n);
  void flood_lsa(NodeState& from, NodeId origin, std::uint64_t seq,
                 const std::set<NodeId>& up, int ttl, NodeId exclude);
  void on_lsa_rx(NodeState& n, NodeId origin, std::uint64_t seq,
                 const std::set<NodeId>& up, int ttl);
  void schedule_recompute(NodeState& n);
  void apply_recompute(NodeState& n);
  std::vector<FlowRule> agent_route_rules(NodeState& n);

  // --- migration ------------------------------------------------------------
  void keepalive_tick(NodeId id);
  void migration_check_tick(NodeId id);
  void enter_modes(NodeState& n, const std::vector<AgentMode>& entered);
  void apply_distributed_entry(NodeState& n);
  void on_keepalive_ack(NodeId node, AgentMode mode, SimTime sampled);
  void confirm_sdn(NodeId node, SimTime sampled);
  void send_resync(NodeId node);
  void on_resync_cmd(NodeState& n, const Json& payload);

  // --- controller -------------------------------------------------------
  void on_link_report(const Json& payload, const ControlDelivery& dl);
  void on_miss_report(const Json& payload);
  void on_route_query(const Json& payload);
  void mark_dirty();
  void controller_tick();
  void maybe_start_wave();
  void start_wave();
  RuleSets desired_controller_rules();
  void send_wave_round();
  void resolve_wave_msg(bool delivered, SimTime apply_at);
  void advance_wave();
  void apply_install(NodeId node, const Json& payload,
                     const ControlDelivery& dl);
  void wave_complete();
  void do_recluster();
  void push_cluster_state(Json& payload, NodeId node) const;

  // --- measurement ------------------------------------------------------
  void on_measured_link_change(bool up);
  void note_detection(NodeState& n, NodeId peer);
  // Table-walk from src toward dst over installed rules, traversing only
  // links that are truly up. The operational "is this demand deliverable
  // right now" check that gates sample closure.
  bool probe_deliverable(NodeId src, NodeId dst) const;
  // Closes the open measurement iff every affected demand probes
  // deliverable. dl carries the repairing install's delivery stats when the
  // close happens at a controller message apply; nullptr for local applies.
  // local_node names the node whose flip/recompute/swap triggered the call;
  // when it is a measured-link endpoint the delay is clocked from its own
  // declaration instead of the first one.
  void try_close(const ControlDelivery* dl,
                 std::optional<NodeId> local_node = std::nullopt);
  void emit_sample(SimTime delay, SimTime sig_up, SimTime compute,
                   SimTime sig_down, SimTime install, SimTime retries,
                   bool censored);

  // --- shared helpers -----------------------------------------------------
  NodeId other_end(const LinkKey& l, NodeId n) const {
    return l.a == n ? l.b : l.a;
  }
  Adjacency believed_data_adj() const;
  void install_direct(NodeId node, const std::vector<FlowRule>& rules,
                      bool mirror);
  void table_install(NodeState& n, const FlowRule& rule);
  void table_remove(NodeState& n, RuleId id);
  std::vector<Demand> routed_vector() const;
  void record_incident(const std::string& kind, const std::string& detail);

  Simulator& sim_;
  ScenarioConfig cfg_;
  Method method_;
  int width_ = 1;
  std::uint32_t ttl_ = 0;
  std::size_t tag_depth_ = 16;
  NodeId controller_id_ = 0;
  std::set<NodeId> data_nodes_;
  Adjacency static_adj_;  // configured data links, ignoring up/down

  std::map<NodeId, NodeState> nodes_;
  RuleIdGen ids_;
  std::uint64_t next_packet_id_ = 1;
  std::set<std::uint64_t> live_packets_;
  std::map<std::uint64_t, int> requery_counts_;
  std::vector<Packet> archive_;
  std::vector<DelaySample> samples_;

  // Controller state. believed_ only changes when a report arrives.
  TopologyView believed_;
  std::set<Demand> routed_;
  std::map<NodeId, std::map<std::string, FlowRule>> installed_;
  std::map<NodeId, std::uint64_t> mirror_epoch_;
  RuleSets backup_rules_;  // static once planned
  BackupPlan backup_plan_;
  bool dirty_ = false;
  bool wave_start_pending_ = false;
  std::set<NodeId> stale_nodes_;  // deliveries failed; retried by later waves
  std::optional<Wave> wave_;

  // Migration bookkeeping (controller side).
  std::map<NodeId, SimTime> last_ack_;
  std::map<NodeId, AgentMode> ack_mode_;
  std::map<NodeId, SimTime> contact_since_;
  // Sample instant of the newest accepted mode evidence per node. Keepalive
  // acks and resync completions race on the control channel; older samples
  // arriving later must not overturn newer ones.
  std::map<NodeId, SimTime> mode_asof_;
  std::set<NodeId> region_;
  std::map<NodeId, std::vector<FlowRule>> resync_sent_;

  // Clustering bookkeeping (controller side).
  Partition partition_;
  Adjacency partition_reference_;
  std::uint64_t cluster_epoch_ = 0;

  std::optional<LinkKey> measured_;
  std::optional<Measurement> meas_;
};

}  // namespace hsdn
