#include <algorithm>
#include <string>

#include "doctest.h"
#include "hsdn/network.hpp"
#include "hsdn/scenario.hpp"

using namespace hsdn;

TEST_SUITE_BEGIN("network");

namespace {

// The stock three-node scenario with the control-channel latency pinned to a
// constant, so reaction delays below decompose into exact integers.
ScenarioConfig proto(Method m) {
  ScenarioConfig cfg = *builtin_config("prototype");
  cfg.method = m;
  cfg.control.latency.dist = ControlLatencyCfg::Dist::kConstant;
  cfg.control.latency.constant = ms(10);
  return cfg;
}

bool has_incident(const RunMetrics& m, const std::string& kind) {
  for (const Incident& i : m.incidents)
    if (i.kind == kind) return true;
  return false;
}

}  // namespace

TEST_CASE("pure-sdn repairs through the controller with an exact delay chain") {
  const RunReport r = run_one(proto(Method::kPureSdn), 1);
  CHECK(r.metrics.conservation_holds());
  CHECK(r.metrics.anomalies.empty());
  CHECK(r.metrics.incidents.empty());

  REQUIRE(r.samples.size() == 1);
  const DelaySample& s = r.samples.front();
  CHECK_FALSE(s.censored);
  // Reaction chain with 10ms control latency, c_proc 1ms, t_install 1ms:
  // report up (10) + wave start (1) + round to node 1 (10+1) + round to the
  // failure-adjacent node 2 (10+1) = 33ms end to end.
  CHECK(s.delay_us == ms(33));
  CHECK(s.signal_up_us == ms(10));
  CHECK(s.compute_us == ms(12));  // controller wait + the downstream round
  CHECK(s.signal_down_us == ms(10));
  CHECK(s.install_us == ms(1));
  CHECK(s.retries_us == 0);
  CHECK(s.delay_us == s.signal_up_us + s.compute_us + s.signal_down_us +
                          s.install_us + s.retries_us);

  CHECK(r.metrics.link_reports_received.count("(2,3)") == 1);
  CHECK(r.metrics.messages.control_by_kind.count("RuleInstall") == 1);
  // The reroute pulls both surviving links into service.
  CHECK(r.links_used.count("(1,2)") == 1);
  CHECK(r.links_used.count("(1,3)") == 1);
}

TEST_CASE("pure-sdn reroutes onto the detour path after the repair") {
  const ScenarioConfig cfg = proto(Method::kPureSdn);
  Simulator sim(1);
  Network net(sim, cfg);
  net.start();
  sim.run_until(cfg.horizon);
  net.finalize();

  const auto& archive = net.archive();
  REQUIRE_FALSE(archive.empty());
  // The last delivered packet went around the dead link: 2 -> 1 -> 3.
  auto it = std::find_if(archive.rbegin(), archive.rend(), [](const Packet& p) {
    return !p.path_log.empty() && p.path_log.back().node == p.dst;
  });
  REQUIRE(it != archive.rend());
  REQUIRE(it->path_log.size() == 3);
  CHECK(it->path_log[0].node == 2);
  CHECK(it->path_log[1].node == 1);
  CHECK(it->path_log[2].node == 3);
}

TEST_CASE("backup flips to the detour at the declaration itself") {
  const RunReport r = run_one(proto(Method::kBackup), 1);
  CHECK(r.metrics.conservation_holds());
  CHECK(r.metrics.anomalies.empty());

  REQUIRE(r.samples.size() == 1);
  const DelaySample& s = r.samples.front();
  CHECK_FALSE(s.censored);
  // The predicate rule starts matching the instant the belief flips; no
  // table write, no controller involvement, no signaling of any kind.
  CHECK(s.delay_us == 0);
  CHECK(s.signal_up_us == 0);
  CHECK(s.compute_us == 0);
  CHECK(s.signal_down_us == 0);
  CHECK(s.install_us == 0);
  CHECK(s.retries_us == 0);

  CHECK(r.metrics.messages.control_total() == 0);
  CHECK(r.metrics.link_reports_received.empty());
  CHECK(r.metrics.messages.heartbeats > 0);
  CHECK(r.metrics.delivered > 200);
}

TEST_CASE("backup without budget falls back to the reporting chain") {
  ScenarioConfig cfg = proto(Method::kBackup);
  cfg.knobs.backup_budget = 0;
  const RunReport r = run_one(cfg, 1);
  REQUIRE(r.samples.size() == 1);
  // No local candidate: the endpoint must report, and the repair runs the
  // same controller chain as pure-sdn.
  CHECK(r.samples.front().delay_us == ms(33));
  CHECK(has_incident(r.metrics, "uncovered-failure"));
  CHECK(r.metrics.link_reports_received.count("(2,3)") == 1);
}

TEST_CASE("pure-dist recovers by local recompute alone") {
  const RunReport r = run_one(proto(Method::kPureDist), 1);
  CHECK(r.metrics.conservation_holds());
  CHECK(r.metrics.anomalies.empty());
  CHECK(r.metrics.incidents.empty());

  REQUIRE(r.samples.size() == 1);
  const DelaySample& s = r.samples.front();
  CHECK_FALSE(s.censored);
  // With this seed node 3 declares the loss well before node 2, so the
  // clock starts at 3's declaration and the repair waits for 2 to learn of
  // it: LSA transit 3->1->2 is two 2ms hops, then the recompute lands
  // a_proc + t_install = 3ms later. Nothing travels on the control channel.
  CHECK(s.delay_us == ms(7));
  CHECK(s.signal_up_us == ms(4));
  CHECK(s.compute_us == ms(2));
  CHECK(s.signal_down_us == 0);
  CHECK(s.install_us == ms(1));

  CHECK(r.metrics.messages.control_total() == 0);
  CHECK(r.metrics.link_reports_received.empty());
  CHECK(r.metrics.messages.lsas > 0);
  CHECK_FALSE(r.metrics.messages.lsa_originated.empty());
}

TEST_CASE("migration with a healthy controller matches pure-sdn exactly") {
  const RunReport r = run_one(proto(Method::kMigration), 1);
  REQUIRE(r.samples.size() == 1);
  CHECK(r.samples.front().delay_us == ms(33));
  CHECK(r.metrics.messages.control_by_kind.count("Keepalive") == 1);
  CHECK(r.metrics.messages.control_by_kind.count("KeepaliveAck") == 1);
  CHECK(r.metrics.messages.control_by_kind.count("MigrateCmd") == 0);
}

TEST_CASE("controller loss migrates the agents and resync returns them") {
  ScenarioConfig cfg = proto(Method::kMigration);
  cfg.schedule = {{sec(1), EventType::kControllerDisconnect, 0, 0},
                  {sec(8), EventType::kControllerReconnect, 0, 0}};
  cfg.measured_link.reset();
  cfg.horizon = sec(18);
  // Pre-execution keeps the link-state databases warm while still under SDN
  // control, so the swap to distributed forwarding is hitless.
  cfg.knobs.pre_execution = true;

  Simulator sim(3);
  Network net(sim, cfg);
  net.start();
  sim.run_until(cfg.horizon);
  net.finalize();

  const RunMetrics& m = sim.metrics();
  CHECK(m.conservation_holds());
  CHECK(m.dropped_total() == 0);
  CHECK(m.anomalies.empty());
  CHECK(net.samples().empty());

  // Every agent went distributed while cut off and is back under SDN control
  // after the stability window ran out.
  for (NodeId id : {1u, 2u, 3u}) CHECK(net.node(id).mode == AgentMode::kSdn);
  CHECK(m.messages.control_by_kind.at("MigrateCmd") >= 1);
  CHECK(m.messages.control_by_kind.at("ResyncCmd") >= 3);
  CHECK(m.messages.lsas > 0);  // the distributed phase ran link-state sync
}

TEST_CASE("an unrepairable failure censors at the horizon") {
  ScenarioConfig cfg;
  cfg.name = "stub";
  cfg.method = Method::kPureSdn;
  cfg.horizon = sec(5);
  cfg.nodes = {{0, true}, {1, false}, {2, false}};
  cfg.links = {{0, 1, ms(1), 0.0, LinkKind::kControl},
               {0, 2, ms(1), 0.0, LinkKind::kControl},
               {1, 2, ms(2), 0.0, LinkKind::kData}};
  cfg.demands = {{1, 2, ms(20), 0, 0}};
  cfg.schedule = {{sec(2), EventType::kLinkDown, 1, 2}};
  cfg.control.latency.dist = ControlLatencyCfg::Dist::kConstant;
  cfg.control.latency.constant = ms(10);

  const RunReport r = run_one(cfg, 1);
  REQUIRE(r.samples.size() == 1);
  const DelaySample& s = r.samples.front();
  CHECK(s.censored);
  // Horizon minus the detection instant. The declaration fires exactly
  // k*tau = 300ms after the last heartbeat arrival, which itself lags the
  // failure by up to one period plus the 2ms link hop.
  CHECK(s.delay_us >= ms(2690));
  CHECK(s.delay_us <= ms(2800));
  // The controller turned the unroutable demand into an explicit drop.
  CHECK(r.metrics.dropped.count(DropCause::kDropRule) == 1);
  CHECK(r.metrics.conservation_holds());
}

TEST_CASE("a blip shorter than the liveness window leaves no measurement") {
  ScenarioConfig cfg = proto(Method::kPureSdn);
  cfg.schedule.push_back({sec(2) + ms(150), EventType::kLinkUp, 2, 3});
  const RunReport r = run_one(cfg, 1);
  CHECK(r.samples.empty());
  CHECK(r.metrics.link_reports_received.empty());
  CHECK(r.metrics.detections == 0);
  CHECK(r.metrics.conservation_holds());
}

TEST_CASE("restoration during an open reaction censors the sample") {
  ScenarioConfig cfg = proto(Method::kPureSdn);
  // Stretch the chain (200ms control latency) so the link is back up while
  // the repair is still in flight.
  cfg.control.latency.constant = ms(200);
  cfg.schedule.push_back({sec(2) + ms(700), EventType::kLinkUp, 2, 3});
  const RunReport r = run_one(cfg, 1);
  REQUIRE(r.samples.size() == 1);
  CHECK(r.samples.front().censored);
  CHECK(r.samples.front().delay_us < ms(500));
  CHECK(r.metrics.conservation_holds());
}

TEST_CASE("same seed, same bytes") {
  const ScenarioConfig cfg = proto(Method::kCluster);
  MemoryTraceSink a, b;
  const RunReport ra = run_one(cfg, 5, &a);
  const RunReport rb = run_one(cfg, 5, &b);
  REQUIRE_FALSE(a.records().empty());
  CHECK(a.text() == b.text());
  REQUIRE(ra.samples.size() == rb.samples.size());
  for (std::size_t i = 0; i < ra.samples.size(); ++i) {
    CHECK(ra.samples[i].delay_us == rb.samples[i].delay_us);
    CHECK(ra.samples[i].censored == rb.samples[i].censored);
  }
  CHECK(ra.metrics.messages.total() == rb.metrics.messages.total());
  CHECK(ra.metrics.delivered == rb.metrics.delivered);
}

TEST_CASE("loop detector flags a crafted ping-pong and nothing else") {
  Packet ping;
  ping.id = 1;
  ping.path_log = {{1, 0, 99, 5}, {2, 0, 99, 6}, {1, 0, 99, 5}};
  Packet honest;
  honest.id = 2;
  honest.path_log = {{1, 0, 99, 5}, {2, 0, 99, 6}, {3, 0, 99, 0}};
  Packet replayed_no_rule;  // terminal records (rule 0) are not loop evidence
  replayed_no_rule.id = 3;
  replayed_no_rule.path_log = {{1, 0, 99, 0}, {2, 0, 99, 6}, {1, 0, 99, 0}};
  Packet tag_progress;  // same node, same rule, but the stack advanced
  tag_progress.id = 4;
  tag_progress.path_log = {{1, 2, 111, 5}, {2, 1, 222, 6}, {1, 1, 333, 5}};

  const auto anomalies =
      detect_loops({ping, honest, replayed_no_rule, tag_progress});
  REQUIRE(anomalies.size() == 1);
  CHECK(anomalies[0].kind == Anomaly::Kind::kLoop);
  CHECK(anomalies[0].packet_id == 1);
  CHECK(anomalies[0].node == 1);
}

TEST_CASE("static cluster run forwards cleanly through the tag plumbing") {
  ScenarioConfig cfg = *builtin_config("line6");
  cfg.method = Method::kCluster;
  cfg.knobs.cluster_size = 3;
  const RunReport r = run_one(cfg, 2);
  CHECK(r.metrics.conservation_holds());
  CHECK(r.metrics.dropped_total() == 0);
  CHECK(r.metrics.anomalies.empty());
  CHECK(r.metrics.retags == 0);  // no epoch churn in a static topology
  CHECK(r.metrics.delivered > 0);
  // End-to-end means every line link carried traffic.
  CHECK(r.links_used.size() == 5);
}

TEST_CASE("an intra-cluster loss ratio over the threshold reclusters") {
  ScenarioConfig cfg = *builtin_config("line6");
  cfg.method = Method::kCluster;
  cfg.knobs.cluster_size = 3;
  cfg.knobs.recluster = ReclusterPolicy::kThreshold;
  cfg.knobs.recluster_threshold = 0.4;
  cfg.schedule = {{sec(2), EventType::kLinkDown, 5, 6}};
  const RunReport r = run_one(cfg, 2);
  CHECK(r.metrics.reclusters >= 1);
  CHECK(r.metrics.anomalies.empty());
  CHECK(r.metrics.conservation_holds());
}

TEST_SUITE_END();
