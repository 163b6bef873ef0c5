#include "doctest.h"
#include "hsdn/agent_core.hpp"

using namespace hsdn;

TEST_SUITE_BEGIN("agent");

TEST_CASE("liveness declares a link down after exactly k missed periods") {
  LivenessDetector live(ms(100), 3);
  live.warm(2, 0);
  // Heartbeats keep arriving until t=200ms, then stop.
  CHECK_FALSE(live.on_heartbeat(2, ms(100)));
  CHECK_FALSE(live.on_heartbeat(2, ms(200)));
  CHECK(live.check(ms(499)).empty());  // 299ms of silence, below 3*tau
  const auto down = live.check(ms(500));
  REQUIRE(down.size() == 1);
  CHECK(down[0] == 2);
  CHECK(live.believed_down(2));
  CHECK(live.check(ms(600)).empty());  // no re-declaration
}

TEST_CASE("a heartbeat after a declaration flips the belief back") {
  LivenessDetector live(ms(100), 3);
  live.warm(2, 0);
  live.warm(3, 0);
  REQUIRE(live.check(ms(300)).size() == 2);
  CHECK(live.on_heartbeat(2, ms(350)));   // true: restoration
  CHECK_FALSE(live.on_heartbeat(2, ms(400)));  // already believed up
  CHECK_FALSE(live.believed_down(2));
  CHECK(live.believed_down(3));
  CHECK(live.believed_up() == std::set<NodeId>{2});
}

TEST_CASE("migration machine walks sdn -> migrating -> distributed") {
  MigrationMachine::Config cfg;
  cfg.keepalive = sec(1);
  cfg.m = 3;
  cfg.stability_window = sec(5);
  cfg.discovery_round = sec(2);
  MigrationMachine mig(cfg);
  mig.warm(0);

  mig.on_keepalive(sec(1));
  mig.on_keepalive(sec(2));
  CHECK(mig.check(sec(4)).empty());  // 2s of silence, below 3 keepalives

  const auto entered = mig.check(sec(5));
  REQUIRE(entered.size() == 1);
  CHECK(entered[0] == AgentMode::kMigrating);
  CHECK(mig.mode() == AgentMode::kMigrating);

  CHECK(mig.check(sec(6)).empty());  // discovery round still running
  const auto dist = mig.check(sec(7));
  REQUIRE(dist.size() == 1);
  CHECK(dist[0] == AgentMode::kDistributed);
}

TEST_CASE("pre-execution skips the discovery round") {
  MigrationMachine::Config cfg;
  cfg.keepalive = sec(1);
  cfg.m = 3;
  cfg.pre_execution = true;
  MigrationMachine mig(cfg);
  mig.warm(0);
  const auto entered = mig.check(sec(3));
  REQUIRE(entered.size() == 2);
  CHECK(entered[0] == AgentMode::kMigrating);
  CHECK(entered[1] == AgentMode::kDistributed);
}

TEST_CASE("force_migrate acts only from sdn mode") {
  MigrationMachine::Config cfg;
  cfg.keepalive = sec(1);
  cfg.discovery_round = sec(2);
  MigrationMachine mig(cfg);
  mig.warm(0);
  const auto entered = mig.force_migrate(sec(1));
  REQUIRE(entered.size() == 1);
  CHECK(entered[0] == AgentMode::kMigrating);
  CHECK(mig.force_migrate(sec(2)).empty());
}

TEST_CASE("resync requires restored contact held for the stability window") {
  MigrationMachine::Config cfg;
  cfg.keepalive = sec(1);
  cfg.m = 3;
  cfg.stability_window = sec(5);
  cfg.discovery_round = sec(1);
  MigrationMachine mig(cfg);
  mig.warm(0);

  REQUIRE(mig.check(sec(3)).size() == 1);
  REQUIRE(mig.check(sec(4)).size() == 1);
  CHECK(mig.mode() == AgentMode::kDistributed);

  // Contact returns at t=10s; the long gap restarts the stability clock.
  mig.on_keepalive(sec(10));
  CHECK_FALSE(mig.on_resync(sec(12)));  // only 2s of stability
  for (int t = 11; t <= 14; ++t) mig.on_keepalive(sec(t));
  CHECK_FALSE(mig.on_resync(sec(14)));  // 4s, still short
  mig.on_keepalive(sec(15));
  CHECK(mig.on_resync(sec(15)));  // 5s since contact returned
  CHECK(mig.mode() == AgentMode::kSdn);
}

TEST_CASE("resync is refused while the controller is unreachable again") {
  MigrationMachine::Config cfg;
  cfg.keepalive = sec(1);
  cfg.m = 3;
  cfg.stability_window = sec(2);
  cfg.discovery_round = sec(1);
  MigrationMachine mig(cfg);
  mig.warm(0);
  REQUIRE(!mig.check(sec(3)).empty());
  mig.check(sec(4));
  mig.on_keepalive(sec(10));
  // Silence since 10s: by 13s the miss window has elapsed again.
  CHECK_FALSE(mig.on_resync(sec(13)));
  CHECK(mig.mode() == AgentMode::kDistributed);
}

TEST_CASE("lsdb keeps the highest sequence per origin") {
  Lsdb db;
  CHECK(db.apply(1, 5, {2, 3}, ms(10)));
  CHECK_FALSE(db.apply(1, 5, {2}, ms(20)));  // same seq: duplicate flood
  CHECK_FALSE(db.apply(1, 4, {2}, ms(30)));  // older
  CHECK(db.apply(1, 6, {2}, ms(40)));
  CHECK(db.seq_of(1) == 6);
  CHECK(db.claims().at(1).up == std::set<NodeId>{2});
}

TEST_CASE("lsdb adjacency requires both endpoints to agree") {
  Lsdb db;
  db.apply(1, 1, {2}, 0);
  db.apply(2, 1, {1, 3}, 0);
  db.apply(3, 1, {}, 0);  // 3 does not claim 2
  const Adjacency adj = db.adjacency();
  CHECK(adj.at(1).count(2) == 1);
  CHECK(adj.at(2).count(1) == 1);
  CHECK(adj.at(2).count(3) == 0);
  CHECK(adj.at(3).empty());
}

TEST_CASE("lsdb expiry evicts silent origins") {
  Lsdb db;
  db.apply(1, 1, {2}, sec(1));
  db.apply(2, 1, {1}, sec(3));
  const auto gone = db.expire(sec(4), sec(3));
  REQUIRE(gone.size() == 1);
  CHECK(gone[0] == 1);
  CHECK(db.claims().count(1) == 0);
  CHECK(db.claims().count(2) == 1);
}

TEST_SUITE_END();
