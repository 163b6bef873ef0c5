#pragma once

#include <map>
#include <optional>
#include <set>
#include <vector>

#include "hsdn/routing.hpp"
#include "hsdn/time.hpp"
#include "hsdn/topology.hpp"

namespace hsdn {

// Heartbeat-driven per-link liveness belief of one node. Pure state machine:
// the owner feeds in heartbeat receptions and periodic tick times, and reads
// back belief flips. A link is declared down at the first tick t with
// t - last_rx >= k*tau; it is believed up again the moment a heartbeat
// arrives. An unknown sender creates an entry (heartbeats double as
// discovery).
class LivenessDetector {
 public:
  LivenessDetector() = default;
  LivenessDetector(SimTime tau, int k) : tau_(tau), k_(k) {}

  SimTime tau() const { return tau_; }

  // Seeds the entry as alive at t; used at warm start for known neighbors.
  void warm(NodeId neighbor, SimTime t);

  // Returns true when the heartbeat flips a believed-down link back up.
  bool on_heartbeat(NodeId from, SimTime t);

  // Newly-declared-down neighbors at tick t, ascending id.
  std::vector<NodeId> check(SimTime t);

  bool believed_down(NodeId neighbor) const;
  std::set<NodeId> believed_up() const;
  const std::map<NodeId, SimTime>& last_rx() const { return last_rx_; }

 private:
  SimTime tau_ = ms(100);
  int k_ = 3;
  std::map<NodeId, SimTime> last_rx_;
  std::set<NodeId> down_;
};

enum class AgentMode { kSdn, kMigrating, kDistributed };

const char* agent_mode_name(AgentMode m);

// Controller-liveness state machine of one node. Legal transitions form the
// cycle SDN -> MIGRATING -> DISTRIBUTED -> SDN; there is no shortcut back
// from MIGRATING even if the controller reappears, so a started migration
// always completes before a resync can undo it.
class MigrationMachine {
 public:
  struct Config {
    SimTime keepalive = sec(1);
    int m = 3;                       // consecutive misses before migrating
    SimTime stability_window = sec(5);
    SimTime discovery_round = sec(2);
    bool pre_execution = false;      // lsdb kept warm, skip discovery wait
  };

  MigrationMachine() = default;
  explicit MigrationMachine(const Config& cfg) : cfg_(cfg) {}

  AgentMode mode() const { return mode_; }
  const Config& config() const { return cfg_; }

  void warm(SimTime t) { last_contact_ = stable_since_ = t; }

  // Keepalive reception. A gap of at least m periods means the contact was
  // lost in between, so the stability clock restarts here.
  void on_keepalive(SimTime t);

  // Periodic tick (keepalive period). Returns the modes entered at this
  // tick, in order; with pre-execution both MIGRATING and DISTRIBUTED fire
  // at the same instant.
  std::vector<AgentMode> check(SimTime t);

  // MigrateCmd from the controller: start migrating now without waiting out
  // further keepalive misses. Same mode sequence as check(); no-op unless in
  // SDN mode.
  std::vector<AgentMode> force_migrate(SimTime t);

  // ResyncCmd from the controller. Accepted only in DISTRIBUTED mode with
  // the controller back in contact for the full stability window.
  bool on_resync(SimTime t);

 private:
  Config cfg_;
  AgentMode mode_ = AgentMode::kSdn;
  SimTime last_contact_ = 0;
  SimTime stable_since_ = 0;
  SimTime migrating_until_ = 0;
};

// Link-state database: latest incident-link claim per originator, newest
// sequence number wins. An edge exists iff both endpoints' current claims
// list each other, so a one-sided stale claim cannot resurrect a dead link.
class Lsdb {
 public:
  struct Claim {
    std::uint64_t seq = 0;
    std::set<NodeId> up;
    SimTime received_at = 0;
  };

  // Returns true iff the claim is newer than the stored one and was applied.
  bool apply(NodeId origin, std::uint64_t seq, const std::set<NodeId>& up,
             SimTime t);

  // Drops claims not refreshed for max_age; returns the expired originators.
  std::vector<NodeId> expire(SimTime t, SimTime max_age);

  Adjacency adjacency() const;
  const std::map<NodeId, Claim>& claims() const { return claims_; }
  std::optional<std::uint64_t> seq_of(NodeId origin) const;

 private:
  std::map<NodeId, Claim> claims_;
};

}  // namespace hsdn
