#include "hsdn/agent_core.hpp"

namespace hsdn {

void LivenessDetector::warm(NodeId neighbor, SimTime t) {
  last_rx_[neighbor] = t;
  down_.erase(neighbor);
}

bool LivenessDetector::on_heartbeat(NodeId from, SimTime t) {
  last_rx_[from] = t;
  return down_.erase(from) > 0;
}

std::vector<NodeId> LivenessDetector::check(SimTime t) {
  std::vector<NodeId> newly_down;
  for (const auto& [n, rx] : last_rx_) {
    if (down_.count(n)) continue;
    if (t - rx >= static_cast<SimTime>(k_) * tau_) {
      down_.insert(n);
      newly_down.push_back(n);
    }
  }
  return newly_down;
}

bool LivenessDetector::believed_down(NodeId neighbor) const {
  return down_.count(neighbor) > 0;
}

std::set<NodeId> LivenessDetector::believed_up() const {
  std::set<NodeId> up;
  for (const auto& [n, _] : last_rx_)
    if (!down_.count(n)) up.insert(n);
  return up;
}

const char* agent_mode_name(AgentMode m) {
  switch (m) {
    case AgentMode::kSdn: return "sdn";
    case AgentMode::kMigrating: return "migrating";
    case AgentMode::kDistributed: return "distributed";
  }
  return "?";
}

void MigrationMachine::on_keepalive(SimTime t) {
  const SimTime miss_window = static_cast<SimTime>(cfg_.m) * cfg_.keepalive;
  if (t - last_contact_ >= miss_window) stable_since_ = t;
  last_contact_ = t;
}

std::vector<AgentMode> MigrationMachine::check(SimTime t) {
  std::vector<AgentMode> entered;
  const SimTime miss_window = static_cast<SimTime>(cfg_.m) * cfg_.keepalive;
  if (mode_ == AgentMode::kSdn && t - last_contact_ >= miss_window) {
    mode_ = AgentMode::kMigrating;
    migrating_until_ = cfg_.pre_execution ? t : t + cfg_.discovery_round;
    entered.push_back(mode_);
  }
  if (mode_ == AgentMode::kMigrating && t >= migrating_until_) {
    mode_ = AgentMode::kDistributed;
    entered.push_back(mode_);
  }
  return entered;
}

std::vector<AgentMode> MigrationMachine::force_migrate(SimTime t) {
  std::vector<AgentMode> entered;
  if (mode_ != AgentMode::kSdn) return entered;
  mode_ = AgentMode::kMigrating;
  migrating_until_ = cfg_.pre_execution ? t : t + cfg_.discovery_round;
  entered.push_back(mode_);
  if (t >= migrating_until_) {
    mode_ = AgentMode::kDistributed;
    entered.push_back(mode_);
  }
  return entered;
}

bool MigrationMachine::on_resync(SimTime t) {
  if (mode_ != AgentMode::kDistributed) return false;
  const SimTime miss_window = static_cast<SimTime>(cfg_.m) * cfg_.keepalive;
  if (t - last_contact_ >= miss_window) return false;  // unreachable again
  if (t - stable_since_ < cfg_.stability_window) return false;
  mode_ = AgentMode::kSdn;
  return true;
}

bool Lsdb::apply(NodeId origin, std::uint64_t seq, const std::set<NodeId>& up,
                 SimTime t) {
  auto it = claims_.find(origin);
  if (it != claims_.end() && seq <= it->second.seq) return false;
  claims_[origin] = Claim{seq, up, t};
  return true;
}

std::vector<NodeId> Lsdb::expire(SimTime t, SimTime max_age) {
  std::vector<NodeId> gone;
  for (auto it = claims_.begin(); it != claims_.end();) {
    if (t - it->second.received_at >= max_age) {
      gone.push_back(it->first);
      it = claims_.erase(it);
    } else {
      ++it;
    }
  }
  return gone;
}

Adjacency Lsdb::adjacency() const {
  Adjacency adj;
  for (const auto& [n, _] : claims_) adj[n];
  for (const auto& [u, cu] : claims_) {
    for (NodeId v : cu.up) {
      auto cv = claims_.find(v);
      if (cv == claims_.end() || cv->second.up.count(u) == 0) continue;
      adj[u].insert(v);
      adj[v].insert(u);
    }
  }
  return adj;
}

std::optional<std::uint64_t> Lsdb::seq_of(NodeId origin) const {
  auto it = claims_.find(origin);
  if (it == claims_.end()) return std::nullopt;
  return it->second.seq;
}

}  // namespace hsdn
