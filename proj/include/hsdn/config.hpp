#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hsdn/messages.hpp"
#include "hsdn/planner.hpp"
#include "hsdn/sim.hpp"

namespace hsdn {

enum class Method { kPureSdn, kPureDist, kMigration, kCluster, kBackup };

const char* method_name(Method m);
std::optional<Method> method_from_name(const std::string& s);

enum class ReclusterPolicy { kNone, kPeriodic, kThreshold };

struct NodeSpec {
  NodeId id = 0;
  bool controller = false;
};

struct LinkSpec {
  NodeId a = 0, b = 0;
  SimTime latency = ms(2);
  double loss_prob = 0.0;
  LinkKind kind = LinkKind::kData;
};

struct DemandSpec {
  NodeId src = 0, dst = 0;
  SimTime period = ms(50);
  SimTime start = 0;
  std::uint64_t count = 0;  // 0: inject until the horizon
};

enum class EventType {
  kLinkDown,
  kLinkUp,
  kControllerDisconnect,  // downs every control link of the controller
  kControllerReconnect,
};

struct EventSpec {
  SimTime t = 0;
  EventType type = EventType::kLinkDown;
  NodeId a = 0, b = 0;  // unused for controller events
};

// Every tunable the methods expose; all have working defaults.
struct Knobs {
  SimTime tau = ms(100);  // heartbeat period
  int k = 3;              // missed heartbeats before link declared down
  SimTime keepalive = sec(1);
  int m = 3;  // missed keepalives before migration
  SimTime stability_window = sec(5);
  SimTime discovery_round = sec(2);
  bool pre_execution = false;
  SimTime sigma = sec(1);  // link-state sync period
  int flood_scope = 8;     // LSA TTL, hops
  std::size_t cluster_size = 1;
  ReclusterPolicy recluster = ReclusterPolicy::kNone;
  SimTime recluster_period = sec(60);
  double recluster_threshold = 0.5;
  int backup_budget = 1000000;  // effectively unlimited
  SimTime a_proc = ms(2);
  SimTime t_install = ms(1);
  SimTime c_proc = ms(1);
  std::uint32_t ttl = 0;         // 0: 2 * |nodes|
  std::size_t tag_depth = 0;     // 0: max(|nodes|, #clusters)
  std::size_t table_capacity = 4096;
  SimTime park_timeout = sec(1);
  bool compress = false;  // wildcard-compress controller batches
};

struct ScenarioConfig {
  std::string name = "custom";
  Method method = Method::kPureSdn;
  std::uint64_t seed = 1;
  std::uint64_t trials = 1;
  SimTime horizon = sec(30);
  std::vector<NodeSpec> nodes;
  std::vector<LinkSpec> links;
  std::vector<DemandSpec> demands;
  std::vector<EventSpec> schedule;
  Knobs knobs;
  ControlChannelCfg control;
  std::optional<LinkKey> measured_link;  // default: first scheduled link_down

  NodeId controller_id() const;  // first node flagged controller
  std::set<NodeId> data_node_ids() const;
  std::vector<Demand> demand_pairs() const;
};

// Parse failures are collected, not thrown: every violation is itemized so a
// config with three mistakes reports all three.
struct ConfigErrors {
  std::vector<std::string> items;
  bool ok() const { return items.empty(); }
  std::string str() const;
};

ScenarioConfig parse_config(const Json& j, ConfigErrors& errs);
ScenarioConfig parse_config_file(const std::string& path, ConfigErrors& errs);
Json config_to_json(const ScenarioConfig& cfg);

std::vector<std::string> builtin_names();
// prototype | line6 | triangle | grid12-fuzz
std::optional<ScenarioConfig> builtin_config(const std::string& name);

// Seeded random failure / migration / recluster schedule on the 12-node grid;
// the anomaly fuzzer runs this across many schedule seeds.
ScenarioConfig make_grid12_fuzz(std::uint64_t schedule_seed, Method method);

}  // namespace hsdn
