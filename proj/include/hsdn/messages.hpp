#pragma once

#include <string>

#include "json.hpp"

#include "hsdn/dataplane.hpp"
#include "hsdn/topology.hpp"

namespace hsdn {

using Json = nlohmann::ordered_json;

enum class MsgKind {
  kRuleInstall,
  kRuleRemove,
  kLinkReport,
  kMissReport,
  kMigrateCmd,
  kResyncCmd,
  kClusterRouteReply,
  kClusterRouteQuery,
  kKeepalive,
  kKeepaliveAck,
};

const char* msg_kind_name(MsgKind k);

// Control-plane message. Payloads are structured JSON so the wire schema is
// printable and pinned by a golden-file test; the simulator only ever moves
// these between in-process endpoints.
struct ControlMsg {
  MsgKind kind = MsgKind::kKeepalive;
  std::uint64_t msg_id = 0;  // unique per run
  NodeId from = 0;
  NodeId to = 0;
  Json payload;
};

Json rule_to_json(const FlowRule& r);
FlowRule rule_from_json(const Json& j);

// One entry per message kind: payload field names and types. This is the
// wire contract; tests/golden/control_schema.txt pins it.
Json control_schema();

}  // namespace hsdn
