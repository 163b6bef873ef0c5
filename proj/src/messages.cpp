#include "hsdn/messages.hpp"

namespace hsdn {

const char* msg_kind_name(MsgKind k) {
  switch (k) {
    case MsgKind::kRuleInstall: return "RuleInstall";
    case MsgKind::kRuleRemove: return "RuleRemove";
    case MsgKind::kLinkReport: return "LinkReport";
    case MsgKind::kMissReport: return "MissReport";
    case MsgKind::kMigrateCmd: return "MigrateCmd";
    case MsgKind::kResyncCmd: return "ResyncCmd";
    case MsgKind::kClusterRouteReply: return "ClusterRouteReply";
    case MsgKind::kClusterRouteQuery: return "ClusterRouteQuery";
    case MsgKind::kKeepalive: return "Keepalive";
    case MsgKind::kKeepaliveAck: return "KeepaliveAck";
  }
  return "?";
}

namespace {

Json action_to_json(const Action& a) {
  Json j;
  switch (a.type) {
    case Action::Type::kForward: j["forward"] = a.arg; break;
    case Action::Type::kPopTag: j["pop"] = true; break;
    case Action::Type::kPushTag: j["push"] = a.arg; break;
    case Action::Type::kDrop: j["drop"] = true; break;
  }
  return j;
}

Action action_from_json(const Json& j) {
  if (j.contains("forward")) return Action::forward(j["forward"].get<NodeId>());
  if (j.contains("push")) return Action::push_tag(j["push"].get<TagId>());
  if (j.contains("pop")) return Action::pop_tag();
  return Action::drop();
}

}  // namespace

Json rule_to_json(const FlowRule& r) {
  Json j;
  j["id"] = r.id;
  j["priority"] = r.priority;
  j["dst_bits"] = r.dst.bits;
  j["dst_len"] = r.dst.len;
  j["dst_width"] = r.dst.width;
  switch (r.top_tag.kind) {
    case TagMatch::Kind::kAny: j["tag"] = "any"; break;
    case TagMatch::Kind::kNone: j["tag"] = "none"; break;
    case TagMatch::Kind::kValue: j["tag"] = r.top_tag.value; break;
  }
  if (r.pred) {
    j["pred_neighbor"] = r.pred->neighbor;
    j["pred_down"] = r.pred->want_down;
  }
  Json acts = Json::array();
  for (const auto& a : r.actions) acts.push_back(action_to_json(a));
  j["actions"] = acts;
  j["kind"] = r.kind == RuleKind::kBackup ? "backup" : "primary";
  j["origin"] = r.origin == RuleOrigin::kLocalAgent ? "agent" : "controller";
  return j;
}

FlowRule rule_from_json(const Json& j) {
  FlowRule r;
  r.id = j["id"].get<RuleId>();
  r.priority = j["priority"].get<int>();
  r.dst = DstMatch::prefix(j["dst_bits"].get<std::uint32_t>(),
                           j["dst_len"].get<int>(), j["dst_width"].get<int>());
  const auto& tag = j["tag"];
  if (tag.is_string()) {
    r.top_tag = tag.get<std::string>() == "none" ? TagMatch::none()
                                                 : TagMatch::any();
  } else {
    r.top_tag = TagMatch::tag(tag.get<TagId>());
  }
  if (j.contains("pred_neighbor")) {
    r.pred = StatePred{j["pred_neighbor"].get<NodeId>(),
                       j["pred_down"].get<bool>()};
  }
  for (const auto& a : j["actions"]) r.actions.push_back(action_from_json(a));
  r.kind = j["kind"].get<std::string>() == "backup" ? RuleKind::kBackup
                                                    : RuleKind::kPrimary;
  r.origin = j["origin"].get<std::string>() == "agent"
                 ? RuleOrigin::kLocalAgent
                 : RuleOrigin::kController;
  return r;
}

Json control_schema() {
  Json s;
  s["RuleInstall"] = {
      {"node", "u32"},
      {"rules", "FlowRule[] (id, priority, dst_bits/len/width, tag, "
                "pred_neighbor?, pred_down?, actions[], kind, origin)"},
      {"remove_ids", "u64[] (removed in the same atomic apply)"},
      {"epoch", "u64 (clustering epoch the rules belong to)"},
      {"swap", "bool (true: atomically replace controller-origin rules)"},
      {"own_cluster", "u32"},
      {"members", "u32[] (receiver's cluster membership at epoch)"},
      {"neighbor_clusters", "map node->cluster for the receiver's links"},
  };
  s["RuleRemove"] = {{"node", "u32"}, {"rule_ids", "u64[]"}};
  s["LinkReport"] = {
      {"a", "u32"}, {"b", "u32"},   {"up", "bool"},
      {"reporter", "u32"},          {"detected_at", "i64 microseconds"},
  };
  s["MissReport"] = {{"node", "u32"}, {"dst", "u32"}};
  s["MigrateCmd"] = {{"node", "u32"}};
  s["ResyncCmd"] = {
      {"node", "u32"},
      {"rules", "FlowRule[] (full controller-origin table, installed "
                "make-before-break)"},
      {"epoch", "u64"},
  };
  s["ResyncDone"] = {{"node", "u32 (batch applied, node is back under "
                              "direct control)"}};
  s["ClusterRouteQuery"] = {
      {"node", "u32"}, {"dst", "u32"}, {"packet_id", "u64"}};
  s["ClusterRouteReply"] = {
      {"node", "u32"},
      {"dst", "u32"},
      {"packet_id", "u64"},
      {"stack", "u32[] (cluster tags, front first)"},
      {"epoch", "u64"},
      {"drop", "bool (dst unroutable at this epoch)"},
  };
  s["Keepalive"] = {{"t", "i64 microseconds"}};
  s["KeepaliveAck"] = {{"node", "u32"}, {"mode", "sdn|migrating|distributed"}};
  return s;
}

}  // namespace hsdn
