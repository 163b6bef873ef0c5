#include <fstream>
#include <sstream>

#include "doctest.h"
#include "hsdn/messages.hpp"

using namespace hsdn;

TEST_SUITE_BEGIN("messages");

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  REQUIRE_MESSAGE(in.good(), "missing golden file: " << path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

FlowRule sample_backup_rule() {
  FlowRule r;
  r.id = 42;
  r.priority = kPrioBackup;
  r.dst = DstMatch::exact(5, 4);
  r.top_tag = TagMatch::none();
  r.pred = StatePred{2, true};
  r.actions = {Action::push_tag(5), Action::forward(3)};
  r.kind = RuleKind::kBackup;
  r.origin = RuleOrigin::kController;
  return r;
}

}  // namespace

TEST_CASE("rules survive the JSON round-trip") {
  std::vector<FlowRule> rules;
  rules.push_back(sample_backup_rule());

  FlowRule pop;
  pop.id = 7;
  pop.priority = kPrioTag;
  pop.dst = DstMatch::any(4);
  pop.top_tag = TagMatch::tag(9);
  pop.actions = {Action::pop_tag()};
  pop.origin = RuleOrigin::kLocalAgent;
  rules.push_back(pop);

  FlowRule pre;
  pre.id = 8;
  pre.priority = kPrioPrimary;
  pre.dst = DstMatch::prefix(4, 2, 4);
  pre.top_tag = TagMatch::any();
  pre.actions = {Action::drop()};
  rules.push_back(pre);

  for (const FlowRule& r : rules) {
    const FlowRule back = rule_from_json(rule_to_json(r));
    CHECK(back.id == r.id);
    CHECK(back.signature() == r.signature());
  }
}

TEST_CASE("control message schema is pinned") {
  const std::string golden = read_file(std::string(GOLDEN_DIR) +
                                       "/control_schema.txt");
  CHECK(control_schema().dump(2) + "\n" == golden);
}

TEST_CASE("rule wire format is pinned") {
  const std::string golden = read_file(std::string(GOLDEN_DIR) +
                                       "/backup_rule.json");
  CHECK(rule_to_json(sample_backup_rule()).dump(2) + "\n" == golden);
}

TEST_CASE("message kind names are stable") {
  CHECK(std::string(msg_kind_name(MsgKind::kRuleInstall)) == "RuleInstall");
  CHECK(std::string(msg_kind_name(MsgKind::kLinkReport)) == "LinkReport");
  CHECK(std::string(msg_kind_name(MsgKind::kKeepaliveAck)) == "KeepaliveAck");
}

TEST_SUITE_END();
