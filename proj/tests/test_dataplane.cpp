#include <optional>

#include "doctest.h"
#include "hsdn/dataplane.hpp"

using namespace hsdn;

TEST_SUITE_BEGIN("dataplane");

namespace {

FlowRule rule(RuleId id, int prio, DstMatch dst,
              TagMatch tag = TagMatch::none(),
              std::vector<Action> acts = {Action::drop()}) {
  FlowRule r;
  r.id = id;
  r.priority = prio;
  r.dst = dst;
  r.top_tag = tag;
  r.actions = std::move(acts);
  return r;
}

const auto kAllUp = [](NodeId) { return false; };

}  // namespace

TEST_CASE("destination matching across exact, any and prefix") {
  const auto exact = DstMatch::exact(5, 4);
  CHECK(exact.matches(5));
  CHECK_FALSE(exact.matches(4));
  CHECK(exact.str() == "0101");

  const auto any = DstMatch::any(4);
  CHECK(any.matches(0));
  CHECK(any.matches(15));
  CHECK(any.str() == "****");

  // 01** covers 4..7 at width 4.
  const auto pre = DstMatch::prefix(4, 2, 4);
  for (NodeId d = 4; d <= 7; ++d) CHECK(pre.matches(d));
  CHECK_FALSE(pre.matches(3));
  CHECK_FALSE(pre.matches(8));
  CHECK(pre.str() == "01**");
}

TEST_CASE("tag matching") {
  CHECK(TagMatch::any().matches(std::nullopt));
  CHECK(TagMatch::any().matches(7));
  CHECK(TagMatch::none().matches(std::nullopt));
  CHECK_FALSE(TagMatch::none().matches(7));
  CHECK(TagMatch::tag(7).matches(7));
  CHECK_FALSE(TagMatch::tag(7).matches(8));
  CHECK_FALSE(TagMatch::tag(7).matches(std::nullopt));
}

TEST_CASE("rule validation rejects malformed rules") {
  FlowRule bad = rule(1, -1, DstMatch::any(4));
  CHECK_THROWS_AS(bad.validate(), TagStackError);

  FlowRule twofwd = rule(2, 10, DstMatch::any(4), TagMatch::any(),
                         {Action::forward(1), Action::forward(2)});
  CHECK_THROWS_AS(twofwd.validate(), TagStackError);

  FlowRule backup = rule(3, 10, DstMatch::any(4), TagMatch::any(),
                         {Action::forward(1)});
  backup.kind = RuleKind::kBackup;
  CHECK_THROWS_AS(backup.validate(), TagStackError);
  backup.pred = StatePred{2, true};
  CHECK_NOTHROW(backup.validate());
}

TEST_CASE("forward_target finds the forward action if any") {
  const FlowRule f = rule(1, 10, DstMatch::any(4), TagMatch::any(),
                          {Action::push_tag(3), Action::forward(9)});
  CHECK(f.forward_target() == 9);
  const FlowRule d = rule(2, 10, DstMatch::any(4));
  CHECK_FALSE(f.forward_target() == 3);
  CHECK_FALSE(d.forward_target().has_value());
}

TEST_CASE("match picks highest priority, then lowest id") {
  FlowTable t;
  t.install(rule(30, kPrioPrimary, DstMatch::exact(5, 4), TagMatch::none(),
                 {Action::forward(1)}));
  t.install(rule(10, kPrioCatchAll, DstMatch::any(4), TagMatch::any()));
  t.install(rule(20, kPrioPrimary, DstMatch::exact(5, 4), TagMatch::none(),
                 {Action::forward(2)}));

  const FlowRule* m = t.match(5, std::nullopt, kAllUp);
  REQUIRE(m != nullptr);
  CHECK(m->id == 20);  // same priority as 30, lower id wins
  CHECK(m->forward_target() == 2);

  const FlowRule* fallback = t.match(9, std::nullopt, kAllUp);
  REQUIRE(fallback != nullptr);
  CHECK(fallback->id == 10);
}

TEST_CASE("state predicates gate on believed link state") {
  FlowTable t;
  FlowRule bk = rule(1, kPrioBackup, DstMatch::exact(5, 4), TagMatch::none(),
                     {Action::forward(3)});
  bk.kind = RuleKind::kBackup;
  bk.pred = StatePred{2, true};  // fires only while link to 2 is believed down
  t.install(bk);
  t.install(rule(2, kPrioPrimary, DstMatch::exact(5, 4), TagMatch::none(),
                 {Action::forward(2)}));

  const FlowRule* up = t.match(5, std::nullopt, kAllUp);
  REQUIRE(up != nullptr);
  CHECK(up->id == 2);

  const FlowRule* down = t.match(5, std::nullopt, [](NodeId n) { return n == 2; });
  REQUIRE(down != nullptr);
  CHECK(down->id == 1);
}

TEST_CASE("tag match participates in selection") {
  FlowTable t;
  t.install(rule(1, kPrioTag, DstMatch::any(4), TagMatch::tag(7),
                 {Action::pop_tag()}));
  t.install(rule(2, kPrioPrimary, DstMatch::exact(5, 4), TagMatch::none(),
                 {Action::forward(2)}));
  const FlowRule* tagged = t.match(5, 7, kAllUp);
  REQUIRE(tagged != nullptr);
  CHECK(tagged->id == 1);
  CHECK(t.match(5, 8, kAllUp) == nullptr);  // tag 8 matches nothing
  const FlowRule* bare = t.match(5, std::nullopt, kAllUp);
  REQUIRE(bare != nullptr);
  CHECK(bare->id == 2);
}

TEST_CASE("capacity bounds installs and high_water tracks the peak") {
  FlowTable t(2);
  CHECK(t.install(rule(1, 1, DstMatch::any(4), TagMatch::any())));
  CHECK(t.install(rule(2, 1, DstMatch::any(4), TagMatch::any())));
  CHECK_FALSE(t.install(rule(3, 1, DstMatch::any(4), TagMatch::any())));
  CHECK(t.size() == 2);
  CHECK(t.remove(1));
  CHECK_FALSE(t.remove(1));
  CHECK(t.install(rule(3, 1, DstMatch::any(4), TagMatch::any())));
  CHECK(t.high_water() == 2);
}

TEST_CASE("tag stack enforces its depth bound") {
  TagStack s(2);
  CHECK(s.push_front(1));
  CHECK(s.push_front(2));
  CHECK_FALSE(s.push_front(3));
  CHECK(s.top() == 2);
  s.pop_front();
  CHECK(s.top() == 1);
  s.pop_front();
  CHECK(s.empty());
  CHECK_THROWS_AS(s.pop_front(), TagStackError);
}

TEST_SUITE_END();
