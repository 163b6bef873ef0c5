#include <string>

#include "doctest.h"
#include "hsdn/config.hpp"

using namespace hsdn;

TEST_SUITE_BEGIN("config");

TEST_CASE("method names round-trip") {
  for (Method m : {Method::kPureSdn, Method::kPureDist, Method::kMigration,
                   Method::kCluster, Method::kBackup})
    CHECK(method_from_name(method_name(m)) == m);
  CHECK_FALSE(method_from_name("hybrid").has_value());
}

TEST_CASE("builtins parse cleanly and serialization round-trips") {
  const auto names = builtin_names();
  REQUIRE(names.size() == 4);
  for (const std::string& name : names) {
    CAPTURE(name);
    const auto cfg = builtin_config(name);
    REQUIRE(cfg.has_value());
    const Json j = config_to_json(*cfg);
    ConfigErrors errs;
    const ScenarioConfig back = parse_config(j, errs);
    CHECK(errs.ok());
    CHECK(config_to_json(back) == j);
  }
  CHECK_FALSE(builtin_config("no-such-scenario").has_value());
}

TEST_CASE("every violation is itemized, not just the first") {
  Json j = config_to_json(*builtin_config("prototype"));
  j["topology"]["links"][0]["loss_prob"] = 1.5;
  j["knobs"]["cluster_size"] = 0;
  j["frobnicate"] = true;
  ConfigErrors errs;
  parse_config(j, errs);
  REQUIRE(errs.items.size() == 3);
  const std::string all = errs.str();
  CHECK(all.find("loss_prob") != std::string::npos);
  CHECK(all.find("cluster_size") != std::string::npos);
  CHECK(all.find("frobnicate") != std::string::npos);
}

TEST_CASE("cross-field validation catches dangling references") {
  Json j = config_to_json(*builtin_config("prototype"));
  j["demands"][0]["dst"] = 99;
  j["schedule"][0]["a"] = 1;
  j["schedule"][0]["b"] = 99;
  ConfigErrors errs;
  parse_config(j, errs);
  bool demand_err = false, sched_err = false;
  for (const auto& e : errs.items) {
    if (e.find("demands[0]") != std::string::npos) demand_err = true;
    if (e.find("schedule[0]") != std::string::npos) sched_err = true;
  }
  CHECK(demand_err);
  CHECK(sched_err);
}

TEST_CASE("structural topology mistakes are reported") {
  Json j = config_to_json(*builtin_config("prototype"));
  j["topology"]["links"][0]["a"] = j["topology"]["links"][0]["b"];
  ConfigErrors errs;
  parse_config(j, errs);
  CHECK_FALSE(errs.ok());
  CHECK(errs.str().find("self-loop") != std::string::npos);

  Json dup = config_to_json(*builtin_config("prototype"));
  dup["topology"]["nodes"][1]["id"] = dup["topology"]["nodes"][2]["id"];
  ConfigErrors errs2;
  parse_config(dup, errs2);
  CHECK_FALSE(errs2.ok());
  CHECK(errs2.str().find("duplicate") != std::string::npos);
}

TEST_CASE("a method needing a controller refuses a controllerless topology") {
  Json j = config_to_json(*builtin_config("prototype"));
  for (auto& n : j["topology"]["nodes"]) n["controller"] = false;
  ConfigErrors errs;
  parse_config(j, errs);
  CHECK_FALSE(errs.ok());
  CHECK(errs.str().find("controller") != std::string::npos);

  // pure-dist runs without one.
  j["method"] = "pure-dist";
  Json cleaned = j;
  ConfigErrors errs2;
  ScenarioConfig cfg = parse_config(cleaned, errs2);
  // Control links to node 0 still exist; only the controller flag is gone.
  CHECK(errs2.ok());
  CHECK(cfg.method == Method::kPureDist);
}

TEST_CASE("missing topology is a hard error") {
  Json j;
  j["name"] = "x";
  ConfigErrors errs;
  parse_config(j, errs);
  CHECK_FALSE(errs.ok());
  CHECK(errs.str().find("topology") != std::string::npos);
}

TEST_CASE("fuzz scenarios are deterministic per schedule seed") {
  const ScenarioConfig a = make_grid12_fuzz(7, Method::kCluster);
  const ScenarioConfig b = make_grid12_fuzz(7, Method::kCluster);
  CHECK(config_to_json(a) == config_to_json(b));
  CHECK_FALSE(a.schedule.empty());

  const ScenarioConfig c = make_grid12_fuzz(8, Method::kCluster);
  CHECK(config_to_json(a) != config_to_json(c));

  const ScenarioConfig m = make_grid12_fuzz(4, Method::kMigration);
  bool has_disconnect = false;
  for (const auto& e : m.schedule)
    if (e.type == EventType::kControllerDisconnect) has_disconnect = true;
  CHECK(has_disconnect);
}

TEST_SUITE_END();
