#include "hsdn/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "hsdn/rng.hpp"

namespace hsdn {

const char* method_name(Method m) {
  switch (m) {
    case Method::kPureSdn: return "pure-sdn";
    case Method::kPureDist: return "pure-dist";
    case Method::kMigration: return "migration";
    case Method::kCluster: return "cluster";
    case Method::kBackup: return "backup";
  }
  return "?";
}

std::optional<Method> method_from_name(const std::string& s) {
  if (s == "pure-sdn") return Method::kPureSdn;
  if (s == "pure-dist") return Method::kPureDist;
  if (s == "migration") return Method::kMigration;
  if (s == "cluster") return Method::kCluster;
  if (s == "backup") return Method::kBackup;
  return std::nullopt;
}

NodeId ScenarioConfig::controller_id() const {
  for (const auto& n : nodes)
    if (n.controller) return n.id;
  return 0;
}

std::set<NodeId> ScenarioConfig::data_node_ids() const {
  std::set<NodeId> out;
  for (const auto& n : nodes)
    if (!n.controller) out.insert(n.id);
  return out;
}

std::vector<Demand> ScenarioConfig::demand_pairs() const {
  std::vector<Demand> out;
  for (const auto& d : demands) out.push_back({d.src, d.dst});
  return out;
}

std::string ConfigErrors::str() const {
  std::ostringstream os;
  for (const auto& e : items) os << e << "\n";
  return os.str();
}

namespace {

const char* event_type_name(EventType t) {
  switch (t) {
    case EventType::kLinkDown: return "link_down";
    case EventType::kLinkUp: return "link_up";
    case EventType::kControllerDisconnect: return "controller_disconnect";
    case EventType::kControllerReconnect: return "controller_reconnect";
  }
  return "?";
}

const char* recluster_name(ReclusterPolicy p) {
  switch (p) {
    case ReclusterPolicy::kNone: return "none";
    case ReclusterPolicy::kPeriodic: return "periodic";
    case ReclusterPolicy::kThreshold: return "threshold";
  }
  return "?";
}

// Collects errors while pulling typed values out of JSON objects; every
// object access also tracks which keys were consumed so leftovers can be
// reported as unknown.
class Reader {
 public:
  Reader(const Json& j, std::string path, ConfigErrors& errs)
      : j_(j), path_(std::move(path)), errs_(errs) {}

  ~Reader() {
    if (!j_.is_object()) return;
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (seen_.count(it.key()) == 0)
        errs_.items.push_back(path_ + ": unknown key '" + it.key() + "'");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.is_object() && j_.contains(key);
  }

  const Json* get(const std::string& key) {
    return has(key) ? &j_.at(key) : nullptr;
  }

  template <typename T>
  void num(const std::string& key, T& out, double lo, double hi) {
    const Json* v = get(key);
    if (!v) return;
    if (!v->is_number()) {
      err(key, "must be a number");
      return;
    }
    const double d = v->get<double>();
    if (d < lo || d > hi) {
      std::ostringstream os;
      os << "out of range [" << lo << ", " << hi << "]";
      err(key, os.str());
      return;
    }
    out = static_cast<T>(d);
  }

  void boolean(const std::string& key, bool& out) {
    const Json* v = get(key);
    if (!v) return;
    if (!v->is_boolean()) {
      err(key, "must be a boolean");
      return;
    }
    out = v->get<bool>();
  }

  void str(const std::string& key, std::string& out) {
    const Json* v = get(key);
    if (!v) return;
    if (!v->is_string()) {
      err(key, "must be a string");
      return;
    }
    out = v->get<std::string>();
  }

  void err(const std::string& key, const std::string& what) {
    errs_.items.push_back(path_ + "." + key + ": " + what);
  }

  const std::string& path() const { return path_; }
  ConfigErrors& errs() { return errs_; }

 private:
  const Json& j_;
  std::string path_;
  ConfigErrors& errs_;
  std::set<std::string> seen_;
};

void parse_latency(const Json& j, const std::string& path, ConfigErrors& errs,
                   ControlLatencyCfg& out) {
  Reader r(j, path, errs);
  std::string dist = "lognormal";
  r.str("dist", dist);
  if (dist == "constant")
    out.dist = ControlLatencyCfg::Dist::kConstant;
  else if (dist == "uniform")
    out.dist = ControlLatencyCfg::Dist::kUniform;
  else if (dist == "lognormal")
    out.dist = ControlLatencyCfg::Dist::kLognormal;
  else
    r.err("dist", "must be constant | uniform | lognormal");
  r.num("constant_us", out.constant, 1, 1e12);
  r.num("lo_us", out.lo, 1, 1e12);
  r.num("hi_us", out.hi, 1, 1e12);
  r.num("median_us", out.median, 1, 1e12);
  r.num("sigma", out.sigma, 0.0, 10.0);
  r.num("min_us", out.min, 1, 1e12);
  r.num("max_us", out.max, 1, 1e12);
  if (out.lo > out.hi) r.err("lo_us", "must not exceed hi_us");
  if (out.min > out.max) r.err("min_us", "must not exceed max_us");
}

}  // namespace

ScenarioConfig parse_config(const Json& j, ConfigErrors& errs) {
  ScenarioConfig cfg;
  if (!j.is_object()) {
    errs.items.push_back("config: top level must be an object");
    return cfg;
  }
  Reader r(j, "config", errs);
  r.str("name", cfg.name);
  std::string method;
  if (r.has("method")) {
    method = j.at("method").is_string() ? j.at("method").get<std::string>() : "";
    auto m = method_from_name(method);
    if (m)
      cfg.method = *m;
    else
      r.err("method",
            "must be pure-sdn | pure-dist | migration | cluster | backup");
  }
  r.num("seed", cfg.seed, 0, 1.8e19);
  r.num("trials", cfg.trials, 1, 1e6);
  r.num("horizon_us", cfg.horizon, 1, 1e13);

  if (const Json* topo = r.get("topology")) {
    Reader rt(*topo, "topology", errs);
    if (const Json* nodes = rt.get("nodes")) {
      if (!nodes->is_array()) {
        rt.err("nodes", "must be an array");
      } else {
        int i = 0;
        for (const auto& n : *nodes) {
          NodeSpec spec;
          Reader rn(n, "topology.nodes[" + std::to_string(i) + "]", errs);
          rn.num("id", spec.id, 0, 4e9);
          rn.boolean("controller", spec.controller);
          cfg.nodes.push_back(spec);
          ++i;
        }
      }
    }
    if (const Json* links = rt.get("links")) {
      if (!links->is_array()) {
        rt.err("links", "must be an array");
      } else {
        int i = 0;
        for (const auto& l : *links) {
          LinkSpec spec;
          Reader rl(l, "topology.links[" + std::to_string(i) + "]", errs);
          rl.num("a", spec.a, 0, 4e9);
          rl.num("b", spec.b, 0, 4e9);
          rl.num("latency_us", spec.latency, 1, 1e12);
          rl.num("loss_prob", spec.loss_prob, 0.0, 0.999999);
          std::string kind = "data";
          rl.str("kind", kind);
          if (kind == "control")
            spec.kind = LinkKind::kControl;
          else if (kind != "data")
            rl.err("kind", "must be data | control");
          cfg.links.push_back(spec);
          ++i;
        }
      }
    }
  } else {
    errs.items.push_back("config: missing required key 'topology'");
  }

  if (const Json* demands = r.get("demands")) {
    if (!demands->is_array()) {
      r.err("demands", "must be an array");
    } else {
      int i = 0;
      for (const auto& d : *demands) {
        DemandSpec spec;
        Reader rd(d, "demands[" + std::to_string(i) + "]", errs);
        rd.num("src", spec.src, 0, 4e9);
        rd.num("dst", spec.dst, 0, 4e9);
        rd.num("period_us", spec.period, 1, 1e12);
        rd.num("start_us", spec.start, 0, 1e13);
        rd.num("count", spec.count, 0, 1e12);
        cfg.demands.push_back(spec);
        ++i;
      }
    }
  }

  if (const Json* sched = r.get("schedule")) {
    if (!sched->is_array()) {
      r.err("schedule", "must be an array");
    } else {
      int i = 0;
      for (const auto& e : *sched) {
        EventSpec spec;
        Reader re(e, "schedule[" + std::to_string(i) + "]", errs);
        re.num("t_us", spec.t, 0, 1e13);
        std::string ev;
        re.str("event", ev);
        if (ev == "link_down")
          spec.type = EventType::kLinkDown;
        else if (ev == "link_up")
          spec.type = EventType::kLinkUp;
        else if (ev == "controller_disconnect")
          spec.type = EventType::kControllerDisconnect;
        else if (ev == "controller_reconnect")
          spec.type = EventType::kControllerReconnect;
        else
          re.err("event",
                 "must be link_down | link_up | controller_disconnect | "
                 "controller_reconnect");
        re.num("a", spec.a, 0, 4e9);
        re.num("b", spec.b, 0, 4e9);
        cfg.schedule.push_back(spec);
        ++i;
      }
    }
  }

  if (const Json* knobs = r.get("knobs")) {
    Reader rk(*knobs, "knobs", errs);
    Knobs& k = cfg.knobs;
    rk.num("tau_us", k.tau, 1, 1e12);
    rk.num("k", k.k, 1, 1000);
    rk.num("keepalive_us", k.keepalive, 1, 1e12);
    rk.num("m", k.m, 1, 1000);
    rk.num("stability_window_us", k.stability_window, 0, 1e13);
    rk.num("discovery_round_us", k.discovery_round, 0, 1e13);
    rk.boolean("pre_execution", k.pre_execution);
    rk.num("sigma_us", k.sigma, 1, 1e13);
    rk.num("flood_scope", k.flood_scope, 1, 1000000);
    rk.num("cluster_size", k.cluster_size, 1, 1e9);
    if (rk.has("recluster")) {
      const std::string p = knobs->at("recluster").is_string()
                                ? knobs->at("recluster").get<std::string>()
                                : "";
      if (p == "none")
        k.recluster = ReclusterPolicy::kNone;
      else if (p == "periodic")
        k.recluster = ReclusterPolicy::kPeriodic;
      else if (p == "threshold")
        k.recluster = ReclusterPolicy::kThreshold;
      else
        rk.err("recluster", "must be none | periodic | threshold");
    }
    rk.num("recluster_period_us", k.recluster_period, 1, 1e13);
    rk.num("recluster_threshold", k.recluster_threshold, 0.0, 1.0);
    rk.num("backup_budget", k.backup_budget, 0, 2e9);
    rk.num("a_proc_us", k.a_proc, 0, 1e12);
    rk.num("t_install_us", k.t_install, 0, 1e12);
    rk.num("c_proc_us", k.c_proc, 0, 1e12);
    rk.num("ttl", k.ttl, 0, 1e9);
    rk.num("tag_depth", k.tag_depth, 0, 1e9);
    rk.num("table_capacity", k.table_capacity, 1, 1e9);
    rk.num("park_timeout_us", k.park_timeout, 1, 1e13);
    rk.boolean("compress", k.compress);
  }

  if (const Json* control = r.get("control")) {
    Reader rc(*control, "control", errs);
    if (const Json* lat = rc.get("latency"))
      parse_latency(*lat, "control.latency", errs, cfg.control.latency);
    rc.num("loss_prob", cfg.control.loss, 0.0, 0.999999);
    rc.num("rto_us", cfg.control.rto, 0, 1e12);
    rc.num("max_retries", cfg.control.max_retries, 0, 1000);
  }

  if (const Json* ml = r.get("measured_link")) {
    Reader rm(*ml, "measured_link", errs);
    NodeId a = 0, b = 0;
    rm.num("a", a, 0, 4e9);
    rm.num("b", b, 0, 4e9);
    cfg.measured_link = LinkKey(a, b);
  }

  // Cross-field validation.
  std::set<NodeId> ids;
  int controllers = 0;
  for (const auto& n : cfg.nodes) {
    if (!ids.insert(n.id).second)
      errs.items.push_back("topology.nodes: duplicate id " +
                           std::to_string(n.id));
    if (n.controller) ++controllers;
  }
  if (cfg.nodes.empty())
    errs.items.push_back("topology.nodes: at least one node required");
  if (controllers > 1)
    errs.items.push_back("topology.nodes: more than one controller");
  if (controllers == 0 && cfg.method != Method::kPureDist)
    errs.items.push_back("topology.nodes: method '" +
                         std::string(method_name(cfg.method)) +
                         "' requires a controller node");
  std::set<LinkKey> seen_links;
  for (std::size_t i = 0; i < cfg.links.size(); ++i) {
    const auto& l = cfg.links[i];
    const std::string where = "topology.links[" + std::to_string(i) + "]";
    if (l.a == l.b) errs.items.push_back(where + ": self-loop");
    if (ids.count(l.a) == 0 || ids.count(l.b) == 0)
      errs.items.push_back(where + ": references unknown node");
    else if (!seen_links.insert(LinkKey(l.a, l.b)).second)
      errs.items.push_back(where + ": duplicate link " +
                           LinkKey(l.a, l.b).str());
  }
  for (std::size_t i = 0; i < cfg.demands.size(); ++i) {
    const auto& d = cfg.demands[i];
    const std::string where = "demands[" + std::to_string(i) + "]";
    if (ids.count(d.src) == 0 || ids.count(d.dst) == 0)
      errs.items.push_back(where + ": references unknown node");
  }
  for (std::size_t i = 0; i < cfg.schedule.size(); ++i) {
    const auto& e = cfg.schedule[i];
    if (e.type != EventType::kLinkDown && e.type != EventType::kLinkUp)
      continue;
    if (seen_links.count(LinkKey(e.a, e.b)) == 0)
      errs.items.push_back("schedule[" + std::to_string(i) +
                           "]: references unknown link " +
                           LinkKey(e.a, e.b).str());
  }
  if (cfg.measured_link && seen_links.count(*cfg.measured_link) == 0)
    errs.items.push_back("measured_link: references unknown link " +
                         cfg.measured_link->str());
  return cfg;
}

ScenarioConfig parse_config_file(const std::string& path, ConfigErrors& errs) {
  std::ifstream in(path);
  if (!in) {
    errs.items.push_back("config: cannot read '" + path + "'");
    return {};
  }
  Json j = Json::parse(in, nullptr, false);
  if (j.is_discarded()) {
    errs.items.push_back("config: '" + path + "' is not valid JSON");
    return {};
  }
  return parse_config(j, errs);
}

Json config_to_json(const ScenarioConfig& cfg) {
  Json j;
  j["name"] = cfg.name;
  j["method"] = method_name(cfg.method);
  j["seed"] = cfg.seed;
  j["trials"] = cfg.trials;
  j["horizon_us"] = cfg.horizon;
  Json nodes = Json::array();
  for (const auto& n : cfg.nodes)
    nodes.push_back(Json{{"id", n.id}, {"controller", n.controller}});
  Json links = Json::array();
  for (const auto& l : cfg.links)
    links.push_back(Json{{"a", l.a},
                         {"b", l.b},
                         {"latency_us", l.latency},
                         {"loss_prob", l.loss_prob},
                         {"kind", l.kind == LinkKind::kControl ? "control"
                                                               : "data"}});
  j["topology"] = Json{{"nodes", nodes}, {"links", links}};
  Json demands = Json::array();
  for (const auto& d : cfg.demands)
    demands.push_back(Json{{"src", d.src},
                           {"dst", d.dst},
                           {"period_us", d.period},
                           {"start_us", d.start},
                           {"count", d.count}});
  j["demands"] = demands;
  Json sched = Json::array();
  for (const auto& e : cfg.schedule)
    sched.push_back(Json{{"t_us", e.t},
                         {"event", event_type_name(e.type)},
                         {"a", e.a},
                         {"b", e.b}});
  j["schedule"] = sched;
  const Knobs& k = cfg.knobs;
  j["knobs"] = Json{{"tau_us", k.tau},
                    {"k", k.k},
                    {"keepalive_us", k.keepalive},
                    {"m", k.m},
                    {"stability_window_us", k.stability_window},
                    {"discovery_round_us", k.discovery_round},
                    {"pre_execution", k.pre_execution},
                    {"sigma_us", k.sigma},
                    {"flood_scope", k.flood_scope},
                    {"cluster_size", k.cluster_size},
                    {"recluster", recluster_name(k.recluster)},
                    {"recluster_period_us", k.recluster_period},
                    {"recluster_threshold", k.recluster_threshold},
                    {"backup_budget", k.backup_budget},
                    {"a_proc_us", k.a_proc},
                    {"t_install_us", k.t_install},
                    {"c_proc_us", k.c_proc},
                    {"ttl", k.ttl},
                    {"tag_depth", k.tag_depth},
                    {"table_capacity", k.table_capacity},
                    {"park_timeout_us", k.park_timeout},
                    {"compress", k.compress}};
  const ControlLatencyCfg& lat = cfg.control.latency;
  const char* dist = lat.dist == ControlLatencyCfg::Dist::kConstant ? "constant"
                     : lat.dist == ControlLatencyCfg::Dist::kUniform
                         ? "uniform"
                         : "lognormal";
  j["control"] = Json{{"latency", Json{{"dist", dist},
                                       {"constant_us", lat.constant},
                                       {"lo_us", lat.lo},
                                       {"hi_us", lat.hi},
                                       {"median_us", lat.median},
                                       {"sigma", lat.sigma},
                                       {"min_us", lat.min},
                                       {"max_us", lat.max}}},
                      {"loss_prob", cfg.control.loss},
                      {"rto_us", cfg.control.rto},
                      {"max_retries", cfg.control.max_retries}};
  if (cfg.measured_link)
    j["measured_link"] =
        Json{{"a", cfg.measured_link->a}, {"b", cfg.measured_link->b}};
  return j;
}

namespace {

void add_control_star(ScenarioConfig& cfg, NodeId controller,
                      const std::vector<NodeId>& nodes) {
  cfg.nodes.push_back({controller, true});
  for (NodeId n : nodes) {
    cfg.nodes.push_back({n, false});
    cfg.links.push_back({controller, n, ms(1), 0.0, LinkKind::kControl});
  }
}

ScenarioConfig make_prototype() {
  ScenarioConfig cfg;
  cfg.name = "prototype";
  cfg.trials = 200;
  cfg.horizon = sec(5);
  add_control_star(cfg, 0, {1, 2, 3});
  cfg.links.push_back({1, 2, ms(2), 0.0, LinkKind::kData});
  cfg.links.push_back({1, 3, ms(2), 0.0, LinkKind::kData});
  cfg.links.push_back({2, 3, ms(2), 0.0, LinkKind::kData});
  cfg.demands.push_back({2, 3, ms(20), 0, 0});
  cfg.schedule.push_back({sec(2), EventType::kLinkDown, 2, 3});
  cfg.measured_link = LinkKey(2, 3);
  return cfg;
}

ScenarioConfig make_line6() {
  ScenarioConfig cfg;
  cfg.name = "line6";
  cfg.horizon = sec(15);
  add_control_star(cfg, 0, {1, 2, 3, 4, 5, 6});
  for (NodeId i = 1; i < 6; ++i)
    cfg.links.push_back({i, i + 1, ms(2), 0.0, LinkKind::kData});
  cfg.demands.push_back({1, 6, ms(50), 0, 0});
  return cfg;
}

ScenarioConfig make_triangle() {
  ScenarioConfig cfg;
  cfg.name = "triangle";
  cfg.method = Method::kBackup;
  cfg.horizon = sec(5);
  add_control_star(cfg, 0, {1, 2, 3});
  cfg.links.push_back({1, 2, ms(2), 0.0, LinkKind::kData});
  cfg.links.push_back({2, 3, ms(2), 0.0, LinkKind::kData});
  cfg.links.push_back({1, 3, ms(2), 0.0, LinkKind::kData});
  cfg.demands.push_back({1, 2, ms(20), 0, 0});
  cfg.schedule.push_back({sec(2), EventType::kLinkDown, 1, 2});
  cfg.measured_link = LinkKey(1, 2);
  return cfg;
}

}  // namespace

ScenarioConfig make_grid12_fuzz(std::uint64_t schedule_seed, Method method) {
  ScenarioConfig cfg;
  cfg.name = "grid12-fuzz";
  cfg.method = method;
  cfg.seed = schedule_seed;
  cfg.horizon = sec(15);
  // 3x4 grid, node 1 top-left, row-major.
  std::vector<NodeId> grid;
  for (NodeId i = 1; i <= 12; ++i) grid.push_back(i);
  add_control_star(cfg, 0, grid);
  auto at = [](int r, int c) { return static_cast<NodeId>(1 + r * 4 + c); };
  std::vector<LinkKey> data_links;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c) {
      if (c + 1 < 4) data_links.emplace_back(at(r, c), at(r, c + 1));
      if (r + 1 < 3) data_links.emplace_back(at(r, c), at(r + 1, c));
    }
  }
  for (const auto& l : data_links)
    cfg.links.push_back({l.a, l.b, ms(2), 0.0, LinkKind::kData});
  cfg.demands.push_back({1, 12, ms(40), 0, 0});
  cfg.demands.push_back({4, 9, ms(40), 0, 0});
  cfg.demands.push_back({5, 8, ms(40), 0, 0});

  RngStream rng(schedule_seed, "fuzz_schedule");
  // Random link outages: down in [1s, 9s), back up 1..4s later.
  const std::size_t outages = 2 + rng.uniform_index(3);
  for (std::size_t i = 0; i < outages; ++i) {
    const LinkKey& l = data_links[rng.uniform_index(data_links.size())];
    const SimTime down = sec(1) + static_cast<SimTime>(rng.uniform() * 8e6);
    const SimTime up = down + sec(1) + static_cast<SimTime>(rng.uniform() * 3e6);
    cfg.schedule.push_back({down, EventType::kLinkDown, l.a, l.b});
    if (up < cfg.horizon - sec(1))
      cfg.schedule.push_back({up, EventType::kLinkUp, l.a, l.b});
  }
  if (method == Method::kMigration) {
    const SimTime down = sec(1) + static_cast<SimTime>(rng.uniform() * 2e6);
    const SimTime up = down + sec(5) + static_cast<SimTime>(rng.uniform() * 2e6);
    cfg.schedule.push_back({down, EventType::kControllerDisconnect, 0, 0});
    cfg.schedule.push_back({up, EventType::kControllerReconnect, 0, 0});
    cfg.knobs.pre_execution = (schedule_seed % 2) == 0;
  }
  if (method == Method::kCluster) {
    cfg.knobs.cluster_size = 3 + rng.uniform_index(3);
    cfg.knobs.recluster = ReclusterPolicy::kPeriodic;
    cfg.knobs.recluster_period = sec(4);
  }
  std::stable_sort(
      cfg.schedule.begin(), cfg.schedule.end(),
      [](const EventSpec& a, const EventSpec& b) { return a.t < b.t; });
  return cfg;
}

std::vector<std::string> builtin_names() {
  return {"prototype", "line6", "triangle", "grid12-fuzz"};
}

std::optional<ScenarioConfig> builtin_config(const std::string& name) {
  if (name == "prototype") return make_prototype();
  if (name == "line6") return make_line6();
  if (name == "triangle") return make_triangle();
  if (name == "grid12-fuzz") return make_grid12_fuzz(1, Method::kCluster);
  return std::nullopt;
}

}  // namespace hsdn
