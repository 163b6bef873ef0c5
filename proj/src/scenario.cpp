#include "hsdn/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <tuple>

#include "hsdn/network.hpp"

namespace hsdn {

std::vector<Anomaly> detect_loops(const std::vector<Packet>& archive) {
  std::vector<Anomaly> out;
  std::set<std::tuple<NodeId, std::uint64_t, RuleId>> seen;
  for (const Packet& p : archive) {
    seen.clear();
    for (const HopRecord& h : p.path_log) {
      if (h.rule_id == 0) continue;  // terminal or no-rule records
      if (!seen.insert({h.node, h.stack_hash, h.rule_id}).second) {
        Anomaly a;
        a.kind = Anomaly::Kind::kLoop;
        a.packet_id = p.id;
        a.node = h.node;
        a.detail = "revisit rule=" + std::to_string(h.rule_id);
        out.push_back(a);
        break;
      }
    }
  }
  return out;
}

DelayStats summarize(const std::vector<DelaySample>& samples) {
  DelayStats st;
  std::vector<SimTime> vals;
  for (const DelaySample& s : samples) {
    if (s.censored) {
      ++st.censored;
      continue;
    }
    vals.push_back(s.delay_us);
  }
  st.count = vals.size();
  if (vals.empty()) return st;
  std::sort(vals.begin(), vals.end());
  st.min_us = vals.front();
  st.max_us = vals.back();
  st.p50_us = percentile(vals, 0.50);
  st.p95_us = percentile(vals, 0.95);
  st.p99_us = percentile(vals, 0.99);
  double sum = 0;
  for (SimTime v : vals) sum += double(v);
  st.mean_us = sum / double(vals.size());
  double sq = 0;
  for (SimTime v : vals) sq += (double(v) - st.mean_us) * (double(v) - st.mean_us);
  st.stddev_us = vals.size() > 1 ? std::sqrt(sq / double(vals.size() - 1)) : 0.0;
  return st;
}

SimTime percentile(const std::vector<SimTime>& sorted_values, double q) {
  if (sorted_values.empty()) return 0;
  if (q <= 0.0) return sorted_values.front();
  const auto n = sorted_values.size();
  auto rank = static_cast<std::size_t>(std::ceil(q * double(n)));
  rank = std::clamp<std::size_t>(rank, 1, n);
  return sorted_values[rank - 1];
}

RunReport run_one(const ScenarioConfig& cfg, std::uint64_t seed,
                  TraceSink* trace) {
  Simulator sim(seed);
  if (trace) sim.set_trace(trace);
  Network net(sim, cfg);
  net.start();
  sim.run_until(cfg.horizon);
  net.finalize();

  RunReport rep;
  rep.seed = seed;
  rep.metrics = sim.metrics();
  rep.samples = net.samples();
  for (const Anomaly& a : detect_loops(net.archive()))
    rep.metrics.anomalies.push_back(a);
  for (const Packet& p : net.archive())
    for (std::size_t i = 1; i < p.path_log.size(); ++i) {
      const NodeId a = p.path_log[i - 1].node;
      const NodeId b = p.path_log[i].node;
      if (a != b) rep.links_used.insert(LinkKey(a, b).str());
    }
  return rep;
}

BatchResult run_trials(const ScenarioConfig& cfg) {
  BatchResult out;
  for (std::uint64_t t = 0; t < cfg.trials; ++t) {
    RunReport rep = run_one(cfg, RngStream::derive_seed(cfg.seed, t));
    rep.trial = t;
    for (DelaySample s : rep.samples) {
      s.trial = t;
      out.samples.push_back(s);
    }
    out.trials.push_back(std::move(rep));
  }
  out.stats = summarize(out.samples);
  return out;
}

std::string cdf_csv(const std::vector<DelaySample>& samples) {
  std::vector<SimTime> vals;
  for (const DelaySample& s : samples)
    if (!s.censored) vals.push_back(s.delay_us);
  std::sort(vals.begin(), vals.end());
  std::string out = "quantile,delay_us\n";
  for (int i = 0; i <= 100; ++i) {
    const double q = double(i) / 100.0;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f,%lld\n", q,
                  static_cast<long long>(percentile(vals, q)));
    out += buf;
  }
  return out;
}

std::string samples_csv(const std::vector<DelaySample>& samples) {
  std::string out =
      "trial,method,delay_us,signal_up_us,compute_us,signal_down_us,"
      "install_us,retries_us,censored\n";
  for (const DelaySample& s : samples) {
    out += std::to_string(s.trial) + "," + s.method + "," +
           std::to_string(s.delay_us) + "," + std::to_string(s.signal_up_us) +
           "," + std::to_string(s.compute_us) + "," +
           std::to_string(s.signal_down_us) + "," +
           std::to_string(s.install_us) + "," + std::to_string(s.retries_us) +
           "," + (s.censored ? "1" : "0") + "\n";
  }
  return out;
}

Json batch_report_json(const ScenarioConfig& cfg, const BatchResult& batch) {
  Json j;
  j["scenario"] = cfg.name;
  j["method"] = method_name(cfg.method);
  j["seed"] = cfg.seed;
  j["trials"] = cfg.trials;
  j["horizon_us"] = cfg.horizon;

  Json st;
  st["samples"] = batch.stats.count;
  st["censored"] = batch.stats.censored;
  st["mean_us"] = batch.stats.mean_us;
  st["stddev_us"] = batch.stats.stddev_us;
  st["min_us"] = batch.stats.min_us;
  st["p50_us"] = batch.stats.p50_us;
  st["p95_us"] = batch.stats.p95_us;
  st["p99_us"] = batch.stats.p99_us;
  st["max_us"] = batch.stats.max_us;
  j["delay"] = st;

  Json comp;
  const char* names[] = {"signal_up_us", "compute_us", "signal_down_us",
                         "install_us", "retries_us"};
  for (int c = 0; c < 5; ++c) {
    double sum = 0;
    std::size_t n = 0;
    for (const DelaySample& s : batch.samples) {
      if (s.censored) continue;
      const SimTime v = c == 0   ? s.signal_up_us
                        : c == 1 ? s.compute_us
                        : c == 2 ? s.signal_down_us
                        : c == 3 ? s.install_us
                                 : s.retries_us;
      sum += double(v);
      ++n;
    }
    comp[names[c]] = n ? sum / double(n) : 0.0;
  }
  j["mean_components"] = comp;

  Json trials = Json::array();
  for (const RunReport& r : batch.trials) {
    Json t;
    t["trial"] = r.trial;
    t["seed"] = r.seed;
    const RunMetrics& m = r.metrics;
    t["generated"] = m.generated;
    t["delivered"] = m.delivered;
    Json drops;
    for (const auto& [cause, n] : m.dropped) drops[drop_cause_name(cause)] = n;
    t["dropped"] = drops;
    t["in_flight_end"] = m.in_flight_end;
    t["conservation"] = m.conservation_holds();
    t["detections"] = m.detections;
    t["retags"] = m.retags;
    t["reclusters"] = m.reclusters;
    Json msgs;
    msgs["heartbeats"] = m.messages.heartbeats;
    msgs["lsas"] = m.messages.lsas;
    msgs["control"] = m.messages.control_by_kind;
    t["messages"] = msgs;
    t["rule_installs"] = m.rule_installs;
    t["rule_removes"] = m.rule_removes;
    t["table_overflows"] = m.table_overflows;
    t["link_reports_received"] = m.link_reports_received;
    Json anoms = Json::array();
    for (const Anomaly& a : m.anomalies) {
      Json aj;
      aj["kind"] = a.kind == Anomaly::Kind::kLoop      ? "loop"
                   : a.kind == Anomaly::Kind::kTtlExpiry ? "ttl-expiry"
                                                         : "dead-end";
      aj["packet"] = a.packet_id;
      aj["node"] = a.node;
      aj["detail"] = a.detail;
      anoms.push_back(aj);
    }
    t["anomalies"] = anoms;
    Json incs = Json::array();
    for (const Incident& inc : m.incidents) {
      Json ij;
      ij["kind"] = inc.kind;
      ij["detail"] = inc.detail;
      ij["t"] = inc.t;
      incs.push_back(ij);
    }
    t["incidents"] = incs;
    trials.push_back(std::move(t));
  }
  j["runs"] = trials;
  return j;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw ScenarioError("cannot write " + tmp);
    os.write(content.data(), std::streamsize(content.size()));
    if (!os.flush()) throw ScenarioError("short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace hsdn
