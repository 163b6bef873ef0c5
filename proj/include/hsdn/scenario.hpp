#pragma once

#include <set>
#include <string>
#include <vector>

#include "hsdn/config.hpp"
#include "hsdn/metrics.hpp"
#include "hsdn/trace.hpp"

namespace hsdn {

// Order statistics over the non-censored samples of a batch. Times stay in
// integer microseconds except the two moments.
struct DelayStats {
  std::size_t count = 0;  // non-censored
  std::size_t censored = 0;
  double mean_us = 0.0;
  double stddev_us = 0.0;
  SimTime min_us = 0;
  SimTime p50_us = 0;
  SimTime p95_us = 0;
  SimTime p99_us = 0;
  SimTime max_us = 0;
};

DelayStats summarize(const std::vector<DelaySample>& samples);

// Nearest-rank percentile; values must be sorted ascending, q in [0, 1].
SimTime percentile(const std::vector<SimTime>& sorted_values, double q);

// Everything one simulated trial produced.
struct RunReport {
  std::uint64_t trial = 0;
  std::uint64_t seed = 0;  // per-trial derived seed
  RunMetrics metrics;
  std::vector<DelaySample> samples;
  std::set<std::string> links_used;  // data links any packet traversed
};

// A packet revisiting a node with the same remaining stack and the same
// applied rule can only repeat itself; TTL would eventually kill it, but the
// archive scan pins the cycle to the packet and rule for diagnosis. At most
// one anomaly per packet.
std::vector<Anomaly> detect_loops(const std::vector<Packet>& archive);

// Builds the network, runs to the horizon, scans the packet archive for
// forwarding loops (appended to metrics.anomalies) and reports.
RunReport run_one(const ScenarioConfig& cfg, std::uint64_t seed,
                  TraceSink* trace = nullptr);

struct BatchResult {
  std::vector<RunReport> trials;
  std::vector<DelaySample> samples;  // all trials, trial field filled in
  DelayStats stats;
};

// cfg.trials runs with per-trial seeds derived from cfg.seed.
BatchResult run_trials(const ScenarioConfig& cfg);

// --- artifacts ----------------------------------------------------------

// "quantile,delay_us" rows for q = 0.00 .. 1.00 in steps of 0.01,
// nearest-rank over the non-censored samples.
std::string cdf_csv(const std::vector<DelaySample>& samples);
std::string samples_csv(const std::vector<DelaySample>& samples);
Json batch_report_json(const ScenarioConfig& cfg, const BatchResult& batch);

// Temp file + rename, so a crashed run never leaves a truncated artifact.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace hsdn
