// Command-line front end: run one scenario, compare methods on the same
// scenario, or validate a config file. Artifacts land in --out as
// report.json, samples.csv, cdf.csv and optionally trace.txt.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "hsdn/network.hpp"
#include "hsdn/scenario.hpp"

namespace fs = std::filesystem;
using namespace hsdn;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitAnomaly = 2;
constexpr int kExitFatal = 3;

// Incidents that indicate a broken harness rather than a degraded network.
bool incident_fatal(const Incident& inc) {
  return inc.kind == "double-terminal" || inc.kind == "sample-accounting" ||
         inc.kind == "reconcile-postcondition";
}

int batch_exit_code(const BatchResult& batch) {
  int code = kExitOk;
  for (const RunReport& r : batch.trials) {
    if (!r.metrics.conservation_holds()) return kExitFatal;
    for (const Incident& inc : r.metrics.incidents)
      if (incident_fatal(inc)) return kExitFatal;
    if (!r.metrics.anomalies.empty()) code = kExitAnomaly;
  }
  return code;
}

ScenarioConfig load_config(const std::string& ref, ConfigErrors& errs) {
  if (auto b = builtin_config(ref)) return *b;
  return parse_config_file(ref, errs);
}

void apply_overrides(ScenarioConfig& cfg, const std::string& method,
                     std::uint64_t* seed, std::uint64_t* trials,
                     ConfigErrors& errs) {
  if (!method.empty()) {
    if (auto m = method_from_name(method))
      cfg.method = *m;
    else
      errs.items.push_back("unknown method '" + method + "'");
  }
  if (seed)
    cfg.seed = *seed;
  else if (const char* env = std::getenv("HSDN_SEED"))
    cfg.seed = std::strtoull(env, nullptr, 10);
  if (trials) cfg.trials = *trials;
}

void write_batch_artifacts(const fs::path& dir, const ScenarioConfig& cfg,
                           const BatchResult& batch) {
  fs::create_directories(dir);
  write_file_atomic((dir / "report.json").string(),
                    batch_report_json(cfg, batch).dump(2) + "\n");
  write_file_atomic((dir / "samples.csv").string(),
                    samples_csv(batch.samples));
  write_file_atomic((dir / "cdf.csv").string(), cdf_csv(batch.samples));
}

void print_summary(const ScenarioConfig& cfg, const BatchResult& batch) {
  const DelayStats& st = batch.stats;
  std::uint64_t anomalies = 0;
  for (const RunReport& r : batch.trials) anomalies += r.metrics.anomalies.size();
  std::cout << method_name(cfg.method) << " " << cfg.name << ": trials="
            << batch.trials.size() << " samples=" << st.count << " censored="
            << st.censored << " mean=" << st.mean_us / 1000.0 << "ms p95="
            << double(st.p95_us) / 1000.0 << "ms anomalies=" << anomalies
            << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deterministic mobile-SDN failure reaction simulator"};
  app.require_subcommand(1);

  std::string config_ref, out_dir = "out", method_override;
  std::uint64_t seed_flag = 0, trials_flag = 0;
  bool want_trace = false;

  auto* run = app.add_subcommand("run", "run one scenario batch");
  run->add_option("--config", config_ref, "config file or builtin name")
      ->required();
  run->add_option("--out", out_dir, "artifact directory");
  run->add_option("--method", method_override, "override the method");
  auto* seed_opt = run->add_option("--seed", seed_flag, "override the seed");
  auto* trials_opt =
      run->add_option("--trials", trials_flag, "override the trial count");
  run->add_flag("--trace", want_trace, "also write trace.txt of trial 0");

  std::vector<std::string> cmp_methods;
  auto* cmp = app.add_subcommand("compare", "run several methods side by side");
  cmp->add_option("--config", config_ref, "config file or builtin name")
      ->required();
  cmp->add_option("--methods", cmp_methods, "two or more methods")
      ->required()
      ->delimiter(',');
  cmp->add_option("--out", out_dir, "artifact directory");
  auto* cmp_seed = cmp->add_option("--seed", seed_flag, "override the seed");
  auto* cmp_trials =
      cmp->add_option("--trials", trials_flag, "override the trial count");

  auto* val = app.add_subcommand("validate", "parse and check a config");
  val->add_option("--config", config_ref, "config file or builtin name")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    ConfigErrors errs;
    ScenarioConfig cfg = load_config(config_ref, errs);
    if (!errs.ok()) {
      std::cerr << errs.str();
      return kExitConfig;
    }

    if (val->parsed()) {
      std::cout << "ok name=" << cfg.name << " method="
                << method_name(cfg.method) << " nodes=" << cfg.nodes.size()
                << " links=" << cfg.links.size() << " demands="
                << cfg.demands.size() << "\n";
      return kExitOk;
    }

    if (run->parsed()) {
      apply_overrides(cfg, method_override,
                      seed_opt->count() ? &seed_flag : nullptr,
                      trials_opt->count() ? &trials_flag : nullptr, errs);
      if (!errs.ok()) {
        std::cerr << errs.str();
        return kExitConfig;
      }
      BatchResult batch = run_trials(cfg);
      write_batch_artifacts(out_dir, cfg, batch);
      if (want_trace) {
        MemoryTraceSink sink;
        run_one(cfg, RngStream::derive_seed(cfg.seed, 0), &sink);
        write_file_atomic((fs::path(out_dir) / "trace.txt").string(),
                          sink.text());
      }
      print_summary(cfg, batch);
      return batch_exit_code(batch);
    }

    // compare
    if (cmp_methods.size() < 2) {
      std::cerr << "compare needs at least two methods\n";
      return kExitConfig;
    }
    int worst = kExitOk;
    std::string table =
        "method,samples,censored,mean_us,p50_us,p95_us,p99_us\n";
    for (const std::string& name : cmp_methods) {
      ScenarioConfig mc = cfg;
      apply_overrides(mc, name, cmp_seed->count() ? &seed_flag : nullptr,
                      cmp_trials->count() ? &trials_flag : nullptr, errs);
      if (!errs.ok()) {
        std::cerr << errs.str();
        return kExitConfig;
      }
      BatchResult batch = run_trials(mc);
      write_batch_artifacts(fs::path(out_dir) / name, mc, batch);
      print_summary(mc, batch);
      const DelayStats& st = batch.stats;
      table += name + "," + std::to_string(st.count) + "," +
               std::to_string(st.censored) + "," +
               std::to_string(st.mean_us) + "," + std::to_string(st.p50_us) +
               "," + std::to_string(st.p95_us) + "," +
               std::to_string(st.p99_us) + "\n";
      worst = std::max(worst, batch_exit_code(batch));
    }
    fs::create_directories(out_dir);
    write_file_atomic((fs::path(out_dir) / "compare.csv").string(), table);
    return worst;
  } catch (const std::exception& e) {
    std::cerr << "fatal: " << e.what() << "\n";
    return kExitFatal;
  }
}
