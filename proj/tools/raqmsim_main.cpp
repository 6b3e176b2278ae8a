#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "raqmsim/scenario.hpp"
#include "raqmsim/seqio.hpp"

namespace {

using namespace raqmsim;

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 1;
constexpr int kExitViolation = 2;

ScenarioConfig load_config(const std::string& scenario, const std::string& config_path,
                           std::uint64_t seed, bool seed_given) {
  ScenarioConfig cfg = ScenarioConfig::preset(scenario_from_name(scenario), seed);
  if (!config_path.empty()) {
    nlohmann::json j = nlohmann::json::parse(read_text_file(config_path));
    j["scenario"] = scenario;  // the command line names the scenario
    if (seed_given || !j.contains("seed")) j["seed"] = seed;
    cfg = ScenarioConfig::from_json(j);
  }
  return cfg;
}

int cmd_run(const std::string& scenario, const std::string& config_path, std::uint64_t seed,
            bool seed_given, const std::string& out_dir) {
  const ScenarioConfig cfg = load_config(scenario, config_path, seed, seed_given);
  const ScenarioResult result = run_scenario(cfg);
  write_scenario_outputs(result, out_dir);
  std::cout << scenario_name(cfg.kind) << " seed=" << cfg.seed
            << " config_hash=" << cfg.config_hash() << "\n"
            << "  instructions=" << result.metrics.n_instructions
            << " retrieved=" << result.metrics.n_retrieved
            << " forced_fraction=" << result.metrics.forced_fraction << "\n"
            << "  outputs in " << out_dir << "\n";
  return kExitOk;
}

int cmd_validate(const std::string& path, bool window_enabled, double window_us) {
  const auto seq = parse_sequence(read_text_file(path));
  const auto violations = validate_sequence(
      seq, window_enabled ? std::optional<double>(window_us) : std::nullopt);
  if (violations.empty()) {
    std::cout << "ok: " << seq.size() << " instructions\n";
    return kExitOk;
  }
  for (const auto& v : violations) {
    std::cout << "violation at instruction " << v.index << ": " << v.kind << " (" << v.detail
              << ")\n";
  }
  return kExitViolation;
}

int cmd_metrics(const std::string& trace_path, double threshold, const std::string& out_path) {
  const Trace trace = trace_from_json(nlohmann::json::parse(read_text_file(trace_path)));
  const MetricsReport report = compute_metrics(
      trace, threshold, 0.5, end_to_end_efficiency(EfficiencyBudget::table_defaults()));
  const std::string text = metrics_to_json(report).dump(2) + "\n";
  if (out_path.empty()) {
    std::cout << text;
  } else {
    write_text_file(out_path, text);
  }
  return kExitOk;
}

int cmd_sweep(const std::string& scenario, const std::string& config_path, std::uint64_t seed_from,
              std::uint64_t seed_to, const std::string& out_dir) {
  if (seed_to < seed_from) {
    throw std::invalid_argument("sweep: seed range is empty");
  }
  nlohmann::json per_seed = nlohmann::json::array();
  double forced_sum = 0.0;
  double storage_sum = 0.0;
  int storage_runs = 0;
  for (std::uint64_t seed = seed_from; seed <= seed_to; ++seed) {
    const ScenarioConfig cfg = load_config(scenario, config_path, seed, true);
    const ScenarioResult result = run_scenario(cfg);
    write_scenario_outputs(result, out_dir + "/seed_" + std::to_string(seed));
    nlohmann::json row;
    row["seed"] = seed;
    row["forced_fraction"] = result.metrics.forced_fraction;
    row["mean_storage_us"] = result.metrics.mean_storage_us;
    row["n_retrieved"] = result.metrics.n_retrieved;
    row["final_filling"] = result.metrics.final_filling;
    per_seed.push_back(std::move(row));
    forced_sum += result.metrics.forced_fraction;
    if (result.metrics.n_retrieved > 0) {
      storage_sum += result.metrics.mean_storage_us;
      ++storage_runs;
    }
  }
  const auto runs = static_cast<double>(seed_to - seed_from + 1);
  nlohmann::json summary;
  summary["scenario"] = scenario;
  summary["seeds"] = {seed_from, seed_to};
  summary["mean_forced_fraction"] = forced_sum / runs;
  summary["mean_storage_us"] = storage_runs > 0 ? storage_sum / storage_runs : 0.0;
  summary["runs"] = std::move(per_seed);
  write_text_file(out_dir + "/sweep_summary.json", summary.dump(2) + "\n");
  std::cout << "sweep complete: " << runs << " runs, summary in " << out_dir
            << "/sweep_summary.json\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"raqmsim: discrete-event simulator of a programmable multiplexed photonic quantum memory"};
  app.require_subcommand(1);

  std::string scenario;
  std::string config_path;
  std::string out_dir = "out";
  std::string in_path;
  std::string out_path;
  std::uint64_t seed = 1;
  std::uint64_t seed_from = 1;
  std::uint64_t seed_to = 1;
  double threshold = 2.0 / 3.0;
  double window_us = kDefaultWindowUs;
  bool window_enabled = false;

  auto* run = app.add_subcommand("run", "run one scenario and write its artifacts");
  run->add_option("scenario", scenario, "scenario kind (e.g. raqm250, queue72, epr_reshuffle)")
      ->required();
  auto* seed_opt = run->add_option("--seed", seed, "RNG seed");
  run->add_option("--config", config_path, "JSON config file with overrides");
  run->add_option("--out", out_dir, "output directory");

  auto* validate = app.add_subcommand("validate", "check a sequence file against the protocol rules");
  validate->add_option("sequence", in_path, "sequence file")->required();
  auto* window_opt =
      validate->add_option("--window", window_us, "also check the scrolling window (us)");

  auto* metrics = app.add_subcommand("metrics", "recompute metrics from a trace file");
  metrics->add_option("trace", in_path, "trace.json file")->required();
  metrics->add_option("--threshold", threshold, "quantum-storage fidelity threshold");
  metrics->add_option("--out", out_path, "output file (stdout when omitted)");

  auto* sweep = app.add_subcommand("sweep", "run a scenario over a seed range");
  sweep->add_option("scenario", scenario, "scenario kind")->required();
  sweep->add_option("--seeds", [&seed_from, &seed_to](const std::vector<std::string>& vals) {
        const std::string& range = vals.front();
        const auto dots = range.find("..");
        if (dots == std::string::npos) return false;
        seed_from = std::stoull(range.substr(0, dots));
        seed_to = std::stoull(range.substr(dots + 2));
        return true;
      }, "seed range A..B")
      ->required();
  sweep->add_option("--config", config_path, "JSON config file with overrides");
  sweep->add_option("--out", out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfigError;
  }

  try {
    if (run->parsed()) {
      return cmd_run(scenario, config_path, seed, seed_opt->count() > 0, out_dir);
    }
    if (validate->parsed()) {
      window_enabled = window_opt->count() > 0;
      return cmd_validate(in_path, window_enabled, window_us);
    }
    if (metrics->parsed()) {
      return cmd_metrics(in_path, threshold, out_path);
    }
    if (sweep->parsed()) {
      return cmd_sweep(scenario, config_path, seed_from, seed_to, out_dir);
    }
  } catch (const ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const InvariantError& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return kExitViolation;
  } catch (const ProtocolViolation& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return kExitViolation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitViolation;
  }
  return kExitOk;
}
