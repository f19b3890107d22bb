#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "flowmob/flowmob.hpp"

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitIo = 2;

int exit_code_for(const flowmob::Error& e) {
  return e.code() == flowmob::ErrorCode::IoFailure ? kExitIo : kExitConfig;
}

void apply_overrides(flowmob::ExperimentConfig& cfg, const std::vector<std::string>& sets) {
  for (const auto& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw flowmob::Error(flowmob::ErrorCode::InvalidConfig, "--set expects key=value, got '" + kv + "'");
    }
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
}

void emit(const flowmob::ExperimentConfig& cfg) {
  const auto csv = flowmob::run_experiment(cfg);
  if (cfg.output_path.empty()) std::cout << csv;
}

void list_all() {
  std::cout << "experiments:\n";
  for (auto e : flowmob::kAllExperiments) {
    const auto info = flowmob::experiment_info(e);
    std::cout << "  " << flowmob::to_string(e);
    if (e != flowmob::Experiment::ScenarioTrace) std::cout << "  (default sweep " << info.sweep.to_string() << ")";
    std::cout << "\n";
  }
  std::cout << "techniques:\n";
  for (auto t : flowmob::kAllTechniques) {
    std::cout << "  " << flowmob::to_string(t) << "  [" << flowmob::to_string(flowmob::environment_of(t)) << "]\n";
  }
  std::cout << "cases:\n";
  for (auto c : flowmob::kAllScenarioCases) {
    std::cout << "  " << flowmob::to_string(c) << "  ["
              << flowmob::to_string(flowmob::traits_of(c).environment) << "]\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Flow mobility analytics and simulation for PMIPv6 multi-homed networks", "flowmob"};
  app.require_subcommand(1);

  std::string experiment, env, sweep, out, config_path, case_name;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> sets;

  auto* run = app.add_subcommand("run", "Run an experiment and write CSV (+ .meta sidecar)");
  run->add_option("experiment", experiment, "Experiment name (see `flowmob list`)");
  run->add_option("--env", env, "single | multi (default: both)");
  run->add_option("--sweep", sweep, "param:start:stop:steps");
  run->add_option("--seed", seed, "Simulation seed");
  run->add_option("--out", out, "Output CSV path (stdout when omitted)");
  run->add_option("--config", config_path, "Flat key = value config file");
  run->add_option("--set", sets, "Override key=value (repeatable)");

  auto* trace = app.add_subcommand("trace", "Print the signaling trace of a scenario case");
  trace->add_option("case", case_name, "Case name (see `flowmob list`)")->required();
  trace->add_option("--out", out, "Output CSV path (stdout when omitted)");
  trace->add_option("--set", sets, "Override key=value (repeatable)");

  app.add_subcommand("list", "List experiments, techniques and scenario cases");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (app.got_subcommand("list")) {
      list_all();
      return 0;
    }
    flowmob::ExperimentConfig cfg;
    if (app.got_subcommand("trace")) {
      cfg.experiment = flowmob::Experiment::ScenarioTrace;
      cfg.set("case", case_name);
      if (!out.empty()) cfg.output_path = out;
      apply_overrides(cfg, sets);
      emit(cfg);
      return 0;
    }
    if (!config_path.empty()) cfg = flowmob::ExperimentConfig::from_file(config_path);
    if (!experiment.empty()) cfg.set("experiment", experiment);
    if (!env.empty()) cfg.set("env", env);
    if (!sweep.empty()) cfg.set("sweep", sweep);
    if (seed) cfg.seed = *seed;
    if (!out.empty()) cfg.output_path = out;
    apply_overrides(cfg, sets);
    if (experiment.empty() && config_path.empty()) {
      throw flowmob::Error(flowmob::ErrorCode::InvalidConfig, "run needs an experiment name or --config");
    }
    emit(cfg);
    return 0;
  } catch (const flowmob::Error& e) {
    std::cerr << "flowmob: " << e.what() << "\n";
    return exit_code_for(e);
  }
}
