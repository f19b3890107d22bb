#pragma once

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <tuple>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "flowmob/analytical.hpp"
#include "flowmob/core.hpp"
#include "flowmob/error.hpp"
#include "flowmob/scenario.hpp"
#include "flowmob/sim.hpp"

namespace flowmob {

enum class Experiment {
  AvgHopDelayVsWirelessDelay,
  LatencyVsDensity,
  LatencyVsArrival,
  CostVsLinkChanges,
  CostVsSMR,
  CostVsLinkFailure,
  LossVsArrival,
  LossVsDensity,
  SimLatencyVsDensity,
  SimLatencyVsArrival,
  ScenarioTrace,
};

inline constexpr std::array kAllExperiments = {
    Experiment::AvgHopDelayVsWirelessDelay, Experiment::LatencyVsDensity,
    Experiment::LatencyVsArrival,           Experiment::CostVsLinkChanges,
    Experiment::CostVsSMR,                  Experiment::CostVsLinkFailure,
    Experiment::LossVsArrival,              Experiment::LossVsDensity,
    Experiment::SimLatencyVsDensity,        Experiment::SimLatencyVsArrival,
    Experiment::ScenarioTrace,
};

inline std::string_view to_string(Experiment e) {
  switch (e) {
    case Experiment::AvgHopDelayVsWirelessDelay: return "avg_hop_delay_vs_wireless_delay";
    case Experiment::LatencyVsDensity: return "latency_vs_density";
    case Experiment::LatencyVsArrival: return "latency_vs_arrival";
    case Experiment::CostVsLinkChanges: return "cost_vs_link_changes";
    case Experiment::CostVsSMR: return "cost_vs_smr";
    case Experiment::CostVsLinkFailure: return "cost_vs_link_failure";
    case Experiment::LossVsArrival: return "loss_vs_arrival";
    case Experiment::LossVsDensity: return "loss_vs_density";
    case Experiment::SimLatencyVsDensity: return "sim_latency_vs_density";
    case Experiment::SimLatencyVsArrival: return "sim_latency_vs_arrival";
    case Experiment::ScenarioTrace: return "scenario_trace";
  }
  return "?";
}

inline Experiment parse_experiment(std::string_view text) {
  for (auto e : kAllExperiments) {
    if (to_string(e) == text) return e;
  }
  throw Error(ErrorCode::InvalidConfig, "unknown experiment '" + std::string(text) + "'");
}

inline bool is_simulation(Experiment e) {
  return e == Experiment::SimLatencyVsDensity || e == Experiment::SimLatencyVsArrival;
}

struct Sweep {
  std::string param;
  double start = 0.0;
  double stop = 0.0;
  int steps = 2;

  std::vector<double> values() const {
    std::vector<double> out;
    out.reserve(steps);
    for (int i = 0; i < steps; ++i) {
      out.push_back(i + 1 == steps ? stop : start + (stop - start) * i / (steps - 1.0));
    }
    return out;
  }

  std::string to_string() const {
    return fmt::format("{}:{}:{}:{}", param, start, stop, steps);
  }

  static Sweep parse(std::string_view text);
};

/// Default sweep and the metric column each experiment reports.
struct ExperimentInfo {
  Sweep sweep;
  std::string_view metric;
};

inline ExperimentInfo experiment_info(Experiment e) {
  switch (e) {
    case Experiment::AvgHopDelayVsWirelessDelay: return {{"t_mr", 1, 30, 30}, "avg_hop_delay_ms"};
    case Experiment::LatencyVsDensity: return {{"k_ratio", 0, 0.9, 10}, "handover_latency_ms"};
    case Experiment::LatencyVsArrival: return {{"lambda_over_vf", 0.5, 5, 10}, "handover_latency_ms"};
    case Experiment::CostVsLinkChanges: return {{"n_l", 1, 10, 10}, "signaling_cost_bytes"};
    case Experiment::CostVsSMR: return {{"smr", 0.1, 2, 20}, "signaling_cost_bytes"};
    case Experiment::CostVsLinkFailure: return {{"p_f", 0, 0.9, 10}, "signaling_cost_bytes"};
    case Experiment::LossVsArrival: return {{"lambda_over_vf", 0.5, 5, 10}, "packet_loss"};
    case Experiment::LossVsDensity: return {{"k_ratio", 0, 0.9, 10}, "packet_loss"};
    case Experiment::SimLatencyVsDensity: return {{"k_ratio", 0.1, 0.9, 9}, "latency_ms"};
    case Experiment::SimLatencyVsArrival: return {{"lambda", 20, 140, 7}, "latency_ms"};
    case Experiment::ScenarioTrace: return {{"", 0, 0, 0}, ""};
  }
  return {};
}

/// Everything needed to reproduce one run. Settable from a flat
/// `key = value` file and from `--set key=value`.
struct ExperimentConfig {
  Experiment experiment = Experiment::AvgHopDelayVsWirelessDelay;
  std::optional<Environment> environment;
  std::optional<Sweep> sweep;
  std::optional<ScenarioCase> scenario_case;
  Topology topology;
  ModelParams params;
  double jitter = 0.5;
  int arrivals_per_run = 10000;
  int replications = 1000;
  std::uint64_t seed = 1;
  FormulaMode formula_mode = FormulaMode::Verbatim;
  HnbpMode hnbp_mode = HnbpMode::ExactSet;
  bool fmi_cleanup = true;
  std::string output_path;

  Sweep effective_sweep() const { return sweep.value_or(experiment_info(experiment).sweep); }

  std::vector<Technique> techniques() const {
    if (environment) return techniques_for(*environment);
    return {kAllTechniques.begin(), kAllTechniques.end()};
  }

  void set(std::string_view key, std::string_view value);
  void set_numeric(std::string_view key, double value);
  void validate() const;
  std::string to_metadata() const;

  static ExperimentConfig from_text(std::string_view text, ExperimentConfig base);
  static ExperimentConfig from_text(std::string_view text) { return from_text(text, ExperimentConfig{}); }
  static ExperimentConfig from_file(const std::string& path, ExperimentConfig base);
  static ExperimentConfig from_file(const std::string& path) { return from_file(path, ExperimentConfig{}); }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(std::string_view key, std::string_view text) {
  try {
    std::size_t used = 0;
    const std::string s(text);
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidConfig,
                std::string(key) + ": expected a number, got '" + std::string(text) + "'");
  }
}

inline int as_int(std::string_view key, double v) {
  if (std::floor(v) != v || std::abs(v) > 1e9) {
    throw Error(ErrorCode::InvalidConfig, std::string(key) + ": expected an integer, got " +
                                              fmt::format("{}", v));
  }
  return static_cast<int>(v);
}

inline bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error(ErrorCode::InvalidConfig, std::string(key) + ": expected true/false");
}

inline Environment parse_environment(std::string_view v) {
  if (v == "single") return Environment::SingleLMA;
  if (v == "multi") return Environment::MultiLMA;
  throw Error(ErrorCode::InvalidConfig, "env: expected single or multi, got '" + std::string(v) + "'");
}

}  // namespace detail

inline Sweep Sweep::parse(std::string_view text) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : text) {
    if (c == ':') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(cur);
  if (parts.size() != 4 || parts[0].empty()) {
    throw Error(ErrorCode::InvalidConfig, "sweep: expected param:start:stop:steps, got '" +
                                              std::string(text) + "'");
  }
  Sweep s{parts[0], detail::parse_double("sweep", parts[1]), detail::parse_double("sweep", parts[2]),
          detail::as_int("sweep", detail::parse_double("sweep", parts[3]))};
  if (s.steps < 1) throw Error(ErrorCode::InvalidConfig, "sweep: steps must be >= 1");
  if (s.steps == 1 && s.start != s.stop) {
    throw Error(ErrorCode::InvalidConfig, "sweep: a single step needs start == stop");
  }
  return s;
}

inline void ExperimentConfig::set_numeric(std::string_view key, double v) {
  using detail::as_int;
  if (key == "t_mr") topology.t_mr = v;
  else if (key == "t_ra") topology.t_ra = v;
  else if (key == "t_am") topology.t_am = v;
  else if (key == "t_pn") topology.t_pn = v;
  else if (key == "n_mn_mag") topology.n_mn_mag = as_int(key, v);
  else if (key == "n_mag_lma") topology.n_mag_lma = as_int(key, v);
  else if (key == "n_mag_mag") topology.n_mag_mag = as_int(key, v);
  else if (key == "n_lma_lma") topology.n_lma_lma = as_int(key, v);
  else if (key == "lambda") params.lambda = v;
  else if (key == "mu") params.mu = v;
  else if (key == "v_f") params.v_f = v;
  else if (key == "k_ratio") params.k_ratio = v;
  else if (key == "lambda_s") params.lambda_s = v;
  else if (key == "mu_l") params.mu_l = v;
  else if (key == "p_f") params.p_f = v;
  else if (key == "n_l") params.n_l = as_int(key, v);
  else if (key == "jitter") jitter = v;
  else if (key == "arrivals_per_run") arrivals_per_run = as_int(key, v);
  else if (key == "replications") replications = as_int(key, v);
  else if (key == "seed") {
    if (v < 0 || std::floor(v) != v) throw Error(ErrorCode::InvalidConfig, "seed: expected a non-negative integer");
    seed = static_cast<std::uint64_t>(v);
  }
  // Composite sweep variables.
  else if (key == "lambda_over_vf") {
    if (!(v > 0)) throw Error(ErrorCode::InvalidConfig, "lambda_over_vf must be > 0");
    params.v_f = params.lambda / v;
  } else if (key == "smr") {
    params.lambda_s = v * params.mu_l;
  } else {
    throw Error(ErrorCode::InvalidConfig, "unknown parameter '" + std::string(key) + "'");
  }
}

inline void ExperimentConfig::set(std::string_view key_in, std::string_view value_in) {
  const std::string key = detail::trim(key_in);
  const std::string value = detail::trim(value_in);
  if (key == "experiment") experiment = parse_experiment(value);
  else if (key == "env") {
    if (value.empty() || value == "both") environment.reset();
    else environment = detail::parse_environment(value);
  } else if (key == "sweep") {
    if (value.empty()) sweep.reset();
    else sweep = Sweep::parse(value);
  } else if (key == "case") {
    try {
      scenario_case = parse_scenario_case(value);
    } catch (const Error& e) {
      throw Error(ErrorCode::InvalidConfig, std::string("case: ") + e.what());
    }
  } else if (key == "out") output_path = value;
  else if (key == "formula_mode") {
    if (value == "verbatim") formula_mode = FormulaMode::Verbatim;
    else if (value == "corrected") formula_mode = FormulaMode::Corrected;
    else throw Error(ErrorCode::InvalidConfig, "formula_mode: expected verbatim or corrected");
  } else if (key == "corrected_formulas") {
    formula_mode = detail::parse_bool(key, value) ? FormulaMode::Corrected : FormulaMode::Verbatim;
  } else if (key == "hnbp_mode") {
    try {
      hnbp_mode = parse_hnbp_mode(value);
    } catch (const Error&) {
      throw Error(ErrorCode::InvalidConfig, "hnbp_mode: expected exact or ormask");
    }
  } else if (key == "fmi_cleanup") fmi_cleanup = detail::parse_bool(key, value);
  else if (key == "seed") {
    try {
      std::size_t used = 0;
      seed = std::stoull(value, &used);
      if (used != value.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidConfig, "seed: expected a non-negative integer");
    }
  } else {
    set_numeric(key, detail::parse_double(key, value));
  }
}

inline void ExperimentConfig::validate() const {
  auto wrap = [](const auto& fn) {
    try {
      fn();
    } catch (const Error& e) {
      if (e.code() == ErrorCode::InvalidConfig) throw;
      throw Error(ErrorCode::InvalidConfig, e.what());
    }
  };
  wrap([&] { topology.validate(); });
  wrap([&] { params.validate(); });
  if (!(jitter >= 0) || !(jitter < 1)) throw Error(ErrorCode::InvalidConfig, "jitter must lie in [0,1)");
  if (replications < 1) throw Error(ErrorCode::InvalidConfig, "replications must be >= 1");
  if (arrivals_per_run < 1) throw Error(ErrorCode::InvalidConfig, "arrivals_per_run must be >= 1");
  if (experiment == Experiment::ScenarioTrace) {
    if (!scenario_case) throw Error(ErrorCode::InvalidConfig, "case: scenario_trace needs a case");
    if (environment && *environment != traits_of(*scenario_case).environment) {
      throw Error(ErrorCode::InvalidConfig, "env: does not match case " +
                                                std::string(to_string(*scenario_case)));
    }
    return;
  }
  const auto s = effective_sweep();
  if (s.steps < 1 || (s.steps == 1) != (s.start == s.stop)) {
    throw Error(ErrorCode::InvalidConfig, "sweep: bad range " + s.to_string());
  }
  // Every sweep point must be a valid parameter set.
  for (double v : s.values()) {
    ExperimentConfig probe = *this;
    probe.set_numeric(s.param, v);
    wrap([&] { probe.topology.validate(); });
    wrap([&] { probe.params.validate(); });
  }
}

inline std::string ExperimentConfig::to_metadata() const {
  std::string out;
  auto kv = [&](std::string_view k, const std::string& v) { out += fmt::format("{} = {}\n", k, v); };
  out += "# flowmob run metadata; reload with `flowmob run --config <this file>`\n";
  kv("experiment", std::string(to_string(experiment)));
  kv("env", environment ? std::string(to_string(*environment)) : "both");
  if (experiment == Experiment::ScenarioTrace) {
    if (scenario_case) kv("case", std::string(to_string(*scenario_case)));
  } else {
    kv("sweep", effective_sweep().to_string());
  }
  kv("out", output_path);
  kv("t_mr", fmt::format("{}", topology.t_mr));
  kv("t_ra", fmt::format("{}", topology.t_ra));
  kv("t_am", fmt::format("{}", topology.t_am));
  kv("t_pn", fmt::format("{}", topology.t_pn));
  kv("n_mn_mag", fmt::format("{}", topology.n_mn_mag));
  kv("n_mag_lma", fmt::format("{}", topology.n_mag_lma));
  kv("n_mag_mag", fmt::format("{}", topology.n_mag_mag));
  kv("n_lma_lma", fmt::format("{}", topology.n_lma_lma));
  kv("lambda", fmt::format("{}", params.lambda));
  kv("mu", fmt::format("{}", params.mu));
  kv("v_f", fmt::format("{}", params.v_f));
  kv("k_ratio", fmt::format("{}", params.k_ratio));
  kv("lambda_s", fmt::format("{}", params.lambda_s));
  kv("mu_l", fmt::format("{}", params.mu_l));
  kv("p_f", fmt::format("{}", params.p_f));
  kv("n_l", fmt::format("{}", params.n_l));
  kv("jitter", fmt::format("{}", jitter));
  kv("arrivals_per_run", fmt::format("{}", arrivals_per_run));
  kv("replications", fmt::format("{}", replications));
  kv("seed", fmt::format("{}", seed));
  kv("formula_mode", std::string(to_string(formula_mode)));
  kv("hnbp_mode", std::string(to_string(hnbp_mode)));
  kv("fmi_cleanup", fmi_cleanup ? "true" : "false");
  out += fmt::format("# rng = {}\n", kRngName);
  for (auto m : kAllMessageTypes) {
    out += fmt::format("# message_size.{} = {}\n", to_string(m), message_size(m));
  }
  return out;
}

inline ExperimentConfig ExperimentConfig::from_text(std::string_view text, ExperimentConfig base) {
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    if (detail::trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::InvalidConfig, fmt::format("line {}: expected key = value", lineno));
    }
    base.set(std::string_view(line).substr(0, eq), std::string_view(line).substr(eq + 1));
  }
  return base;
}

inline ExperimentConfig ExperimentConfig::from_file(const std::string& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read config " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return from_text(buf.str(), std::move(base));
}

// ---------------------------------------------------------------------------
// Running

/// Evaluates one analytical metric for a technique under `cfg`.
inline double analytical_metric(Experiment e, Technique t, const ExperimentConfig& cfg) {
  const auto& topo = cfg.topology;
  const auto& p = cfg.params;
  switch (e) {
    case Experiment::AvgHopDelayVsWirelessDelay:
      return avg_hop_delay(t, topo, cfg.formula_mode);
    case Experiment::LatencyVsDensity:
    case Experiment::LatencyVsArrival:
      return technique_handover_delay(t, topo, p, cfg.formula_mode);
    case Experiment::CostVsLinkChanges:
      return cost_for_link_changes(t, topo, p.n_l, p.p_f);
    case Experiment::CostVsSMR:
    case Experiment::CostVsLinkFailure:
      return signaling_cost(t, topo, p);
    case Experiment::LossVsArrival:
    case Experiment::LossVsDensity:
      return packet_loss(p.lambda, technique_handover_delay(t, topo, p, cfg.formula_mode) / 1000.0);
    default:
      break;
  }
  throw Error(ErrorCode::InvalidConfig, std::string(to_string(e)) + " is not analytical");
}

inline SimConfig sim_config_for(const ExperimentConfig& cfg, Technique t) {
  SimConfig s;
  s.arrival_rate = cfg.params.lambda;
  s.service_rate = cfg.params.mu;
  s.delay_means = cfg.topology;
  s.jitter = cfg.jitter;
  s.arrivals_per_run = cfg.arrivals_per_run;
  s.replications = cfg.replications;
  s.seed = cfg.seed;
  s.technique = t;
  s.k_ratio = cfg.params.k_ratio;
  s.formula_mode = cfg.formula_mode;
  return s;
}

/// Produces the CSV body for `cfg` (no file I/O).
inline std::string render_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.experiment == Experiment::ScenarioTrace) {
    auto spec = ScenarioSpec::canonical(*cfg.scenario_case);
    spec.hnbp_mode = cfg.hnbp_mode;
    spec.fmi_cleanup = cfg.fmi_cleanup;
    return run_scenario(spec, cfg.topology).trace.to_csv();
  }
  const auto sweep = cfg.effective_sweep();
  const auto info = experiment_info(cfg.experiment);
  std::string out;
  if (is_simulation(cfg.experiment)) {
    out = "technique,param_name,param_value,latency_ms,hop_delay_ms,density,loss,ci95\n";
  } else {
    out = fmt::format("technique,param_name,param_value,{}\n", info.metric);
  }
  // Techniques sharing a signaling path simulate identically; run each path once.
  using PathKey = std::vector<std::tuple<int, int, bool>>;
  std::map<std::pair<PathKey, std::size_t>, SimResult> sim_cache;
  const auto values = sweep.values();
  for (auto t : cfg.techniques()) {
    PathKey path;
    for (const auto& term : handover_terms(t, cfg.formula_mode)) {
      path.emplace_back(term.multiplicity, static_cast<int>(term.link), term.counts_delay);
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double v = values[i];
      ExperimentConfig point = cfg;
      point.set_numeric(sweep.param, v);
      const auto prefix = fmt::format("{},{},{:.12g}", to_string(t), sweep.param, v);
      if (is_simulation(cfg.experiment)) {
        auto [it, fresh] = sim_cache.try_emplace({path, i});
        if (fresh) it->second = run_campaign(sim_config_for(point, t));
        const auto& r = it->second;
        out += fmt::format("{},{},{},{},{},{}\n", prefix, r.mean_handover_latency,
                           r.mean_hop_delay, r.packet_density, r.packets_lost,
                           r.ci95 ? fmt::format("{}", r.ci95->latency_ms) : std::string());
      } else {
        out += fmt::format("{},{}\n", prefix, analytical_metric(cfg.experiment, t, point));
      }
    }
  }
  return out;
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::IoFailure, "cannot write " + path);
  f << text;
  f.flush();
  if (!f) throw Error(ErrorCode::IoFailure, "write failed for " + path);
}

/// Renders the experiment and writes `<out>` plus the `<out>.meta` sidecar.
/// With an empty output path the CSV is returned only.
inline std::string run_experiment(const ExperimentConfig& cfg) {
  auto csv = render_experiment(cfg);
  if (!cfg.output_path.empty()) {
    write_text_file(cfg.output_path, csv);
    write_text_file(cfg.output_path + ".meta", cfg.to_metadata());
  }
  return csv;
}

}  // namespace flowmob
