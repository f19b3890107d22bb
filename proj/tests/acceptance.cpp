// Acceptance checks: prints one PASS/FAIL line per criterion and exits
// non-zero if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "flowmob/flowmob.hpp"

using namespace flowmob;

namespace {

constexpr double kFormulaTol = 1e-9;
constexpr double kFormulaBudgetS = 1.0;
constexpr double kGoldenBudgetS = 1.0;
constexpr double kSimRelTol = 0.05;
constexpr double kSimBudgetS = 60.0;
constexpr int kSweepReplications = 250;
constexpr int kRandomTopologies = 100;
constexpr int kRandomOrMaskSets = 1000;

struct Outcome {
  bool ok = true;
  std::string detail;

  int misses = 0;

  void require(bool cond, const std::string& what) {
    if (cond) return;
    if (misses < 3) detail += (detail.empty() ? "" : "; ") + what;
    ++misses;
    ok = false;
  }
};

using Rows = std::vector<std::vector<std::string>>;

Rows parse_csv(const std::string& text) {
  Rows rows;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

// technique -> column values in sweep order
std::map<std::string, std::vector<double>> by_technique(const Rows& rows, std::size_t col) {
  std::map<std::string, std::vector<double>> out;
  for (const auto& r : rows) out[r[0]].push_back(std::stod(r[col]));
  return out;
}

bool strictly(const std::vector<double>& v, bool increasing) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (increasing ? !(v[i] > v[i - 1]) : !(v[i] < v[i - 1])) return false;
  }
  return true;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Outcome formula_regression() {
  Outcome o;
  const Topology g;
  const std::pair<Technique, double> expected[] = {
      {Technique::ActiveDiff, 10.0},
      {Technique::NotactiveCom, 104.0 / 12.0},
      {Technique::NotactiveDiff, 9.0},
      {Technique::NotactiveComBlock, 8.0},
      {Technique::NotactiveDiffBlock, 8.0},
  };
  for (const auto& [t, v] : expected) {
    const double got = avg_hop_delay(t, g);
    o.require(std::abs(got - v) <= kFormulaTol, fmt::format("{} = {} (want {})", to_string(t), got, v));
  }
  return o;
}

Outcome overhead_ordering() {
  Outcome o;
  const Topology g;
  const double block = overhead(Technique::NotactiveComBlock, g, 0);
  const double active = overhead(Technique::ActiveDiff, g, 0);
  const double com = overhead(Technique::NotactiveCom, g, 0);
  const double diff = overhead(Technique::NotactiveDiff, g, 0);
  o.require(block == 404 && active == 448 && com == 788 && diff == 1236,
            fmt::format("got {} {} {} {}", block, active, com, diff));
  o.require(block < active && active < com && com < diff, "ordering");
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> n(1, 8);
  std::uniform_real_distribution<double> p(0.0, 0.99);
  for (int i = 0; i < kRandomTopologies; ++i) {
    Topology r;
    r.n_mn_mag = n(rng);
    r.n_mag_lma = n(rng);
    r.n_lma_lma = n(rng);
    r.n_mag_mag = n(rng);
    const double pf = p(rng);
    o.require(overhead(Technique::NotactiveComBlock, r, pf) ==
                  overhead(Technique::NotactiveDiffBlock, r, pf),
              fmt::format("block variants differ at trial {}", i));
  }
  return o;
}

Outcome crossover() {
  Outcome o;
  for (double t_mr : {10.0, 18.0, 26.0}) {
    Topology g;
    g.t_mr = t_mr;
    const double block = avg_hop_delay(Technique::NotactiveComBlock, g);
    const double active = avg_hop_delay(Technique::ActiveDiff, g);
    const bool ok = t_mr < 18   ? block < active
                    : t_mr > 18 ? block > active
                                : std::abs(block - active) <= kFormulaTol;
    o.require(ok, fmt::format("t_mr={} block={} active_diff={}", t_mr, block, active));
  }
  return o;
}

Outcome monotonicity() {
  Outcome o;
  struct Case { const char* experiment; const char* sweep; bool increasing; };
  const Case cases[] = {
      {"cost_vs_smr", "smr:0.1:2:20", false},
      {"cost_vs_link_failure", "p_f:0:0.9:10", true},
      {"cost_vs_link_changes", "n_l:1:10:10", true},
  };
  for (const auto& c : cases) {
    ExperimentConfig cfg;
    cfg.set("experiment", c.experiment);
    cfg.set("sweep", c.sweep);
    const auto cols = by_technique(parse_csv(render_experiment(cfg)), 3);
    o.require(cols.size() == kAllTechniques.size(), fmt::format("{}: {} techniques", c.experiment, cols.size()));
    for (const auto& [t, v] : cols) {
      if (strictly(v, c.increasing)) continue;
      const bool flat = std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
      o.require(false, fmt::format("{} {} for {}", c.experiment, flat ? "constant" : "not monotone", t));
    }
  }
  // Curve separation: block below every other power-on technique at each SMR.
  {
    ExperimentConfig cfg;
    cfg.set("experiment", "cost_vs_smr");
    auto cols = by_technique(parse_csv(render_experiment(cfg)), 3);
    const std::pair<const char*, const char*> below[] = {
        {"notactive_com_block", "notactive_com"}, {"notactive_com", "notactive_diff"},
        {"notactive_1MAG_block", "notactive_1MAG"}, {"notactive_2MAG_block", "notactive_2MAG"}};
    for (const auto& [lo, hi] : below) {
      for (std::size_t i = 0; i < cols[lo].size(); ++i) {
        o.require(cols[lo][i] < cols[hi][i], fmt::format("{} not below {} at point {}", lo, hi, i));
      }
    }
  }
  // Link-change factor itself, over the SMR range.
  double prev = INFINITY;
  for (double s = 0.1; s <= 2.0 + 1e-12; s += 0.1) {
    const double f = expected_link_change_factor(s, dwell_laplace(s, 1.0));
    o.require(f < prev, fmt::format("link-change factor not decreasing at S={}", s));
    prev = f;
  }
  return o;
}

Outcome golden_traces() {
  Outcome o;
  for (auto c : kAllScenarioCases) {
    const auto got = run_scenario(ScenarioSpec::canonical(c), Topology{}).trace.to_csv();
    const auto want = read_file(std::string(FLOWMOB_GOLDEN_DIR) + "/" + std::string(to_string(c)) + ".csv");
    o.require(!want.empty() && got == want, fmt::format("{} differs from golden", to_string(c)));
  }
  return o;
}

Outcome sim_agreement(std::string& detail_out) {
  Outcome o;
  ExperimentConfig at_defaults;
  at_defaults.set("experiment", "sim_latency_vs_arrival");
  at_defaults.set("sweep", "lambda:100:100:1");
  at_defaults.set("seed", "20240601");
  const auto rows = parse_csv(render_experiment(at_defaults));
  double worst = 0.0;
  const double d_p_ms = 1000.0 * packet_service_delay(100, 150);
  for (const auto& r : rows) {
    const auto t = parse_technique(r[0]);
    const double analytic = avg_hop_delay(t, Topology{}) + d_p_ms;
    const double rel = std::abs(std::stod(r[4]) - analytic) / analytic;
    worst = std::max(worst, rel);
    o.require(rel <= kSimRelTol, fmt::format("{} hop delay {} vs {}", r[0], r[4], analytic));
  }
  o.require(rows.size() == kAllTechniques.size(), "missing techniques");

  for (const char* sweep : {"k_ratio:0.1:0.9:9", "lambda:20:140:7"}) {
    ExperimentConfig cfg;
    cfg.set("experiment", std::string(sweep).starts_with("k") ? "sim_latency_vs_density"
                                                               : "sim_latency_vs_arrival");
    cfg.set("sweep", sweep);
    cfg.set("seed", "20240601");
    cfg.replications = kSweepReplications;
    for (const auto& [t, v] : by_technique(parse_csv(render_experiment(cfg)), 3)) {
      o.require(strictly(v, true), fmt::format("latency not increasing over {} for {}", sweep, t));
    }
  }
  detail_out = fmt::format("worst hop-delay error {:.2f}%", 100 * worst);
  return o;
}

Outcome determinism() {
  Outcome o;
  ExperimentConfig cfg;
  cfg.set("experiment", "sim_latency_vs_density");
  cfg.set("sweep", "k_ratio:0.1:0.9:3");
  cfg.set("replications", "200");
  cfg.set("seed", "77");
  std::string first;
  for (const char* threads : {"1", "2", "4", "1"}) {
    setenv("FLOWMOB_THREADS", threads, 1);
    const auto csv = render_experiment(cfg);
    if (first.empty()) first = csv;
    o.require(csv == first, fmt::format("CSV changed with FLOWMOB_THREADS={}", threads));
  }
  unsetenv("FLOWMOB_THREADS");
  return o;
}

Outcome hnbp_properties() {
  Outcome o;
  const std::vector<Prefix> universe = {
      Prefix::parse("2001:db8:1::/48"), Prefix::parse("2001:db8:2::/48"),
      Prefix::parse("2001:db8:4::/48"), Prefix::parse("2001:db8:7::/48")};
  for (unsigned mask = 1; mask < (1u << universe.size()); ++mask) {
    std::vector<Prefix> subset;
    for (std::size_t i = 0; i < universe.size(); ++i) {
      if (mask & (1u << i)) subset.push_back(universe[i]);
    }
    const auto h = generate_hnbp(subset, HnbpMode::ExactSet);
    for (std::size_t i = 0; i < universe.size(); ++i) {
      const bool member = (mask & (1u << i)) != 0;
      o.require(verify_prefix(h, universe[i]) == member,
                fmt::format("exact set wrong for subset {} prefix {}", mask, i));
    }
  }
  std::mt19937_64 rng(8);
  for (int i = 0; i < kRandomOrMaskSets; ++i) {
    const int len = 1 + static_cast<int>(rng() % 128);
    std::vector<Prefix> ps;
    for (int k = 0; k < 1 + i % 8; ++k) ps.emplace_back(Bits128{rng(), rng()}, len);
    const auto h = generate_hnbp(ps, HnbpMode::OrMask);
    for (const auto& p : ps) o.require(verify_prefix(h, p), fmt::format("or-mask missed member in set {}", i));
  }
  const std::vector<Prefix> pair = {universe[0], universe[1]};
  const auto stray = Prefix::parse("2001:db8:3::/48");
  o.require(verify_prefix(generate_hnbp(pair, HnbpMode::OrMask), stray),
            "or-mask should admit the unassigned 2001:db8:3::/48");
  o.require(!verify_prefix(generate_hnbp(pair, HnbpMode::ExactSet), stray),
            "exact set must reject 2001:db8:3::/48");
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome(std::string&)> run;
  };
  auto plain = [](Outcome (*fn)()) { return [fn](std::string&) { return fn(); }; };
  const Criterion criteria[] = {
      {1, "avg hop delay at default topology", kFormulaBudgetS, plain(formula_regression)},
      {2, "overhead ordering and block-variant equality", 0, plain(overhead_ordering)},
      {3, "block vs active_diff crossover at t_mr = 18 ms", 0, plain(crossover)},
      {4, "signaling cost monotonicity and curve separation, all techniques", 0, plain(monotonicity)},
      {5, "scenario traces match goldens", kGoldenBudgetS, plain(golden_traces)},
      {6, "simulation agrees with analytics", kSimBudgetS, sim_agreement},
      {7, "simulation CSV identical across reruns and worker counts", 0, plain(determinism)},
      {8, "block prefix soundness/completeness", 0, plain(hnbp_properties)},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    std::string note;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run(note);
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0 && secs >= c.budget_s) o.require(false, fmt::format("took {:.2f}s", secs));
    if (!o.ok) note = o.detail;
    fmt::print("criterion {}: {}  {} ({:.2f}s){}\n", c.id, o.ok ? "PASS" : "FAIL", c.name, secs,
               note.empty() ? "" : "  " + note);
    failed += o.ok ? 0 : 1;
  }
  std::fflush(stdout);
  return failed == 0 ? 0 : 1;
}
