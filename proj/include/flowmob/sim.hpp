#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "flowmob/analytical.hpp"
#include "flowmob/core.hpp"
#include "flowmob/error.hpp"
#include "flowmob/handover.hpp"

namespace flowmob {

/// Generator used by every replication; recorded in run metadata.
inline constexpr std::string_view kRngName = "mt19937_64/splitmix64-subseed";

/// SplitMix64 finalizer, used to derive independent replication seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed of replication `r`: a function of (seed, r) only, so replications can
/// run on any worker in any order.
constexpr std::uint64_t replication_seed(std::uint64_t seed, std::uint64_t r) {
  return splitmix64(seed ^ splitmix64(r + 0x632BE59BD9B4E019ULL));
}

struct SimConfig {
  double arrival_rate = 100.0;  // pkts/s
  double service_rate = 150.0;  // pkts/s
  Topology delay_means;
  double jitter = 0.5;          // link delays uniform on mean*(1 +/- jitter)
  int arrivals_per_run = 10000;
  int replications = 1000;
  std::uint64_t seed = 1;
  Technique technique = Technique::ActiveDiff;
  /// Packet density ratio K/K_Max. Cross traffic raises each node's offered
  /// load to lambda + k (mu - lambda), so mean sojourn becomes D_P / (1 - k).
  double k_ratio = 0.0;
  FormulaMode formula_mode = FormulaMode::Verbatim;
  /// Worker threads; 0 means FLOWMOB_THREADS or the hardware concurrency.
  int threads = 0;

  double node_arrival_rate() const {
    return arrival_rate + k_ratio * (service_rate - arrival_rate);
  }

  void validate() const {
    if (!(jitter >= 0) || !(jitter < 1)) throw Error(ErrorCode::InvalidConfig, "jitter must lie in [0,1)");
    if (!(arrival_rate >= 0) || !(service_rate > 0) || !(arrival_rate < service_rate)) {
      throw Error(ErrorCode::InvalidConfig, "need 0 <= arrival_rate < service_rate");
    }
    if (!(k_ratio >= 0) || !(k_ratio < 1)) throw Error(ErrorCode::InvalidConfig, "k_ratio must lie in [0,1)");
    if (replications < 1) throw Error(ErrorCode::InvalidConfig, "replications must be >= 1");
    delay_means.validate();
    const int hops = handover_components(technique, delay_means, formula_mode).n_ho;
    if (arrivals_per_run <= hops) {
      throw Error(ErrorCode::InvalidConfig, "arrivals_per_run must exceed the " +
                                                std::to_string(hops) + " nodes on the path");
    }
  }
};

/// One replication.
struct RunSample {
  double latency_ms = 0.0;       // link delays + per-node sojourns
  double link_delay_ms = 0.0;
  double service_ms = 0.0;
  double hop_delay_ms = 0.0;     // latency / hops
  double density = 0.0;          // data packets arriving per hop during the handover
  double lost = 0.0;             // data packets arriving during the handover
  double mean_occupancy = 0.0;   // time-averaged packets in a node
  int hops = 0;
};

/// Mean and variance accumulator; `merge` combines partial results.
class Moments {
 public:
  void add(double x) {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }

  void merge(const Moments& o) {
    if (o.n_ == 0) return;
    if (n_ == 0) {
      *this = o;
      return;
    }
    const double n = static_cast<double>(n_ + o.n_);
    const double d = o.mean_ - mean_;
    mean_ += d * static_cast<double>(o.n_) / n;
    m2_ += o.m2_ + d * d * static_cast<double>(n_) * static_cast<double>(o.n_) / n;
    n_ += o.n_;
  }

  std::uint64_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }

  /// Normal-approximation 95% half-width; empty below two samples.
  std::optional<double> ci95() const {
    if (n_ < 2) return std::nullopt;
    return 1.959963984540054 * std::sqrt(variance() / static_cast<double>(n_));
  }

 private:
  std::uint64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

struct Ci95 {
  double latency_ms = 0.0;
  double hop_delay_ms = 0.0;
  double density = 0.0;
  double lost = 0.0;

  friend bool operator==(const Ci95&, const Ci95&) = default;
};

struct SimResult {
  double mean_handover_latency = 0.0;  // ms
  double mean_hop_delay = 0.0;         // ms/hop
  double packet_density = 0.0;         // packets/hop
  double packets_lost = 0.0;
  double mean_occupancy = 0.0;
  std::optional<Ci95> ci95;            // absent for a single replication
  int replications = 0;

  friend bool operator==(const SimResult&, const SimResult&) = default;
};

namespace detail {

inline double jittered(std::mt19937_64& rng, double mean, double jitter) {
  if (jitter == 0.0) return mean;
  std::uniform_real_distribution<double> u(mean * (1.0 - jitter), mean * (1.0 + jitter));
  return u(rng);
}

inline double sample_link(std::mt19937_64& rng, LinkClass link, const Topology& t, double j) {
  switch (link) {
    case LinkClass::Wireless: return jittered(rng, t.t_mr, j) + jittered(rng, t.t_ra, j);
    case LinkClass::MagLma: return jittered(rng, t.t_am, j);
    case LinkClass::LmaLma: return jittered(rng, t.t_pn, j);
    case LinkClass::MagMag: return jittered(rng, t.link_delay(LinkClass::MagMag), j);
  }
  return 0.0;
}

inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("FLOWMOB_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace detail

/// Replication `r` of a campaign.
///
/// The signaling message crosses the technique's links (delays drawn per
/// delay variable) and visits one M/M/1 node per hop. Node sojourns are read
/// off a Poisson stream of `arrivals_per_run` packets started in the
/// stationary state and advanced by Lindley's recursion; the tagged packets
/// are spread evenly through the stream.
inline RunSample simulate_once(const SimConfig& cfg, std::uint64_t r) {
  std::mt19937_64 rng(replication_seed(cfg.seed, r));
  const auto terms = handover_terms(cfg.technique, cfg.formula_mode);
  RunSample s;
  for (const auto& term : terms) s.hops += term.multiplicity * cfg.delay_means.link_hops(term.link);

  for (const auto& term : terms) {
    if (!term.counts_delay) continue;
    for (int i = 0; i < term.multiplicity; ++i) {
      s.link_delay_ms += detail::sample_link(rng, term.link, cfg.delay_means, cfg.jitter);
    }
  }

  const double mu = cfg.service_rate;
  const double lam = cfg.node_arrival_rate();
  std::exponential_distribution<double> service(mu);
  double service_s = 0.0;
  if (lam == 0.0) {
    for (int h = 0; h < s.hops; ++h) service_s += service(rng);
  } else {
    std::exponential_distribution<double> gap(lam);
    const double rho = lam / mu;
    std::bernoulli_distribution busy(rho);
    std::exponential_distribution<double> stationary_wait(mu - lam);
    double wait = busy(rng) ? stationary_wait(rng) : 0.0;
    const int n = cfg.arrivals_per_run;
    int next_tag = 0;
    auto tag_index = [&](int h) {
      return static_cast<int>((static_cast<long long>(h + 1) * n) / (s.hops + 1));
    };
    double clock = 0.0;
    double total_sojourn = 0.0;
    double horizon = 0.0;
    for (int i = 0; i < n; ++i) {
      const double sv = service(rng);
      const double sojourn = wait + sv;
      total_sojourn += sojourn;
      horizon = std::max(horizon, clock + sojourn);
      if (next_tag < s.hops && i == tag_index(next_tag)) {
        service_s += sojourn;
        ++next_tag;
      }
      const double a = gap(rng);
      clock += a;
      wait = std::max(0.0, sojourn - a);
    }
    s.mean_occupancy = total_sojourn / horizon;
  }
  s.service_ms = 1000.0 * service_s;
  s.latency_ms = s.link_delay_ms + s.service_ms;
  s.hop_delay_ms = s.latency_ms / s.hops;

  if (cfg.arrival_rate > 0.0) {
    std::poisson_distribution<long long> arrivals(cfg.arrival_rate * s.latency_ms / 1000.0);
    s.lost = static_cast<double>(arrivals(rng));
  }
  s.density = s.lost / s.hops;
  return s;
}

/// Runs every replication and aggregates them in replication order, so the
/// result does not depend on how many workers were used.
inline SimResult run_campaign(const SimConfig& cfg) {
  cfg.validate();
  const int reps = cfg.replications;
  std::vector<RunSample> samples(static_cast<std::size_t>(reps));
  const int workers = std::min(detail::resolve_threads(cfg.threads), reps);
  if (workers <= 1) {
    for (int r = 0; r < reps; ++r) samples[r] = simulate_once(cfg, r);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (int r = w; r < reps; r += workers) samples[r] = simulate_once(cfg, r);
      });
    }
  }

  Moments latency, hop, density, lost, occupancy;
  for (const auto& s : samples) {
    latency.add(s.latency_ms);
    hop.add(s.hop_delay_ms);
    density.add(s.density);
    lost.add(s.lost);
    occupancy.add(s.mean_occupancy);
  }
  SimResult out;
  out.mean_handover_latency = latency.mean();
  out.mean_hop_delay = hop.mean();
  out.packet_density = density.mean();
  out.packets_lost = lost.mean();
  out.mean_occupancy = occupancy.mean();
  out.replications = reps;
  if (reps > 1) {
    out.ci95 = Ci95{*latency.ci95(), *hop.ci95(), *density.ci95(), *lost.ci95()};
  }
  return out;
}

}  // namespace flowmob
