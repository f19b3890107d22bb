#pragma once

#include <cmath>

#include "flowmob/core.hpp"
#include "flowmob/error.hpp"
#include "flowmob/handover.hpp"

namespace flowmob {

/// Rates are per second; delays handed back by this module are in ms unless
/// a function says otherwise.
struct ModelParams {
  double lambda = 100.0;   // packet arrival rate
  double mu = 150.0;       // per-node service rate
  double v_f = 1.0;        // normalization of the arrival term in T_d
  double k_ratio = 0.0;    // packet density ratio K/K_Max
  double lambda_s = 1.0;   // session arrival rate
  double mu_l = 1.0;       // link dwell rate (mean dwell 1/mu_l)
  double p_f = 0.0;        // wireless link failure probability
  int n_l = 1;             // link changes

  double smr() const { return lambda_s / mu_l; }

  void validate() const {
    if (!(lambda >= 0) || !(mu > 0) || !(lambda < mu)) {
      throw Error(ErrorCode::UnstableQueue, "need 0 <= lambda < mu");
    }
    if (!(v_f > 0)) throw Error(ErrorCode::InvalidArgument, "v_f must be > 0");
    if (!(k_ratio >= 0) || !(k_ratio < 1)) {
      throw Error(ErrorCode::DegenerateDensity, "k_ratio must lie in [0,1)");
    }
    if (!(lambda_s > 0) || !(mu_l > 0)) {
      throw Error(ErrorCode::InvalidArgument, "lambda_s and mu_l must be > 0");
    }
    if (!(p_f >= 0) || !(p_f < 1)) throw Error(ErrorCode::InvalidArgument, "p_f must lie in [0,1)");
    if (n_l < 0) throw Error(ErrorCode::InvalidArgument, "n_l must be >= 0");
  }
};

inline double avg_hop_delay(Technique t, const Topology& topo,
                            FormulaMode mode = FormulaMode::Verbatim) {
  const auto c = handover_components(t, topo, mode);
  return c.d_ho / c.n_ho;
}

/// M/M/1 sojourn time at one node, in seconds.
inline double packet_service_delay(double lambda, double mu) {
  if (!(mu > 0) || !(lambda >= 0) || lambda >= mu) {
    throw Error(ErrorCode::UnstableQueue,
                "lambda=" + std::to_string(lambda) + " mu=" + std::to_string(mu));
  }
  const double rho = lambda / mu;
  return 1.0 / ((1.0 - rho) * mu);
}

/// T_d = (lambda / V_f) * H * (T_h + D_P) / (1 - K/K_Max), all delays in ms.
inline double handover_delay_ms(double lambda_over_vf, int hops, double t_h_ms, double d_p_ms,
                                double k_ratio) {
  if (!(k_ratio < 1)) throw Error(ErrorCode::DegenerateDensity, "k_ratio must be < 1");
  return lambda_over_vf * hops * (t_h_ms + d_p_ms) / (1.0 - k_ratio);
}

inline double total_handover_delay(const ModelParams& params, int hops, double t_h_ms) {
  if (!(params.k_ratio < 1)) throw Error(ErrorCode::DegenerateDensity, "k_ratio must be < 1");
  if (!(params.v_f > 0)) throw Error(ErrorCode::InvalidArgument, "v_f must be > 0");
  const double d_p_ms = 1000.0 * packet_service_delay(params.lambda, params.mu);
  return handover_delay_ms(params.lambda / params.v_f, hops, t_h_ms, d_p_ms, params.k_ratio);
}

/// Total handover delay of a technique: H = n_ho, T_h = its average hop delay.
inline double technique_handover_delay(Technique t, const Topology& topo,
                                       const ModelParams& params,
                                       FormulaMode mode = FormulaMode::Verbatim) {
  const auto c = handover_components(t, topo, mode);
  return total_handover_delay(params, c.n_ho, c.d_ho / c.n_ho);
}

/// Laplace transform of the exponential dwell-time density at s = lambda_s.
inline double dwell_laplace(double lambda_s, double mu_l) {
  if (!(lambda_s > 0) || !(mu_l >= 0)) {
    throw Error(ErrorCode::InvalidArgument, "dwell_laplace needs lambda_s > 0, mu_l >= 0");
  }
  return mu_l / (lambda_s + mu_l);
}

/// Expected link changes per session: (1/S) * sum_{i>=1} i (1-f) f^(i-1),
/// summed in closed form as (1/S) / (1-f).
inline double expected_link_change_factor(double s_sigma, double f_star) {
  if (!(s_sigma > 0)) throw Error(ErrorCode::InvalidArgument, "SMR must be > 0");
  if (!(f_star >= 0)) throw Error(ErrorCode::InvalidArgument, "f* must be >= 0");
  if (f_star >= 1) throw Error(ErrorCode::Divergent, "link-change series diverges for f* >= 1");
  return (1.0 / s_sigma) / (1.0 - f_star);
}

/// Probability of no link change during a session.
inline double alpha_zero(double s_sigma, double f_star) {
  return 1.0 - (1.0 - f_star) / s_sigma;
}

/// Per-handover signaling overhead in bytes.
inline double overhead(Technique t, const Topology& topo, double p_f) {
  if (!(p_f >= 0) || !(p_f < 1)) throw Error(ErrorCode::InvalidArgument, "p_f must lie in [0,1)");
  auto s = [](MessageType m) { return static_cast<double>(message_size(m)); };
  using M = MessageType;
  const double n_ml = topo.n_mag_lma;
  const double n_ll = topo.n_lma_lma;
  const double n_mm = topo.n_mn_mag;
  const double retrans = (p_f / (1.0 - p_f)) * 2.0 * s(M::RA);
  const double ra = 2.0 * (n_mm - 1.0) * s(M::RA);
  switch (t) {
    case Technique::ActiveDiff:
      return n_ml * (s(M::FMI) + s(M::FMA)) + n_ml * (s(M::FMI) + s(M::FMA));
    case Technique::NotactiveCom:
    case Technique::Notactive1MAG:  // 2 (N-1) RA, as for the other power-on variants
    case Technique::Notactive2MAG:
      return retrans + 2.0 * n_ml * (s(M::PBU) + s(M::PBA)) + ra;
    case Technique::NotactiveDiff:
      return retrans + 2.0 * n_ml * (s(M::PBU) + s(M::PBA)) + ra +
             2.0 * n_ml * (s(M::BRI) + s(M::BRA));
    case Technique::NotactiveComBlock:
    case Technique::NotactiveDiffBlock:
    case Technique::Notactive1MAGBlock:
    case Technique::Notactive2MAGBlock:
      return retrans + 2.0 * n_ml * s(M::US) + ra;
    case Technique::Active2MAG:
      return n_ml * (s(M::eFMI) + s(M::eFMA)) + n_ll * (s(M::eFMI) + s(M::eFMA)) +
             n_ll * (s(M::eFMI) + s(M::eFMA));
  }
  return 0.0;
}

/// C_X = E[link changes] * OH_X, with S = lambda_s / mu_l and f* from the
/// exponential dwell model.
inline double signaling_cost(Technique t, const Topology& topo, const ModelParams& params) {
  const double s_sigma = params.smr();
  const double f_star = dwell_laplace(params.lambda_s, params.mu_l);
  return expected_link_change_factor(s_sigma, f_star) * overhead(t, topo, params.p_f);
}

/// Cost for an explicit number of link changes (the expectation replaced by n_l).
inline double cost_for_link_changes(Technique t, const Topology& topo, int n_l, double p_f) {
  if (n_l < 0) throw Error(ErrorCode::InvalidArgument, "n_l must be >= 0");
  return n_l * overhead(t, topo, p_f);
}

/// Packets lost: arrival rate (pkts/s) times disruption time (s).
inline double packet_loss(double lambda, double t_d_seconds) {
  if (!(t_d_seconds >= 0)) throw Error(ErrorCode::InvalidArgument, "T_d must be >= 0");
  return lambda * t_d_seconds;
}

}  // namespace flowmob
