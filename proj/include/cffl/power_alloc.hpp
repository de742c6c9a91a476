#pragma once

#include <vector>

#include "cffl/channel.hpp"

namespace cffl {

struct TradeoffWeights {
  double theta1 = 1.0;  // energy weight
  double theta2 = 1.0;  // latency weight

  void validate() const;
};

struct PowerAllocation {
  std::vector<double> p;  // per-user power control coefficients in [0,1]
};

/// Per-coordinate pieces of the closed-form derivative of the weighted
/// energy-latency objective. All quantities are for the normalized objective
/// (log2-rate units); the bd/(prelog*B) factor is applied uniformly outside.
struct DerivativeTerms {
  double A_bar = 0;
  double B_bar = 0;
  double C_bar = 0;
  double L_bar = 0;
  std::vector<double> B_tilde;  // indexed by k' (entry j unused)
  std::vector<double> C_tilde;
  std::vector<double> L_tilde;
};

struct SolverConfig {
  double eta = 0.05;        // inner gradient step (normalized objective)
  double eps_grad = 1e-4;   // tolerance on the projected gradient residual
  double eps_outer = 1e-5;  // outer tolerance on max |u - p0|
  int max_sweeps = 200;
  int max_inner = 500;

  void validate() const;
};

inline constexpr double kPowerFloor = 1e-6;

/// Scale converting the normalized objective (per log2-rate) into seconds:
/// actual latency of user j is scale / Lg_j with Lg_j = log2(1 + SINR_j).
double nu_scale(const SystemParams& params);

/// Weighted energy-latency objective, sum_j theta1*E_j + theta2*ell_j, in
/// physical units. Throws std::domain_error when some p_j = 0 and theta2 > 0.
double nu_objective(const EstimationStats& stats, const std::vector<double>& p,
                    const TradeoffWeights& weights);

/// Normalized objective (physical value divided by nu_scale).
double nu_objective_normalized(const EstimationStats& stats,
                               const std::vector<double>& p,
                               const TradeoffWeights& weights);

DerivativeTerms derivative_terms(const EstimationStats& stats,
                                 const std::vector<double>& p, int j);

/// Closed-form partial derivative of the normalized objective w.r.t. p_j.
double nu_gradient_normalized(const EstimationStats& stats,
                              const std::vector<double>& p,
                              const TradeoffWeights& weights, int j);

/// Closed-form partial derivative of nu_objective w.r.t. p_j.
double nu_gradient(const EstimationStats& stats, const std::vector<double>& p,
                   const TradeoffWeights& weights, int j);

struct CoordinateDescentResult {
  PowerAllocation alloc;
  bool converged = false;
  int sweeps = 0;
  std::vector<double> nu_per_sweep;  // normalized objective after each sweep
};

/// Cyclic coordinate descent on the normalized objective; each coordinate
/// runs clamped gradient steps until its derivative is below eps_grad or a
/// bound is hit.
CoordinateDescentResult coordinate_descent(const EstimationStats& stats,
                                           const TradeoffWeights& weights,
                                           const SolverConfig& cfg,
                                           const std::vector<double>& p_init);

struct DinkelbachResult {
  PowerAllocation alloc;
  bool converged = false;
  double phi = 0;
  std::vector<double> lambda_trace;
};

/// Max-min energy efficiency via the generalized Dinkelbach iteration. The
/// inner max-min subproblem is solved by projected subgradient ascent on
/// [0,1]^K with a c/sqrt(t) step schedule and deterministic multi-start.
DinkelbachResult dinkelbach_maxmin_ee(const EstimationStats& stats,
                                      double zeta1, double zeta2, double tol);

struct MaxSumRateResult {
  PowerAllocation alloc;
  bool converged = true;
  double sum_log_rate = 0;  // sum_k log2(1 + SINR_k) at the returned point
};

/// Max-sum-rate baseline: projected gradient ascent on the sum of log2 rates
/// with multi-start (all-ones, all-half, two seeded random starts).
MaxSumRateResult max_sum_rate(const EstimationStats& stats, double tol);

/// Total implementation cost of M APs with N antennas each, M*(1 + c*N).
double antenna_cost(int M, int N, double c);

}  // namespace cffl
