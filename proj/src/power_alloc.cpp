#include "cffl/power_alloc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace cffl {

namespace {

constexpr double kLn2 = 0.6931471805599453;

// d D_k / d p_j, where D_k is the rate denominator of user k. For k != j this
// is the B-tilde coefficient (pilot contamination included).
double denom_coeff(const EstimationStats& st, int k, int j) {
  double c = st.S(k, j);
  if (k != j) {
    const double w = st.W(k, j);
    c += st.pilots.cross_corr2(k, j) * w * w;
  }
  return c;
}

std::vector<double> compute_denoms(const EstimationStats& st,
                                   const std::vector<double>& p) {
  const int K = st.params.K;
  std::vector<double> D(st.i_mob);
  for (int k = 0; k < K; ++k) {
    for (int j = 0; j < K; ++j) D[k] += p[j] * denom_coeff(st, k, j);
  }
  return D;
}

double log_rate(const EstimationStats& st, const std::vector<double>& p,
                const std::vector<double>& D, int k) {
  if (p[k] == 0.0) return 0.0;
  return std::log2(1.0 + p[k] * st.a[k] * st.a[k] / D[k]);
}

// Normalized objective given precomputed denominators.
double nu_norm_from_denoms(const EstimationStats& st,
                           const std::vector<double>& p,
                           const std::vector<double>& D,
                           const TradeoffWeights& w) {
  double nu = 0.0;
  for (int k = 0; k < st.params.K; ++k) {
    const double num = w.theta1 * st.params.p_u * p[k] + w.theta2;
    if (num == 0.0) continue;
    const double lg = log_rate(st, p, D, k);
    if (lg <= 0.0) throw std::domain_error("nu_objective: degenerate power (p_j = 0)");
    nu += num / lg;
  }
  return nu;
}

// Partial derivative of the normalized objective w.r.t. p_j, from
// precomputed denominators. Requires p[j] > 0.
double gradient_from_denoms(const EstimationStats& st,
                            const std::vector<double>& p,
                            const std::vector<double>& D,
                            const TradeoffWeights& w, int j) {
  if (p[j] <= 0.0) throw std::domain_error("nu_gradient: degenerate power (p_j = 0)");
  const double pu = st.params.p_u;

  const double A = st.a[j] * st.a[j];
  const double B = st.S(j, j);
  const double C = D[j] - p[j] * B;
  const double lg_j = std::log2(1.0 + p[j] * A / D[j]);
  const double L_own = A * C / ((D[j] + A * p[j]) * D[j] * kLn2);
  const double F_j = w.theta1 * pu * p[j] + w.theta2;
  double grad = (w.theta1 * pu * lg_j - F_j * L_own) / (lg_j * lg_j);

  for (int k = 0; k < st.params.K; ++k) {
    if (k == j || p[k] == 0.0) continue;
    const double F_k = w.theta1 * pu * p[k] + w.theta2;
    if (F_k == 0.0) continue;
    const double A_k = st.a[k] * st.a[k];
    const double Bt = denom_coeff(st, k, j);
    const double L_cross =
        -Bt * A_k * p[k] / (D[k] * (D[k] + A_k * p[k]) * kLn2);
    const double lg_k = log_rate(st, p, D, k);
    if (lg_k <= 0.0) throw std::domain_error("nu_gradient: degenerate power (p_k = 0)");
    grad -= F_k * L_cross / (lg_k * lg_k);
  }
  return grad;
}

// Gradient of sum_k log2(1 + SINR_k) w.r.t. p_j.
double sum_lograte_gradient(const EstimationStats& st,
                            const std::vector<double>& p,
                            const std::vector<double>& D, int j) {
  const double A = st.a[j] * st.a[j];
  const double B = st.S(j, j);
  const double C = D[j] - p[j] * B;
  double grad = A * C / ((D[j] + A * p[j]) * D[j] * kLn2);
  for (int k = 0; k < st.params.K; ++k) {
    if (k == j || p[k] == 0.0) continue;
    const double A_k = st.a[k] * st.a[k];
    const double Bt = denom_coeff(st, k, j);
    grad += -Bt * A_k * p[k] / (D[k] * (D[k] + A_k * p[k]) * kLn2);
  }
  return grad;
}

std::vector<double> clamp01(std::vector<double> p) {
  for (auto& x : p) x = std::clamp(x, 0.0, 1.0);
  return p;
}

}  // namespace

void TradeoffWeights::validate() const {
  if (theta1 < 0.0 || theta1 > 1.0 || theta2 < 0.0 || theta2 > 1.0 ||
      theta1 + theta2 <= 0.0) {
    throw std::invalid_argument(
        "TradeoffWeights: theta1, theta2 in [0,1] with theta1 + theta2 > 0");
  }
}

void SolverConfig::validate() const {
  if (eta <= 0 || eps_grad <= 0 || eps_outer <= 0 || max_sweeps < 1 ||
      max_inner < 1) {
    throw std::invalid_argument("SolverConfig: all fields must be positive");
  }
}

double nu_scale(const SystemParams& params) {
  return static_cast<double>(params.b_bits) * static_cast<double>(params.d_dim) /
         (params.prelog() * params.B);
}

double nu_objective_normalized(const EstimationStats& stats,
                               const std::vector<double>& p,
                               const TradeoffWeights& weights) {
  const auto D = compute_denoms(stats, p);
  return nu_norm_from_denoms(stats, p, D, weights);
}

double nu_objective(const EstimationStats& stats, const std::vector<double>& p,
                    const TradeoffWeights& weights) {
  return nu_scale(stats.params) * nu_objective_normalized(stats, p, weights);
}

DerivativeTerms derivative_terms(const EstimationStats& stats,
                                 const std::vector<double>& p, int j) {
  const auto D = compute_denoms(stats, p);
  const int K = stats.params.K;

  DerivativeTerms t;
  t.A_bar = stats.a[j] * stats.a[j];
  t.B_bar = stats.S(j, j);
  t.C_bar = D[j] - p[j] * t.B_bar;
  t.L_bar = t.A_bar * t.C_bar / ((D[j] + t.A_bar * p[j]) * D[j] * kLn2);
  t.B_tilde.assign(K, 0.0);
  t.C_tilde.assign(K, 0.0);
  t.L_tilde.assign(K, 0.0);
  for (int k = 0; k < K; ++k) {
    if (k == j) continue;
    const double A_k = stats.a[k] * stats.a[k];
    t.B_tilde[k] = denom_coeff(stats, k, j);
    t.C_tilde[k] = D[k] - p[j] * t.B_tilde[k];
    t.L_tilde[k] =
        -t.B_tilde[k] * A_k * p[k] / (D[k] * (D[k] + A_k * p[k]) * kLn2);
  }
  return t;
}

double nu_gradient_normalized(const EstimationStats& stats,
                              const std::vector<double>& p,
                              const TradeoffWeights& weights, int j) {
  const auto D = compute_denoms(stats, p);
  return gradient_from_denoms(stats, p, D, weights, j);
}

double nu_gradient(const EstimationStats& stats, const std::vector<double>& p,
                   const TradeoffWeights& weights, int j) {
  return nu_scale(stats.params) * nu_gradient_normalized(stats, p, weights, j);
}

CoordinateDescentResult coordinate_descent(const EstimationStats& stats,
                                           const TradeoffWeights& weights,
                                           const SolverConfig& cfg,
                                           const std::vector<double>& p_init) {
  weights.validate();
  cfg.validate();
  const int K = stats.params.K;
  if (p_init.size() != static_cast<std::size_t>(K)) {
    throw std::invalid_argument("coordinate_descent: p_init has wrong length");
  }

  std::vector<double> p(p_init);
  for (auto& x : p) x = std::clamp(x, kPowerFloor, 1.0);
  auto D = compute_denoms(stats, p);

  // Moves coordinate j to value and keeps the denominators consistent.
  auto set_pj = [&](int j, double value) {
    const double delta = value - p[j];
    if (delta == 0.0) return;
    for (int k = 0; k < K; ++k) D[k] += delta * denom_coeff(stats, k, j);
    p[j] = value;
  };

  CoordinateDescentResult res;
  for (int sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
    const std::vector<double> p_before = p;
    D = compute_denoms(stats, p);  // drop incremental round-off each sweep
    for (int j = 0; j < K; ++j) {
      // The 1-D slice in p_j is quasiconvex, so its minimizer is where the
      // partial derivative changes sign (or the nearer box bound when the
      // sign is constant). Bisect the sign change to locate it; this makes
      // every coordinate exactly stationary or pinned at a bound.
      D = compute_denoms(stats, p);  // fresh cache: bisection is drift-sensitive
      const double start = p[j];
      const double before = nu_norm_from_denoms(stats, p, D, weights);
      auto grad_at = [&](double v) {
        set_pj(j, v);
        return gradient_from_denoms(stats, p, D, weights, j);
      };
      double lo = kPowerFloor;
      double hi = 1.0;
      double target;
      if (grad_at(lo) >= 0.0) {
        target = lo;
      } else if (grad_at(hi) <= 0.0) {
        target = hi;
      } else {
        // Bisect down to adjacent doubles: the slice curvature explodes near
        // the power floor, so a fixed absolute width is not precise enough.
        for (int it = 0; it < cfg.max_inner; ++it) {
          const double mid = 0.5 * (lo + hi);
          if (mid == lo || mid == hi) break;
          if (grad_at(mid) > 0.0) {
            hi = mid;
          } else {
            lo = mid;
          }
        }
        target = lo;
      }
      set_pj(j, target);
      // Numerical guard: the slice minimizer can only improve the objective;
      // fall back to the starting point if round-off says otherwise.
      if (nu_norm_from_denoms(stats, p, D, weights) > before) set_pj(j, start);
    }
    res.nu_per_sweep.push_back(nu_norm_from_denoms(stats, p, D, weights));
    res.sweeps = sweep + 1;
    double max_diff = 0.0;
    for (int j = 0; j < K; ++j) {
      max_diff = std::max(max_diff, std::fabs(p[j] - p_before[j]));
    }
    // Converge on the projected-gradient (KKT) residual, not on movement:
    // near the power floor the slice curvature is so large that a tiny move
    // can still leave a sizable gradient behind.
    D = compute_denoms(stats, p);
    double kkt = 0.0;
    for (int j = 0; j < K; ++j) {
      const double g = gradient_from_denoms(stats, p, D, weights, j);
      double r;
      if (p[j] >= 1.0 - 1e-12) {
        r = std::max(g, 0.0);
      } else if (p[j] <= kPowerFloor * (1.0 + 1e-12)) {
        r = std::max(-g, 0.0);
      } else {
        r = std::fabs(g);
      }
      kkt = std::max(kkt, r);
    }
    if (max_diff <= cfg.eps_outer && kkt <= cfg.eps_grad) {
      res.converged = true;
      break;
    }
  }
  res.alloc.p = std::move(p);
  return res;
}

namespace {

// Value and averaged subgradient of p -> min_k { Lg_k(p) - lambda*den_k(p) }.
// Ties within a relative epsilon contribute equally, which keeps symmetric
// instances symmetric under ascent.
struct MinAggregate {
  double value;
  std::vector<double> subgrad;
};

MinAggregate maxmin_surrogate(const EstimationStats& st,
                              const std::vector<double>& p, double lambda,
                              double zeta1, double zeta2) {
  const int K = st.params.K;
  const auto D = compute_denoms(st, p);
  std::vector<double> h(K);
  double min_h = std::numeric_limits<double>::infinity();
  for (int k = 0; k < K; ++k) {
    h[k] = log_rate(st, p, D, k) - lambda * (zeta1 * st.params.p_u * p[k] + zeta2);
    min_h = std::min(min_h, h[k]);
  }

  MinAggregate out;
  out.value = min_h;
  out.subgrad.assign(K, 0.0);
  const double tie_tol = 1e-9 * (1.0 + std::fabs(min_h));
  int ties = 0;
  for (int k = 0; k < K; ++k) {
    if (h[k] > min_h + tie_tol) continue;
    ++ties;
    const double A_k = st.a[k] * st.a[k];
    for (int j = 0; j < K; ++j) {
      double g;
      if (j == k) {
        const double C = D[k] - p[k] * st.S(k, k);
        g = A_k * C / ((D[k] + A_k * p[k]) * D[k] * kLn2) -
            lambda * zeta1 * st.params.p_u;
      } else {
        const double Bt = denom_coeff(st, k, j);
        g = -Bt * A_k * p[k] / (D[k] * (D[k] + A_k * p[k]) * kLn2);
      }
      out.subgrad[j] += g;
    }
  }
  for (auto& g : out.subgrad) g /= ties;
  return out;
}

}  // namespace

DinkelbachResult dinkelbach_maxmin_ee(const EstimationStats& stats,
                                      double zeta1, double zeta2, double tol) {
  if (zeta1 + zeta2 == 0.0) {
    throw std::invalid_argument("dinkelbach_maxmin_ee: zeta1 + zeta2 must be nonzero");
  }
  if (tol <= 0.0) throw std::invalid_argument("dinkelbach_maxmin_ee: tol must be > 0");

  const int K = stats.params.K;
  constexpr int kInnerSteps = 500;
  constexpr double kStep0 = 0.1;
  constexpr int kMaxOuter = 50;

  std::mt19937_64 rng(20240811);
  std::uniform_real_distribution<double> unif(0.05, 1.0);
  std::vector<std::vector<double>> starts;
  starts.push_back(std::vector<double>(K, 1.0));
  starts.push_back(std::vector<double>(K, 0.5));
  for (int r = 0; r < 2; ++r) {
    std::vector<double> s(K);
    for (auto& x : s) x = unif(rng);
    starts.push_back(std::move(s));
  }

  auto solve_inner = [&](double lambda, const std::vector<double>* warm) {
    std::vector<std::vector<double>> pool = starts;
    if (warm) pool.push_back(*warm);
    double best_value = -std::numeric_limits<double>::infinity();
    std::vector<double> best_p;
    for (const auto& start : pool) {
      std::vector<double> p = start;
      double local_best = maxmin_surrogate(stats, p, lambda, zeta1, zeta2).value;
      std::vector<double> local_best_p = p;
      for (int t = 1; t <= kInnerSteps; ++t) {
        const auto agg = maxmin_surrogate(stats, p, lambda, zeta1, zeta2);
        const double step = kStep0 / std::sqrt(static_cast<double>(t));
        for (int j = 0; j < K; ++j) p[j] += step * agg.subgrad[j];
        p = clamp01(std::move(p));
        const double value = maxmin_surrogate(stats, p, lambda, zeta1, zeta2).value;
        if (value > local_best) {
          local_best = value;
          local_best_p = p;
        }
      }
      if (local_best > best_value) {
        best_value = local_best;
        best_p = local_best_p;
      }
    }
    return best_p;
  };

  DinkelbachResult res;
  double lambda = 0.0;
  std::vector<double> p_star;
  for (int outer = 0; outer < kMaxOuter; ++outer) {
    p_star = solve_inner(lambda, p_star.empty() ? nullptr : &p_star);
    const auto D = compute_denoms(stats, p_star);
    double phi = std::numeric_limits<double>::infinity();
    double next_lambda = std::numeric_limits<double>::infinity();
    for (int k = 0; k < K; ++k) {
      const double lg = log_rate(stats, p_star, D, k);
      const double den = zeta1 * stats.params.p_u * p_star[k] + zeta2;
      phi = std::min(phi, lg - lambda * den);
      next_lambda = std::min(next_lambda, lg / den);
    }
    res.phi = phi;
    lambda = next_lambda;
    res.lambda_trace.push_back(lambda);
    if (phi <= tol) {
      res.converged = true;
      break;
    }
  }
  res.alloc.p = std::move(p_star);
  return res;
}

MaxSumRateResult max_sum_rate(const EstimationStats& stats, double tol) {
  if (tol <= 0.0) throw std::invalid_argument("max_sum_rate: tol must be > 0");
  const int K = stats.params.K;
  constexpr int kMaxIters = 800;

  auto objective = [&](const std::vector<double>& p) {
    const auto D = compute_denoms(stats, p);
    double sum = 0.0;
    for (int k = 0; k < K; ++k) sum += log_rate(stats, p, D, k);
    return sum;
  };

  std::mt19937_64 rng(20240812);
  std::uniform_real_distribution<double> unif(0.05, 1.0);
  std::vector<std::vector<double>> starts;
  starts.push_back(std::vector<double>(K, 1.0));
  starts.push_back(std::vector<double>(K, 0.5));
  for (int r = 0; r < 2; ++r) {
    std::vector<double> s(K);
    for (auto& x : s) x = unif(rng);
    starts.push_back(std::move(s));
  }

  MaxSumRateResult res;
  res.sum_log_rate = -std::numeric_limits<double>::infinity();
  for (const auto& start : starts) {
    std::vector<double> p = start;
    double value = objective(p);
    double step = 0.5;
    for (int it = 0; it < kMaxIters; ++it) {
      const auto D = compute_denoms(stats, p);
      std::vector<double> grad(K);
      double grad_norm = 0.0;
      for (int j = 0; j < K; ++j) {
        grad[j] = sum_lograte_gradient(stats, p, D, j);
        grad_norm = std::max(grad_norm, std::fabs(grad[j]));
      }
      if (grad_norm < tol) break;

      bool improved = false;
      while (step > 1e-12) {
        std::vector<double> cand(K);
        for (int j = 0; j < K; ++j) {
          cand[j] = std::clamp(p[j] + step * grad[j], 0.0, 1.0);
        }
        const double cand_value = objective(cand);
        if (cand_value > value) {
          p = std::move(cand);
          value = cand_value;
          step *= 1.5;
          improved = true;
          break;
        }
        step *= 0.5;
      }
      if (!improved) break;
    }
    // Lowest start index wins ties, so only a strict improvement replaces.
    if (value > res.sum_log_rate) {
      res.sum_log_rate = value;
      res.alloc.p = p;
    }
  }
  return res;
}

double antenna_cost(int M, int N, double c) {
  if (M < 1 || N < 1 || c < 0.0) {
    throw std::invalid_argument("antenna_cost: require M, N >= 1 and c >= 0");
  }
  return M * (1.0 + c * N);
}

}  // namespace cffl
