#include "cffl/stopping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cffl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// beta-mix of cumulative cost and objective value. The extremes are treated
// exactly so that beta = 0 with an infinite cost (hard deadline) stays finite
// instead of producing 0 * inf.
double mix_g(double beta, double cum_cost, double f_val) {
  const double cost_term = beta == 0.0 ? 0.0 : beta * cum_cost;
  const double f_term = beta == 1.0 ? 0.0 : (1.0 - beta) * f_val;
  return cost_term + f_term;
}

// First index i >= 1 with delta_i < eps, or horizon if none. runmin is the
// nonincreasing prefix minimum of delta (1-based, runmin[0] unused).
int first_stop_index(const std::vector<double>& runmin, double eps) {
  const int n = static_cast<int>(runmin.size()) - 1;
  if (n < 1 || runmin[n] >= eps) return n;  // never triggers; horizon
  int lo = 1, hi = n;
  while (lo < hi) {
    const int mid = (lo + hi) / 2;
    if (runmin[mid] < eps) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return lo;
}

struct SequenceSolve {
  double eps = 0;
  double g = kInf;
  int stop = 0;
};

// Optimal constant threshold for a fully known f sequence: for each grid eps
// the rule stops at the first delta below it; ties resolve to the smallest
// eps.
SequenceSolve solve_eps_on_sequence(const std::vector<double>& f_seq,
                                    double beta, const CostSchedule& cost,
                                    const std::vector<double>& grid) {
  const int n = static_cast<int>(f_seq.size()) - 1;
  std::vector<double> runmin(n + 1, kInf);
  std::vector<double> cum(n + 1, 0.0);
  double rm = kInf;
  for (int i = 1; i <= n; ++i) {
    rm = std::min(rm, std::fabs(f_seq[i] - f_seq[i - 1]));
    runmin[i] = rm;
    cum[i] = cum[i - 1] + cost.at(i);
  }

  SequenceSolve best;
  for (double eps : grid) {
    const int stop = first_stop_index(runmin, eps);
    const double g = mix_g(beta, cum[stop], f_seq[stop]);
    if (g < best.g) {
      best.g = g;
      best.eps = eps;
      best.stop = stop;
    }
  }
  return best;
}

// Bound-predicted tail: values for iterations anchor+1..horizon given the
// true value at the anchor.
double predicted_value(const BoundParams& bounds, double f_anchor, int anchor,
                       int k) {
  return 2.0 * bounds.L_smooth * f_anchor * bounds.R_dom * bounds.R_dom /
         (k - anchor + 4);
}

}  // namespace

double CostSchedule::at(int i) const {
  switch (kind) {
    case Kind::Constant:
      return value;
    case Kind::Linear:
      return value * i;
    case Kind::Exponential:
      return std::exp(value * i) - offset;
    case Kind::HardDeadline:
      return i < deadline ? delta : kInf;
  }
  return 0.0;
}

std::string CostSchedule::name() const {
  switch (kind) {
    case Kind::Constant:
      return "constant";
    case Kind::Linear:
      return "linear";
    case Kind::Exponential:
      return "exponential";
    case Kind::HardDeadline:
      return "hard_deadline";
  }
  return "?";
}

CostSchedule CostSchedule::constant(double c) {
  return {Kind::Constant, c, 1.0, 0.0, 0};
}
CostSchedule CostSchedule::linear(double slope) {
  return {Kind::Linear, slope, 1.0, 0.0, 0};
}
CostSchedule CostSchedule::exponential(double rate, double offset) {
  return {Kind::Exponential, rate, offset, 0.0, 0};
}
CostSchedule CostSchedule::hard_deadline(double delta, int deadline) {
  return {Kind::HardDeadline, 0.0, 1.0, delta, deadline};
}

void StoppingProblem::validate() const {
  if (!f || !grad) throw std::invalid_argument("StoppingProblem: f and grad required");
  if (alpha <= 0.0) throw std::invalid_argument("StoppingProblem: alpha must be > 0");
  if (beta_mix < 0.0 || beta_mix > 1.0) {
    throw std::invalid_argument("StoppingProblem: beta must be in [0,1]");
  }
  if (K_max < 1) throw std::invalid_argument("StoppingProblem: K_max must be >= 1");
}

StoppingProblem StoppingProblem::default_quadratic() {
  StoppingProblem prob;
  prob.f = [](const std::vector<double>& w) {
    return w[0] * w[0] + (w[1] - 1.0) * (w[1] - 1.0);
  };
  prob.grad = [](const std::vector<double>& w) {
    return std::vector<double>{2.0 * w[0], 2.0 * (w[1] - 1.0)};
  };
  prob.w0 = {4.0, -3.0};
  prob.alpha = 0.05;
  return prob;
}

GdPath simulate_gd(const StoppingProblem& prob, int iters) {
  prob.validate();
  GdPath path;
  path.w.push_back(prob.w0);
  path.f.push_back(prob.f(prob.w0));
  path.delta.push_back(0.0);
  std::vector<double> w = prob.w0;
  for (int i = 1; i <= iters; ++i) {
    const auto g = prob.grad(w);
    for (std::size_t d = 0; d < w.size(); ++d) w[d] -= prob.alpha * g[d];
    const double fv = prob.f(w);
    if (!std::isfinite(fv)) {
      throw std::runtime_error("simulate_gd: objective diverged to non-finite value");
    }
    path.delta.push_back(std::fabs(fv - path.f.back()));
    path.f.push_back(fv);
    path.w.push_back(w);
  }
  return path;
}

namespace {

// Shared threshold-rule driver; eps_of(i) is the threshold in force at
// executed iteration i (1-based).
template <typename EpsFn>
StoppingTrace run_threshold_impl(const StoppingProblem& prob, EpsFn eps_of) {
  prob.validate();
  StoppingTrace trace;
  trace.w.push_back(prob.w0);
  trace.f.push_back(prob.f(prob.w0));
  trace.delta.push_back(0.0);
  trace.cost.push_back(0.0);
  trace.g.push_back(mix_g(prob.beta_mix, 0.0, trace.f[0]));
  trace.terminated_by = StopReason::Horizon;

  std::vector<double> w = prob.w0;
  double cum_cost = 0.0;
  for (int i = 1; i <= prob.K_max; ++i) {
    const auto grad = prob.grad(w);
    for (std::size_t d = 0; d < w.size(); ++d) w[d] -= prob.alpha * grad[d];
    const double fv = prob.f(w);
    if (!std::isfinite(fv)) {
      throw std::runtime_error("run_with_threshold: non-finite objective value");
    }
    const double ci = prob.cost.at(i);
    cum_cost += ci;
    trace.delta.push_back(std::fabs(fv - trace.f.back()));
    trace.f.push_back(fv);
    trace.w.push_back(w);
    trace.cost.push_back(ci);
    trace.g.push_back(mix_g(prob.beta_mix, cum_cost, fv));
    trace.stop_index = i;
    trace.eps_final = eps_of(i);
    if (trace.delta.back() < trace.eps_final) {
      trace.terminated_by = StopReason::Threshold;
      break;
    }
  }
  trace.g_star = trace.g.back();
  trace.f_at_stop = trace.f.back();
  return trace;
}

}  // namespace

StoppingTrace run_with_threshold(const StoppingProblem& prob, double eps) {
  if (eps < 0.0) throw std::invalid_argument("run_with_threshold: eps must be >= 0");
  return run_threshold_impl(prob, [eps](int) { return eps; });
}

StoppingTrace run_with_threshold(const StoppingProblem& prob,
                                 const std::vector<double>& eps_seq) {
  if (static_cast<int>(eps_seq.size()) != prob.K_max) {
    throw std::invalid_argument("run_with_threshold: eps sequence length != K_max");
  }
  return run_threshold_impl(prob, [&eps_seq](int i) { return eps_seq[i - 1]; });
}

std::vector<double> make_eps_grid(double lo, double hi, int n) {
  if (n < 1 || lo < 0.0 || hi < lo) {
    throw std::invalid_argument("make_eps_grid: invalid grid spec");
  }
  std::vector<double> grid(n);
  if (n == 1) {
    grid[0] = lo;
    return grid;
  }
  const double step = (hi - lo) / (n - 1);
  for (int i = 0; i < n; ++i) grid[i] = lo + step * i;
  return grid;
}

std::vector<double> default_eps_grid() { return make_eps_grid(1e-5, 0.25, 25000); }

EpsSearchResult optimal_constant_epsilon(const StoppingProblem& prob,
                                         const std::vector<double>& eps_grid) {
  if (eps_grid.empty()) {
    throw std::invalid_argument("optimal_constant_epsilon: empty grid");
  }
  for (double e : eps_grid) {
    if (e < 0.0) throw std::invalid_argument("optimal_constant_epsilon: negative eps");
  }
  std::vector<double> grid = eps_grid;
  std::sort(grid.begin(), grid.end());
  const GdPath path = simulate_gd(prob, prob.K_max);
  const auto best =
      solve_eps_on_sequence(path.f, prob.beta_mix, prob.cost, grid);
  return {best.eps, best.g, best.stop};
}

OracleStop noncausal_optimal_stop(const std::vector<double>& f, double beta,
                                  const CostSchedule& cost) {
  const int n = static_cast<int>(f.size()) - 1;
  OracleStop best{0, kInf};
  double cum = 0.0;
  for (int i = 1; i <= n; ++i) {
    cum += cost.at(i);
    const double g = mix_g(beta, cum, f[i]);
    if (g < best.g) {
      best.g = g;
      best.index = i;
    }
  }
  return best;
}

StoppingTrace causal_derivative_stop(const StoppingProblem& prob) {
  prob.validate();
  StoppingTrace trace;
  trace.w.push_back(prob.w0);
  trace.f.push_back(prob.f(prob.w0));
  trace.delta.push_back(0.0);
  trace.cost.push_back(0.0);
  trace.g.push_back(mix_g(prob.beta_mix, 0.0, trace.f[0]));
  trace.terminated_by = StopReason::Horizon;

  std::vector<double> w = prob.w0;
  double cum_cost = 0.0;
  for (int i = 1; i <= prob.K_max; ++i) {
    const auto grad = prob.grad(w);
    for (std::size_t d = 0; d < w.size(); ++d) w[d] -= prob.alpha * grad[d];
    const double fv = prob.f(w);
    if (!std::isfinite(fv)) {
      throw std::runtime_error("causal_derivative_stop: non-finite objective value");
    }
    const double ci = prob.cost.at(i);
    const double increment = mix_g(prob.beta_mix, ci, fv - trace.f.back());
    cum_cost += ci;
    trace.delta.push_back(std::fabs(fv - trace.f.back()));
    trace.f.push_back(fv);
    trace.w.push_back(w);
    trace.cost.push_back(ci);
    trace.g.push_back(mix_g(prob.beta_mix, cum_cost, fv));
    trace.stop_index = i;
    if (increment > 0.0) {
      trace.terminated_by = StopReason::CausalRule;
      break;
    }
  }
  trace.g_star = trace.g.back();
  trace.f_at_stop = trace.f.back();
  return trace;
}

double convex_upper_bound(const BoundParams& bounds, double f_w0, int i) {
  if (i < 0) throw std::invalid_argument("convex_upper_bound: i must be >= 0");
  return 2.0 * bounds.L_smooth * f_w0 * bounds.R_dom * bounds.R_dom / (i + 4);
}

double strongly_convex_bound(const BoundParams& bounds, double dist0_sq, int i) {
  if (bounds.mu <= 0.0) {
    throw std::invalid_argument("strongly_convex_bound: mu must be present");
  }
  if (i < 0) throw std::invalid_argument("strongly_convex_bound: i must be >= 0");
  const double kappa = bounds.L_smooth / bounds.mu;
  const double contraction = (kappa - 1.0) / (kappa + 1.0);
  return 0.5 * bounds.L_smooth * std::pow(contraction, 2.0 * i) * dist0_sq;
}

namespace {

// Predicted f sequence: true values up to `known`, bound tail anchored at
// `anchor` (anchor <= known). With min_with_latest, tail values are clamped
// by the latest true value.
std::vector<double> predicted_sequence(const BoundParams& bounds,
                                       const std::vector<double>& f_true,
                                       int known, int anchor, int horizon,
                                       bool min_with_latest) {
  std::vector<double> seq(f_true.begin(), f_true.begin() + known + 1);
  seq.reserve(horizon + 1);
  const double f_anchor = f_true[anchor];
  const double f_latest = f_true[known];
  for (int k = known + 1; k <= horizon; ++k) {
    double v = predicted_value(bounds, f_anchor, anchor, k);
    if (min_with_latest) v = std::min(v, f_latest);
    seq.push_back(v);
  }
  return seq;
}

}  // namespace

StoppingTrace fixed_causal_stop(const StoppingProblem& prob,
                                const BoundParams& bounds,
                                const std::vector<double>& eps_grid) {
  return sequential_causal_stop(prob, bounds, std::numeric_limits<int>::max(),
                                eps_grid);
}

StoppingTrace causal_upper_bound_stop(const StoppingProblem& prob,
                                      const BoundParams& bounds,
                                      const std::vector<double>& eps_grid) {
  prob.validate();
  if (eps_grid.empty()) {
    throw std::invalid_argument("causal_upper_bound_stop: empty grid");
  }
  std::vector<double> grid = eps_grid;
  std::sort(grid.begin(), grid.end());

  // The GD path is deterministic, so precompute it and replay causally: the
  // policy at iteration i only looks at f_0..f_i.
  const GdPath path = simulate_gd(prob, prob.K_max);

  StoppingTrace trace;
  trace.f.push_back(path.f[0]);
  trace.delta.push_back(0.0);
  trace.cost.push_back(0.0);
  trace.g.push_back(mix_g(prob.beta_mix, 0.0, path.f[0]));
  trace.w.push_back(path.w[0]);
  trace.terminated_by = StopReason::Horizon;

  double cum_cost = 0.0;
  for (int i = 1; i <= prob.K_max; ++i) {
    const double ci = prob.cost.at(i);
    cum_cost += ci;
    trace.f.push_back(path.f[i]);
    trace.delta.push_back(path.delta[i]);
    trace.cost.push_back(ci);
    trace.g.push_back(mix_g(prob.beta_mix, cum_cost, path.f[i]));
    trace.w.push_back(path.w[i]);
    trace.stop_index = i;

    if (path.f[i] > convex_upper_bound(bounds, path.f[0], i)) {
      trace.bound_violated = true;  // min-prediction already clamps the tail
    }
    const auto seq =
        predicted_sequence(bounds, path.f, i, 0, prob.K_max, true);
    const auto solve = solve_eps_on_sequence(seq, prob.beta_mix, prob.cost, grid);
    trace.eps_final = solve.eps;
    // Stop once the plan solved on the predicted sequence places the optimal
    // stop at or before the current iteration.
    if (solve.stop <= i) {
      trace.terminated_by = StopReason::CausalRule;
      break;
    }
  }
  trace.g_star = trace.g.back();
  trace.f_at_stop = trace.f.back();
  return trace;
}

StoppingTrace sequential_causal_stop(const StoppingProblem& prob,
                                     const BoundParams& bounds,
                                     int refresh_every,
                                     const std::vector<double>& eps_grid) {
  prob.validate();
  if (refresh_every < 1) {
    throw std::invalid_argument("sequential_causal_stop: refresh_every must be >= 1");
  }
  if (eps_grid.empty()) {
    throw std::invalid_argument("sequential_causal_stop: empty grid");
  }
  std::vector<double> grid = eps_grid;
  std::sort(grid.begin(), grid.end());

  const GdPath path = simulate_gd(prob, prob.K_max);

  // Initial solve at anchor m = 0 on the purely predicted trace. The solve
  // yields a threshold and the stop index it implies on that trace; the
  // policy commits to stopping there until the next refresh re-solves.
  auto seq0 = predicted_sequence(bounds, path.f, 0, 0, prob.K_max, false);
  auto plan = solve_eps_on_sequence(seq0, prob.beta_mix, prob.cost, grid);

  StoppingTrace trace;
  trace.f.push_back(path.f[0]);
  trace.delta.push_back(0.0);
  trace.cost.push_back(0.0);
  trace.g.push_back(mix_g(prob.beta_mix, 0.0, path.f[0]));
  trace.w.push_back(path.w[0]);
  trace.terminated_by = StopReason::Horizon;

  double cum_cost = 0.0;
  for (int i = 1; i <= prob.K_max; ++i) {
    const double ci = prob.cost.at(i);
    cum_cost += ci;
    trace.f.push_back(path.f[i]);
    trace.delta.push_back(path.delta[i]);
    trace.cost.push_back(ci);
    trace.g.push_back(mix_g(prob.beta_mix, cum_cost, path.f[i]));
    trace.w.push_back(path.w[i]);
    trace.stop_index = i;

    if (path.f[i] > convex_upper_bound(bounds, path.f[0], i)) {
      trace.bound_violated = true;
    }
    if (refresh_every != std::numeric_limits<int>::max() &&
        i % refresh_every == 0 && i < plan.stop) {
      const auto seq =
          predicted_sequence(bounds, path.f, i, i, prob.K_max, false);
      plan = solve_eps_on_sequence(seq, prob.beta_mix, prob.cost, grid);
    }
    trace.eps_final = plan.eps;
    if (plan.stop <= i) {
      trace.terminated_by = StopReason::CausalRule;
      break;
    }
  }
  trace.g_star = trace.g.back();
  trace.f_at_stop = trace.f.back();
  return trace;
}

}  // namespace cffl
