#pragma once

#include <functional>
#include <string>
#include <vector>

namespace cffl {

/// Per-iteration cost c_i, i >= 1. Independent of the objective, threshold
/// and iterate by assumption. The hard-deadline kind is +inf from its
/// deadline on, so any policy executing that iteration pays g = +inf.
struct CostSchedule {
  enum class Kind { Constant, Linear, Exponential, HardDeadline };
  Kind kind = Kind::Constant;
  double value = 0.0;   // constant c, linear slope, or exponential rate
  double offset = 1.0;  // exponential: c_i = exp(rate*i) - offset
  double delta = 0.0;   // hard deadline: cost before the deadline
  int deadline = 0;

  double at(int i) const;
  std::string name() const;

  static CostSchedule constant(double c);
  static CostSchedule linear(double slope);
  static CostSchedule exponential(double rate, double offset = 1.0);
  static CostSchedule hard_deadline(double delta, int deadline);
};

struct StoppingProblem {
  std::function<double(const std::vector<double>&)> f;
  std::function<std::vector<double>(const std::vector<double>&)> grad;
  std::vector<double> w0;
  double alpha = 0.05;
  double beta_mix = 0.5;  // trade-off between cumulative cost and f
  int K_max = 25000;
  CostSchedule cost = CostSchedule::constant(0.0002);

  void validate() const;

  /// f(w) = w1^2 + (w2-1)^2 from w0 = (4, -3); the default test objective.
  static StoppingProblem default_quadratic();
};

struct BoundParams {
  double L_smooth = 0;
  double mu = 0;      // 0 means "not strongly convex"
  double R_dom = 0;
  double f_star = 0;  // assumed 0
};

enum class StopReason { Threshold, Horizon, CausalRule };

struct StoppingTrace {
  // Index 0 is the start point (no cost, no delta); entry i covers executed
  // iteration i. All vectors have stop_index + 1 entries.
  std::vector<double> f;
  std::vector<double> delta;  // delta[i] = |f_i - f_{i-1}|, delta[0] = 0
  std::vector<double> cost;   // executed per-iteration cost, cost[0] = 0
  std::vector<double> g;      // beta * cumulative cost + (1-beta) * f_i
  std::vector<std::vector<double>> w;
  int stop_index = 0;
  double g_star = 0;
  double f_at_stop = 0;
  double eps_final = 0;  // threshold in force when the run stopped
  StopReason terminated_by = StopReason::Horizon;
  bool bound_violated = false;  // causal runs: observed f exceeded the bound
};

/// Plain GD path with no stopping rule; shared by the oracle-style policies.
struct GdPath {
  std::vector<double> f;      // f[0..iters]
  std::vector<double> delta;  // delta[i] for i >= 1
  std::vector<std::vector<double>> w;
};
GdPath simulate_gd(const StoppingProblem& prob, int iters);

/// GD until the first iteration with delta_i < eps_i (constant or
/// per-iteration thresholds), accruing cost only for executed iterations.
StoppingTrace run_with_threshold(const StoppingProblem& prob, double eps);
StoppingTrace run_with_threshold(const StoppingProblem& prob,
                                 const std::vector<double>& eps_seq);

std::vector<double> make_eps_grid(double lo, double hi, int n);
std::vector<double> default_eps_grid();

struct EpsSearchResult {
  double eps_star = 0;
  double g_star = 0;
  int stop_index = 0;
};

/// Exhaustive search over the threshold grid; ties resolve to the smallest
/// epsilon.
EpsSearchResult optimal_constant_epsilon(const StoppingProblem& prob,
                                         const std::vector<double>& eps_grid);

struct OracleStop {
  int index = 0;
  double g = 0;
};

/// Non-causal optimum over stop indices 1..horizon of a dense f path.
OracleStop noncausal_optimal_stop(const std::vector<double>& f, double beta,
                                  const CostSchedule& cost);

/// Stops at the first iteration whose g increment
/// beta*c_i + (1-beta)*(f_i - f_{i-1}) turns positive.
StoppingTrace causal_derivative_stop(const StoppingProblem& prob);

/// 2*L*f(w0)*R^2 / (i + 4): f-gap bound for convex L-smooth GD.
double convex_upper_bound(const BoundParams& bounds, double f_w0, int i);

/// (L/2)*((k-1)/(k+1))^(2i)*dist0_sq with condition number k = L/mu, the
/// f-gap bound at step size 2/(L+mu).
double strongly_convex_bound(const BoundParams& bounds, double dist0_sq, int i);

/// Solves for the optimal constant threshold once, on the purely predicted
/// trace anchored at f(w0), and commits to the stop index that threshold
/// implies on the predicted trace.
StoppingTrace fixed_causal_stop(const StoppingProblem& prob,
                                const BoundParams& bounds,
                                const std::vector<double>& eps_grid);

/// Adaptive causal rule: each executed iteration re-solves the threshold on
/// the sequence of true values so far followed by min(latest f, bound)
/// predictions, and stops once the re-solved plan places its optimal stop at
/// or before the current iteration.
StoppingTrace causal_upper_bound_stop(const StoppingProblem& prob,
                                      const BoundParams& bounds,
                                      const std::vector<double>& eps_grid);

/// Like the fixed rule, but the bound re-anchors at the latest true value
/// every refresh_every iterations and the plan is re-solved there.
StoppingTrace sequential_causal_stop(const StoppingProblem& prob,
                                     const BoundParams& bounds,
                                     int refresh_every,
                                     const std::vector<double>& eps_grid);

}  // namespace cffl
