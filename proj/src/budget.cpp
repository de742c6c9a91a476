#include "cffl/budget.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cffl {

void BudgetSpec::validate() const {
  if (L_total <= 0.0 || E_total <= 0.0) {
    throw std::invalid_argument("BudgetSpec: budgets must be positive");
  }
}

EnergyLatency energy_latency(const EstimationStats& stats,
                             const std::vector<double>& p) {
  const int K = stats.params.K;
  const double bits = static_cast<double>(stats.params.b_bits) *
                      static_cast<double>(stats.params.d_dim);
  EnergyLatency el;
  el.E.resize(K);
  el.ell.resize(K);
  for (int j = 0; j < K; ++j) {
    const double rate = uplink_rate(stats, p, j);
    if (rate <= 0.0) {
      el.ell[j] = std::numeric_limits<double>::infinity();
      el.E[j] = std::numeric_limits<double>::infinity();
      el.any_infinite = true;
      continue;
    }
    el.ell[j] = bits / rate;
    el.E[j] = stats.params.p_u * p[j] * el.ell[j];
  }
  return el;
}

BudgetReport t_max(const EnergyLatency& el, const BudgetSpec& budget) {
  budget.validate();
  if (el.any_infinite) {
    throw std::invalid_argument("t_max: infinite latency in input");
  }
  BudgetReport report;
  report.E = el.E;
  report.ell = el.ell;
  report.ell_bar = *std::max_element(el.ell.begin(), el.ell.end());
  report.E_bar = 0.0;
  for (double e : el.E) report.E_bar += e;
  report.T_max = std::min(budget.L_total / report.ell_bar,
                          budget.E_total / report.E_bar);
  report.T = static_cast<long>(std::floor(report.T_max));
  return report;
}

}  // namespace cffl
