#pragma once

#include <vector>

#include "cffl/channel.hpp"

namespace cffl {

struct BudgetSpec {
  double L_total = 0;  // latency budget (s)
  double E_total = 0;  // energy budget (J)

  void validate() const;
};

struct EnergyLatency {
  std::vector<double> E;    // per-user uplink energy (J); +inf when flagged
  std::vector<double> ell;  // per-user uplink latency (s); +inf when flagged
  bool any_infinite = false;
};

struct BudgetReport {
  std::vector<double> E;
  std::vector<double> ell;
  double ell_bar = 0;  // max_j ell_j
  double E_bar = 0;    // sum_j E_j
  double T_max = 0;
  long T = 0;          // floor(T_max)
};

/// Per-user uplink energy and latency for one model upload:
/// ell_j = b*d / R_j, E_j = p_u * p_j * ell_j. Users with p_j = 0 are
/// flagged with infinite latency.
EnergyLatency energy_latency(const EstimationStats& stats,
                             const std::vector<double>& p);

/// Maximum affordable FL round count under the latency and energy budgets.
BudgetReport t_max(const EnergyLatency& el, const BudgetSpec& budget);

}  // namespace cffl
