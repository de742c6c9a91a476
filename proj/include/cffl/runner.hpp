#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cffl/budget.hpp"
#include "cffl/channel.hpp"
#include "cffl/power_alloc.hpp"
#include "cffl/stopping.hpp"

namespace cffl {

struct DinkelbachConfig {
  double zeta1 = 1.0;
  double zeta2 = 1.0;
  double tol = 1e-3;
};

struct FLRunConfig {
  bool enabled = true;
  std::string kind = "softmax";  // or "least_squares"
  int feature_dim = 15;
  int num_classes = 10;
  int samples_per_user = 500;
  int xi = 50;
  int L = 2;
  double alpha = 0.05;
  int T_cap = 400;  // FL rounds actually trained are min(T, T_cap)
};

struct StoppingSuiteConfig {
  std::vector<double> betas = {0.5};
  std::vector<CostSchedule> schedules = {
      CostSchedule::constant(0.0002), CostSchedule::linear(0.002),
      CostSchedule::exponential(0.01)};
  int K_max = 2000;
  double grid_lo = 1e-5;
  double grid_hi = 0.25;
  int grid_n = 2000;
  double L_smooth = 2.0;
  double R_dom = 5.656854249492381;  // sqrt(32), covers the default start point
  int refresh_every = 1;
};

struct ExperimentConfig {
  std::string scenario;
  std::vector<std::uint64_t> seeds = {1};
  std::string output_dir = "out";
  SystemParams system;
  TradeoffWeights weights;
  BudgetSpec budget{200.0, 200.0};
  SolverConfig solver;
  DinkelbachConfig dinkelbach;
  double max_sum_tol = 1e-6;
  FLRunConfig fl;
  std::vector<std::pair<double, double>> theta_grid = {
      {1, 0}, {0, 1}, {1, 1}, {1, 0.5}, {0.5, 1}};
  std::vector<std::pair<int, int>> antenna_pairs = {
      {16, 4}, {32, 2}, {64, 1}, {25, 4}, {50, 2}, {100, 1}};
  double antenna_c = 1.0;
  StoppingSuiteConfig stopping;
};

/// Parses a JSON experiment config. Throws std::invalid_argument with a
/// human-readable message on malformed input.
ExperimentConfig load_config(const std::string& path);

/// Runs one scenario, writing CSV outputs under cfg.output_dir. Returns the
/// process exit code: 0 on success, 2 if any solver failed to converge.
int run_scenario(const ExperimentConfig& cfg, const std::string& scenario,
                 bool quiet);

// Individual scenarios; exposed for tests.
int run_powalloc_compare(const ExperimentConfig& cfg, bool quiet);
int run_theta_sweep(const ExperimentConfig& cfg, bool quiet);
int run_antenna_sweep(const ExperimentConfig& cfg, bool quiet);
int run_stopping_suite(const ExperimentConfig& cfg, bool quiet);
int run_fl_end2end(const ExperimentConfig& cfg, bool quiet);

/// Fixed-precision, locale-free number formatting shared by all CSV output.
std::string csv_num(double v);

}  // namespace cffl
