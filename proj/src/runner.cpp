#include "cffl/runner.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <stdexcept>

#include "cffl/fedavg.hpp"
#include "json.hpp"

namespace cffl {

namespace {

using nlohmann::json;

std::string fmt_beta(double beta) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", beta);
  return buf;
}

/// Writes rows as an RFC-4180 CSV with LF line endings, byte-stable across
/// runs. Fields here never contain commas or quotes, so no escaping is done.
void write_csv(const std::filesystem::path& path,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open output file: " + path.string());
  }
  auto emit = [&out](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out << ',';
      out << fields[i];
    }
    out << '\n';
  };
  emit(header);
  for (const auto& row : rows) emit(row);
}

std::vector<double> clamp_floor(std::vector<double> p) {
  for (auto& x : p) x = std::max(x, kPowerFloor);
  return p;
}

/// FL training loss after T rounds (capped), on a per-seed synthetic task.
/// T <= 0 returns the loss of the zero model without training.
double fl_final_loss(const ExperimentConfig& cfg, std::uint64_t seed, long T,
                     std::vector<double>* trace = nullptr) {
  const FLRunConfig& fl = cfg.fl;
  SyntheticTask task =
      fl.kind == "least_squares"
          ? make_least_squares_task(cfg.system.K, fl.samples_per_user,
                                    fl.feature_dim, seed * 1000 + 7)
          : make_softmax_task(cfg.system.K, fl.samples_per_user, fl.feature_dim,
                              fl.num_classes, seed * 1000 + 7);
  const int T_trained =
      static_cast<int>(std::min<long>(std::max<long>(T, 0), fl.T_cap));
  if (T_trained == 0) {
    return task.global_loss(std::vector<double>(task.model_dim, 0.0));
  }
  FLConfig run;
  run.K = cfg.system.K;
  run.L = fl.L;
  run.alpha = fl.alpha;
  run.xi = fl.xi;
  run.T = T_trained;
  run.seed = seed;
  TrainResult result = train(task, run);
  if (trace) *trace = result.loss_trace;
  return result.loss_trace.back();
}

struct MethodOutcome {
  PowerAllocation alloc;
  bool converged = false;
};

BudgetReport budget_of(const EstimationStats& stats,
                       const std::vector<double>& p, const BudgetSpec& spec) {
  return t_max(energy_latency(stats, clamp_floor(p)), spec);
}

std::filesystem::path out_path(const ExperimentConfig& cfg,
                               const std::string& file) {
  std::filesystem::path dir(cfg.output_dir);
  std::filesystem::create_directories(dir);
  return dir / file;
}

CostSchedule schedule_from_json(const json& s) {
  const std::string kind = s.value("kind", "constant");
  if (kind == "constant") return CostSchedule::constant(s.value("value", 2e-4));
  if (kind == "linear") return CostSchedule::linear(s.value("slope", 2e-3));
  if (kind == "exponential") {
    return CostSchedule::exponential(s.value("rate", 0.01),
                                     s.value("offset", 1.0));
  }
  if (kind == "hard_deadline") {
    return CostSchedule::hard_deadline(s.value("delta", 2e-4),
                                       s.value("deadline", 100));
  }
  throw std::invalid_argument("unknown cost schedule kind: " + kind);
}

}  // namespace

std::string csv_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config parse error: ") + e.what());
  }

  ExperimentConfig cfg;
  cfg.scenario = j.value("scenario", cfg.scenario);
  if (j.contains("seeds")) {
    cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  }
  cfg.output_dir = j.value("output_dir", cfg.output_dir);

  if (j.contains("system")) {
    const json& s = j.at("system");
    SystemParams& p = cfg.system;
    p.M = s.value("M", p.M);
    p.N = s.value("N", p.N);
    p.K = s.value("K", p.K);
    p.B = s.value("B", p.B);
    p.tau_c = s.value("tau_c", p.tau_c);
    p.tau_p = s.value("tau_p", p.tau_p);
    p.p_u = s.value("p_u", p.p_u);
    p.noise_figure_db = s.value("noise_figure_db", p.noise_figure_db);
    p.area_side = s.value("area_side", p.area_side);
    p.alpha_p = s.value("alpha_p", p.alpha_p);
    p.b_bits = s.value("b_bits", p.b_bits);
    p.d_dim = s.value("d_dim", p.d_dim);
    p.rho_p = s.value("rho_p", p.rho_p);
  }
  if (j.contains("weights")) {
    cfg.weights.theta1 = j.at("weights").value("theta1", cfg.weights.theta1);
    cfg.weights.theta2 = j.at("weights").value("theta2", cfg.weights.theta2);
  }
  if (j.contains("budget")) {
    cfg.budget.L_total = j.at("budget").value("L_total", cfg.budget.L_total);
    cfg.budget.E_total = j.at("budget").value("E_total", cfg.budget.E_total);
  }
  if (j.contains("solver")) {
    const json& s = j.at("solver");
    cfg.solver.eta = s.value("eta", cfg.solver.eta);
    cfg.solver.eps_grad = s.value("eps_grad", cfg.solver.eps_grad);
    cfg.solver.eps_outer = s.value("eps_outer", cfg.solver.eps_outer);
    cfg.solver.max_sweeps = s.value("max_sweeps", cfg.solver.max_sweeps);
    cfg.solver.max_inner = s.value("max_inner", cfg.solver.max_inner);
  }
  if (j.contains("dinkelbach")) {
    const json& s = j.at("dinkelbach");
    cfg.dinkelbach.zeta1 = s.value("zeta1", cfg.dinkelbach.zeta1);
    cfg.dinkelbach.zeta2 = s.value("zeta2", cfg.dinkelbach.zeta2);
    cfg.dinkelbach.tol = s.value("tol", cfg.dinkelbach.tol);
  }
  cfg.max_sum_tol = j.value("max_sum_tol", cfg.max_sum_tol);
  if (j.contains("fl")) {
    const json& s = j.at("fl");
    cfg.fl.enabled = s.value("enabled", cfg.fl.enabled);
    cfg.fl.kind = s.value("kind", cfg.fl.kind);
    cfg.fl.feature_dim = s.value("feature_dim", cfg.fl.feature_dim);
    cfg.fl.num_classes = s.value("num_classes", cfg.fl.num_classes);
    cfg.fl.samples_per_user =
        s.value("samples_per_user", cfg.fl.samples_per_user);
    cfg.fl.xi = s.value("xi", cfg.fl.xi);
    cfg.fl.L = s.value("L", cfg.fl.L);
    cfg.fl.alpha = s.value("alpha", cfg.fl.alpha);
    cfg.fl.T_cap = s.value("T_cap", cfg.fl.T_cap);
  }
  if (j.contains("theta_grid")) {
    cfg.theta_grid.clear();
    for (const auto& pair : j.at("theta_grid")) {
      cfg.theta_grid.emplace_back(pair.at(0).get<double>(),
                                  pair.at(1).get<double>());
    }
  }
  if (j.contains("antenna_pairs")) {
    cfg.antenna_pairs.clear();
    for (const auto& pair : j.at("antenna_pairs")) {
      cfg.antenna_pairs.emplace_back(pair.at(0).get<int>(),
                                     pair.at(1).get<int>());
    }
  }
  cfg.antenna_c = j.value("antenna_c", cfg.antenna_c);
  if (j.contains("stopping")) {
    const json& s = j.at("stopping");
    StoppingSuiteConfig& st = cfg.stopping;
    if (s.contains("betas")) st.betas = s.at("betas").get<std::vector<double>>();
    if (s.contains("schedules")) {
      st.schedules.clear();
      for (const auto& sched : s.at("schedules")) {
        st.schedules.push_back(schedule_from_json(sched));
      }
    }
    st.K_max = s.value("K_max", st.K_max);
    st.grid_lo = s.value("grid_lo", st.grid_lo);
    st.grid_hi = s.value("grid_hi", st.grid_hi);
    st.grid_n = s.value("grid_n", st.grid_n);
    st.L_smooth = s.value("L_smooth", st.L_smooth);
    st.R_dom = s.value("R_dom", st.R_dom);
    st.refresh_every = s.value("refresh_every", st.refresh_every);
  }

  cfg.system.validate();
  cfg.weights.validate();
  cfg.budget.validate();
  cfg.solver.validate();
  for (double b : cfg.stopping.betas) {
    if (b < 0.0 || b > 1.0) {
      throw std::invalid_argument("stopping.betas entries must lie in [0,1]");
    }
  }
  return cfg;
}

int run_powalloc_compare(const ExperimentConfig& cfg, bool quiet) {
  std::vector<std::vector<std::string>> rows;
  bool all_converged = true;
  for (std::uint64_t seed : cfg.seeds) {
    NetworkRealization net = generate_network(cfg.system, seed);
    PilotAssignment pilots = assign_pilots(net, cfg.system.tau_p);
    EstimationStats stats = mmse_stats(net, pilots, cfg.system);

    const std::vector<double> ones(cfg.system.K, 1.0);
    CoordinateDescentResult ours =
        coordinate_descent(stats, cfg.weights, cfg.solver, ones);
    DinkelbachResult dink = dinkelbach_maxmin_ee(
        stats, cfg.dinkelbach.zeta1, cfg.dinkelbach.zeta2, cfg.dinkelbach.tol);
    MaxSumRateResult msr = max_sum_rate(stats, cfg.max_sum_tol);

    const std::vector<std::pair<std::string, MethodOutcome>> methods = {
        {"energy_latency", {ours.alloc, ours.converged}},
        {"maxmin_ee", {dink.alloc, dink.converged}},
        {"max_sum_rate", {msr.alloc, msr.converged}},
    };
    for (const auto& [name, outcome] : methods) {
      all_converged = all_converged && outcome.converged;
      BudgetReport report = budget_of(stats, outcome.alloc.p, cfg.budget);
      double loss = std::numeric_limits<double>::quiet_NaN();
      if (cfg.fl.enabled) loss = fl_final_loss(cfg, seed, report.T);
      rows.push_back({name, std::to_string(seed), std::to_string(report.T),
                      csv_num(report.T_max), csv_num(report.E_bar),
                      csv_num(report.ell_bar), csv_num(loss),
                      outcome.converged ? "ok" : "no_convergence"});
      if (!quiet) {
        std::cout << "seed " << seed << " " << name << ": T=" << report.T
                  << " E_bar=" << report.E_bar << " ell_bar=" << report.ell_bar
                  << "\n";
      }
    }
  }
  write_csv(out_path(cfg, "powalloc_compare.csv"),
            {"method", "seed", "T", "T_max", "E_bar", "ell_bar", "final_loss",
             "status"},
            rows);
  return all_converged ? 0 : 2;
}

int run_theta_sweep(const ExperimentConfig& cfg, bool quiet) {
  std::vector<std::vector<std::string>> rows;
  bool all_converged = true;
  for (std::uint64_t seed : cfg.seeds) {
    NetworkRealization net = generate_network(cfg.system, seed);
    PilotAssignment pilots = assign_pilots(net, cfg.system.tau_p);
    EstimationStats stats = mmse_stats(net, pilots, cfg.system);
    const std::vector<double> ones(cfg.system.K, 1.0);
    for (const auto& [t1, t2] : cfg.theta_grid) {
      TradeoffWeights w{t1, t2};
      w.validate();
      CoordinateDescentResult res =
          coordinate_descent(stats, w, cfg.solver, ones);
      all_converged = all_converged && res.converged;
      BudgetReport report = budget_of(stats, res.alloc.p, cfg.budget);
      double loss = std::numeric_limits<double>::quiet_NaN();
      if (cfg.fl.enabled) loss = fl_final_loss(cfg, seed, report.T);
      rows.push_back({csv_num(t1), csv_num(t2), std::to_string(seed),
                      std::to_string(report.T), csv_num(report.E_bar),
                      csv_num(report.ell_bar), csv_num(loss),
                      res.converged ? "ok" : "no_convergence"});
      if (!quiet) {
        std::cout << "seed " << seed << " theta=(" << t1 << "," << t2
                  << "): T=" << report.T << "\n";
      }
    }
  }
  write_csv(out_path(cfg, "theta_sweep.csv"),
            {"theta1", "theta2", "seed", "T", "E_bar", "ell_bar", "final_loss",
             "status"},
            rows);
  return all_converged ? 0 : 2;
}

int run_antenna_sweep(const ExperimentConfig& cfg, bool quiet) {
  std::vector<std::pair<int, int>> pairs;
  for (const auto& mn : cfg.antenna_pairs) {
    if (std::find(pairs.begin(), pairs.end(), mn) != pairs.end()) {
      if (!quiet) {
        std::cerr << "warning: duplicate antenna pair (" << mn.first << ","
                  << mn.second << ") skipped\n";
      }
      continue;
    }
    pairs.push_back(mn);
  }

  std::vector<std::vector<std::string>> rows;
  bool all_converged = true;
  for (const auto& [M, N] : pairs) {
    SystemParams sys = cfg.system;
    sys.M = M;
    sys.N = N;
    sys.validate();
    for (std::uint64_t seed : cfg.seeds) {
      NetworkRealization net = generate_network(sys, seed);
      PilotAssignment pilots = assign_pilots(net, sys.tau_p);
      EstimationStats stats = mmse_stats(net, pilots, sys);
      CoordinateDescentResult res = coordinate_descent(
          stats, cfg.weights, cfg.solver, std::vector<double>(sys.K, 1.0));
      all_converged = all_converged && res.converged;
      ExperimentConfig local = cfg;
      local.system = sys;
      BudgetReport report = budget_of(stats, res.alloc.p, cfg.budget);
      double loss = std::numeric_limits<double>::quiet_NaN();
      if (cfg.fl.enabled) loss = fl_final_loss(local, seed, report.T);
      rows.push_back({std::to_string(M), std::to_string(N),
                      std::to_string(M * N),
                      csv_num(antenna_cost(M, N, cfg.antenna_c)),
                      std::to_string(seed), std::to_string(report.T),
                      csv_num(report.ell_bar), csv_num(loss),
                      res.converged ? "ok" : "no_convergence"});
      if (!quiet) {
        std::cout << "M=" << M << " N=" << N << " seed " << seed
                  << ": T=" << report.T << "\n";
      }
    }
  }
  write_csv(out_path(cfg, "antenna_sweep.csv"),
            {"M", "N", "MN", "antenna_cost", "seed", "T", "ell_bar",
             "final_loss", "status"},
            rows);
  return all_converged ? 0 : 2;
}

int run_stopping_suite(const ExperimentConfig& cfg, bool quiet) {
  const StoppingSuiteConfig& st = cfg.stopping;
  const std::vector<double> grid =
      make_eps_grid(st.grid_lo, st.grid_hi, st.grid_n);
  BoundParams bounds;
  bounds.L_smooth = st.L_smooth;
  bounds.R_dom = st.R_dom;

  std::vector<std::vector<std::string>> summary;
  for (const CostSchedule& sched : st.schedules) {
    for (double beta : st.betas) {
      StoppingProblem prob = StoppingProblem::default_quadratic();
      prob.beta_mix = beta;
      prob.K_max = st.K_max;
      prob.cost = sched;

      std::vector<std::pair<std::string, StoppingTrace>> runs;
      {
        EpsSearchResult best = optimal_constant_epsilon(prob, grid);
        StoppingTrace tr = run_with_threshold(prob, best.eps_star);
        runs.emplace_back("noncausal_opt", std::move(tr));
      }
      runs.emplace_back("derivative", causal_derivative_stop(prob));
      runs.emplace_back("fixed_bound", fixed_causal_stop(prob, bounds, grid));
      runs.emplace_back("sequential", sequential_causal_stop(
                                          prob, bounds, st.refresh_every, grid));

      for (const auto& [policy, tr] : runs) {
        summary.push_back({sched.name(), fmt_beta(beta), policy,
                           std::to_string(tr.stop_index), csv_num(tr.g_star),
                           csv_num(tr.f_at_stop), csv_num(tr.eps_final)});
        std::vector<std::vector<std::string>> trace_rows;
        for (int i = 0; i <= tr.stop_index; ++i) {
          trace_rows.push_back({std::to_string(i), csv_num(tr.f[i]),
                                csv_num(tr.delta[i]), csv_num(tr.cost[i]),
                                csv_num(tr.g[i]),
                                i == tr.stop_index ? "1" : "0"});
        }
        write_csv(out_path(cfg, "trace_" + sched.name() + "_beta" +
                                    fmt_beta(beta) + "_" + policy + ".csv"),
                  {"i", "f_i", "delta_i", "c_i", "g_i", "stopped"}, trace_rows);
        if (!quiet) {
          std::cout << sched.name() << " beta=" << fmt_beta(beta) << " "
                    << policy << ": i*=" << tr.stop_index
                    << " g*=" << tr.g_star << "\n";
        }
      }
    }
  }
  write_csv(out_path(cfg, "stopping_summary.csv"),
            {"schedule", "beta", "policy", "i_star", "g_star", "f_at_stop",
             "eps_final"},
            summary);
  return 0;
}

int run_fl_end2end(const ExperimentConfig& cfg, bool quiet) {
  std::vector<std::vector<std::string>> summary;
  std::vector<std::vector<std::string>> rounds;
  bool all_converged = true;
  for (std::uint64_t seed : cfg.seeds) {
    NetworkRealization net = generate_network(cfg.system, seed);
    PilotAssignment pilots = assign_pilots(net, cfg.system.tau_p);
    EstimationStats stats = mmse_stats(net, pilots, cfg.system);
    CoordinateDescentResult res = coordinate_descent(
        stats, cfg.weights, cfg.solver, std::vector<double>(cfg.system.K, 1.0));
    all_converged = all_converged && res.converged;
    BudgetReport report = budget_of(stats, res.alloc.p, cfg.budget);

    std::vector<double> trace;
    const double loss = fl_final_loss(cfg, seed, report.T, &trace);
    for (std::size_t t = 0; t < trace.size(); ++t) {
      rounds.push_back({std::to_string(seed), std::to_string(t + 1),
                        csv_num(trace[t])});
    }
    summary.push_back(
        {std::to_string(seed), std::to_string(report.T),
         std::to_string(static_cast<long>(trace.size())),
         csv_num(report.E_bar), csv_num(report.ell_bar), csv_num(loss),
         res.converged ? "ok" : "no_convergence"});
    if (!quiet) {
      std::cout << "seed " << seed << ": T=" << report.T
                << " trained=" << trace.size() << " final_loss=" << loss
                << "\n";
    }
  }
  write_csv(out_path(cfg, "fl_rounds.csv"), {"seed", "round", "loss"}, rounds);
  write_csv(out_path(cfg, "fl_summary.csv"),
            {"seed", "T", "T_trained", "E_bar", "ell_bar", "final_loss",
             "status"},
            summary);
  return all_converged ? 0 : 2;
}

int run_scenario(const ExperimentConfig& cfg, const std::string& scenario,
                 bool quiet) {
  if (scenario == "powalloc_compare") return run_powalloc_compare(cfg, quiet);
  if (scenario == "theta_sweep") return run_theta_sweep(cfg, quiet);
  if (scenario == "antenna_sweep") return run_antenna_sweep(cfg, quiet);
  if (scenario == "stopping_suite") return run_stopping_suite(cfg, quiet);
  if (scenario == "fl_end2end") return run_fl_end2end(cfg, quiet);
  throw std::invalid_argument("unknown scenario: " + scenario);
}

}  // namespace cffl
