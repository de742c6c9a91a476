#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "cffl/mat.hpp"

namespace cffl {

enum class TaskKind { LeastSquares, Softmax };

struct UserDataset {
  Mat X;                     // samples x features
  std::vector<double> y_reg; // least-squares targets
  std::vector<int> y_cls;    // class labels (softmax)
};

/// Desk-scale convex training task exercising the FedAvg loop: least squares
/// with a known global minimizer, or 10-class softmax regression on a
/// Gaussian-mixture dataset.
struct SyntheticTask {
  TaskKind kind = TaskKind::LeastSquares;
  int feature_dim = 0;
  int num_classes = 1;
  int model_dim = 0;  // feature_dim (LS) or feature_dim * num_classes
  std::vector<UserDataset> users;
  std::vector<double> rho;      // data-fraction weights, sums to 1
  std::vector<double> w_star;   // least squares only

  double user_loss(int j, const std::vector<double>& w) const;
  double global_loss(const std::vector<double>& w) const;
  /// Average gradient over the given sample indices of user j.
  void minibatch_gradient(int j, const std::vector<int>& idx,
                          const std::vector<double>& w,
                          std::vector<double>& grad) const;
};

SyntheticTask make_least_squares_task(int K, int samples_per_user,
                                      int feature_dim, std::uint64_t seed);
SyntheticTask make_softmax_task(int K, int samples_per_user, int feature_dim,
                                int num_classes, std::uint64_t seed);

struct FLConfig {
  int K = 1;
  int L = 2;              // local iterations
  double alpha = 0.05;    // step size
  double alpha_decay = 1.0;  // alpha_t = alpha * decay^(t-1)
  int xi = 50;            // minibatch size; >= dataset size means full batch
  int T = 50;             // global rounds
  std::uint64_t seed = 0;

  double step_size(int round) const;  // round is 1-based
  void validate(const SyntheticTask& task) const;
};

struct GlobalModel {
  std::vector<double> w;
  int round = 0;
};

/// One user's L local SGD iterations from w_in. Deterministic given rng.
std::vector<double> local_update(const SyntheticTask& task, int user,
                                 const std::vector<double>& w_in, int L,
                                 double alpha, int xi, std::mt19937_64& rng);

/// Data-weighted average of the local models.
GlobalModel aggregate(const std::vector<std::vector<double>>& locals,
                      const std::vector<double>& rho);

/// Per-(seed, user, round) RNG stream used by train(); exposed so reference
/// implementations can reproduce the exact sample draws.
std::mt19937_64 user_round_rng(std::uint64_t seed, int user, int round);

struct TrainResult {
  GlobalModel model;
  std::vector<double> loss_trace;  // global loss after each round
};

/// T synchronous FedAvg rounds from the zero model.
TrainResult train(const SyntheticTask& task, const FLConfig& cfg);

}  // namespace cffl
