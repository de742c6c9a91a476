#include "cffl/fedavg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace cffl {

namespace {

// Softmax probabilities for one sample; w is class-major (class c occupies
// w[c*dim .. c*dim+dim)).
void softmax_probs(const SyntheticTask& task, const UserDataset& ds, int i,
                   const std::vector<double>& w, std::vector<double>& probs) {
  const int C = task.num_classes;
  const int dim = task.feature_dim;
  probs.assign(C, 0.0);
  double max_logit = -1e300;
  for (int c = 0; c < C; ++c) {
    double z = 0.0;
    for (int f = 0; f < dim; ++f) z += w[c * dim + f] * ds.X(i, f);
    probs[c] = z;
    max_logit = std::max(max_logit, z);
  }
  double norm = 0.0;
  for (int c = 0; c < C; ++c) {
    probs[c] = std::exp(probs[c] - max_logit);
    norm += probs[c];
  }
  for (int c = 0; c < C; ++c) probs[c] /= norm;
}

// Solves A*x = b in place by Gaussian elimination with partial pivoting.
std::vector<double> solve_dense(Mat A, std::vector<double> b) {
  const int n = static_cast<int>(A.rows());
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r) {
      if (std::fabs(A(r, col)) > std::fabs(A(pivot, col))) pivot = r;
    }
    if (pivot != col) {
      for (int c = 0; c < n; ++c) std::swap(A(col, c), A(pivot, c));
      std::swap(b[col], b[pivot]);
    }
    const double d = A(col, col);
    for (int r = col + 1; r < n; ++r) {
      const double factor = A(r, col) / d;
      for (int c = col; c < n; ++c) A(r, c) -= factor * A(col, c);
      b[r] -= factor * b[col];
    }
  }
  std::vector<double> x(n);
  for (int r = n - 1; r >= 0; --r) {
    double s = b[r];
    for (int c = r + 1; c < n; ++c) s -= A(r, c) * x[c];
    x[r] = s / A(r, r);
  }
  return x;
}

}  // namespace

double SyntheticTask::user_loss(int j, const std::vector<double>& w) const {
  const UserDataset& ds = users[j];
  const int n = static_cast<int>(ds.X.rows());
  double loss = 0.0;
  if (kind == TaskKind::LeastSquares) {
    for (int i = 0; i < n; ++i) {
      double r = -ds.y_reg[i];
      for (int f = 0; f < feature_dim; ++f) r += w[f] * ds.X(i, f);
      loss += 0.5 * r * r;
    }
  } else {
    std::vector<double> probs;
    for (int i = 0; i < n; ++i) {
      softmax_probs(*this, ds, i, w, probs);
      loss += -std::log(std::max(probs[ds.y_cls[i]], 1e-300));
    }
  }
  return loss / n;
}

double SyntheticTask::global_loss(const std::vector<double>& w) const {
  double loss = 0.0;
  for (std::size_t j = 0; j < users.size(); ++j) {
    loss += rho[j] * user_loss(static_cast<int>(j), w);
  }
  return loss;
}

void SyntheticTask::minibatch_gradient(int j, const std::vector<int>& idx,
                                       const std::vector<double>& w,
                                       std::vector<double>& grad) const {
  const UserDataset& ds = users[j];
  grad.assign(model_dim, 0.0);
  if (kind == TaskKind::LeastSquares) {
    for (int i : idx) {
      double r = -ds.y_reg[i];
      for (int f = 0; f < feature_dim; ++f) r += w[f] * ds.X(i, f);
      for (int f = 0; f < feature_dim; ++f) grad[f] += r * ds.X(i, f);
    }
  } else {
    std::vector<double> probs;
    for (int i : idx) {
      softmax_probs(*this, ds, i, w, probs);
      for (int c = 0; c < num_classes; ++c) {
        const double err = probs[c] - (c == ds.y_cls[i] ? 1.0 : 0.0);
        for (int f = 0; f < feature_dim; ++f) {
          grad[c * feature_dim + f] += err * ds.X(i, f);
        }
      }
    }
  }
  const double inv = 1.0 / static_cast<double>(idx.size());
  for (auto& g : grad) g *= inv;
}

SyntheticTask make_least_squares_task(int K, int samples_per_user,
                                      int feature_dim, std::uint64_t seed) {
  SyntheticTask task;
  task.kind = TaskKind::LeastSquares;
  task.feature_dim = feature_dim;
  task.num_classes = 1;
  task.model_dim = feature_dim;
  task.rho.assign(K, 1.0 / K);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> w_true(feature_dim);
  for (auto& x : w_true) x = gauss(rng);

  task.users.resize(K);
  for (int j = 0; j < K; ++j) {
    UserDataset& ds = task.users[j];
    ds.X = Mat(samples_per_user, feature_dim);
    ds.y_reg.resize(samples_per_user);
    for (int i = 0; i < samples_per_user; ++i) {
      double y = 0.0;
      for (int f = 0; f < feature_dim; ++f) {
        ds.X(i, f) = gauss(rng);
        y += w_true[f] * ds.X(i, f);
      }
      ds.y_reg[i] = y + 0.1 * gauss(rng);
    }
  }

  // Global minimizer from the rho-weighted normal equations.
  Mat A(feature_dim, feature_dim);
  std::vector<double> b(feature_dim, 0.0);
  for (int j = 0; j < K; ++j) {
    const UserDataset& ds = task.users[j];
    const double scale = task.rho[j] / samples_per_user;
    for (int i = 0; i < samples_per_user; ++i) {
      for (int f = 0; f < feature_dim; ++f) {
        for (int f2 = 0; f2 < feature_dim; ++f2) {
          A(f, f2) += scale * ds.X(i, f) * ds.X(i, f2);
        }
        b[f] += scale * ds.X(i, f) * ds.y_reg[i];
      }
    }
  }
  task.w_star = solve_dense(std::move(A), std::move(b));
  return task;
}

SyntheticTask make_softmax_task(int K, int samples_per_user, int feature_dim,
                                int num_classes, std::uint64_t seed) {
  SyntheticTask task;
  task.kind = TaskKind::Softmax;
  task.feature_dim = feature_dim;
  task.num_classes = num_classes;
  task.model_dim = feature_dim * num_classes;
  task.rho.assign(K, 1.0 / K);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Mat means(num_classes, feature_dim);
  for (int c = 0; c < num_classes; ++c) {
    for (int f = 0; f < feature_dim; ++f) means(c, f) = 2.0 * gauss(rng);
  }

  std::uniform_int_distribution<int> cls(0, num_classes - 1);
  task.users.resize(K);
  for (int j = 0; j < K; ++j) {
    UserDataset& ds = task.users[j];
    ds.X = Mat(samples_per_user, feature_dim);
    ds.y_cls.resize(samples_per_user);
    for (int i = 0; i < samples_per_user; ++i) {
      const int c = cls(rng);
      ds.y_cls[i] = c;
      for (int f = 0; f < feature_dim; ++f) {
        ds.X(i, f) = means(c, f) + gauss(rng);
      }
    }
  }
  return task;
}

double FLConfig::step_size(int round) const {
  return alpha * std::pow(alpha_decay, round - 1);
}

void FLConfig::validate(const SyntheticTask& task) const {
  if (K != static_cast<int>(task.users.size())) {
    throw std::invalid_argument("FLConfig: K does not match task");
  }
  if (L < 0 || alpha < 0.0 || xi < 1 || T < 1) {
    throw std::invalid_argument("FLConfig: invalid training parameters");
  }
  double rho_sum = std::accumulate(task.rho.begin(), task.rho.end(), 0.0);
  if (std::fabs(rho_sum - 1.0) > 1e-9) {
    throw std::invalid_argument("FLConfig: rho must sum to 1");
  }
}

std::vector<double> local_update(const SyntheticTask& task, int user,
                                 const std::vector<double>& w_in, int L,
                                 double alpha, int xi, std::mt19937_64& rng) {
  const int n = static_cast<int>(task.users[user].X.rows());
  std::vector<double> w = w_in;
  std::vector<double> grad;
  std::vector<int> idx;
  for (int l = 0; l < L; ++l) {
    if (xi >= n) {
      // Full batch, natural order: deterministic without consuming rng state.
      idx.resize(n);
      std::iota(idx.begin(), idx.end(), 0);
    } else {
      idx.clear();
      std::vector<int> all(n);
      std::iota(all.begin(), all.end(), 0);
      std::sample(all.begin(), all.end(), std::back_inserter(idx), xi, rng);
    }
    task.minibatch_gradient(user, idx, w, grad);
    for (int f = 0; f < task.model_dim; ++f) w[f] -= alpha * grad[f];
  }
  return w;
}

GlobalModel aggregate(const std::vector<std::vector<double>>& locals,
                      const std::vector<double>& rho) {
  if (locals.empty() || locals.size() != rho.size()) {
    throw std::invalid_argument("aggregate: locals/rho size mismatch");
  }
  const std::size_t dim = locals.front().size();
  GlobalModel model;
  model.w.assign(dim, 0.0);
  for (std::size_t j = 0; j < locals.size(); ++j) {
    if (locals[j].size() != dim) {
      throw std::invalid_argument("aggregate: dimension mismatch");
    }
    for (std::size_t f = 0; f < dim; ++f) model.w[f] += rho[j] * locals[j][f];
  }
  return model;
}

std::mt19937_64 user_round_rng(std::uint64_t seed, int user, int round) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(user),
                    static_cast<std::uint32_t>(round)};
  return std::mt19937_64(seq);
}

TrainResult train(const SyntheticTask& task, const FLConfig& cfg) {
  cfg.validate(task);
  TrainResult result;
  result.model.w.assign(task.model_dim, 0.0);
  result.loss_trace.reserve(cfg.T);
  std::vector<std::vector<double>> locals(cfg.K);
  for (int t = 1; t <= cfg.T; ++t) {
    const double alpha_t = cfg.step_size(t);
    for (int j = 0; j < cfg.K; ++j) {
      auto rng = user_round_rng(cfg.seed, j, t);
      locals[j] =
          local_update(task, j, result.model.w, cfg.L, alpha_t, cfg.xi, rng);
    }
    result.model = aggregate(locals, task.rho);
    result.model.round = t;
    result.loss_trace.push_back(task.global_loss(result.model.w));
  }
  return result;
}

}  // namespace cffl
