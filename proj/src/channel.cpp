#include "cffl/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace cffl {

double noise_power_w(double bandwidth_hz, double noise_figure_db) {
  if (bandwidth_hz <= 0.0) {
    throw std::invalid_argument("noise_power_w: bandwidth must be positive");
  }
  const double dbm = -174.0 + 10.0 * std::log10(bandwidth_hz) + noise_figure_db;
  return std::pow(10.0, (dbm - 30.0) / 10.0);
}

void SystemParams::validate() const {
  if (M < 1 || N < 1 || K < 1) {
    throw std::invalid_argument("SystemParams: M, N, K must be >= 1");
  }
  if (!(tau_p > 0 && tau_p < tau_c)) {
    throw std::invalid_argument("SystemParams: require 0 < tau_p < tau_c");
  }
  if (p_u <= 0.0) throw std::invalid_argument("SystemParams: p_u must be > 0");
  if (B <= 0.0) throw std::invalid_argument("SystemParams: B must be > 0");
  if (area_side <= 0.0) {
    throw std::invalid_argument("SystemParams: area_side must be > 0");
  }
  if (b_bits < 1 || d_dim < 1) {
    throw std::invalid_argument("SystemParams: b_bits and d_dim must be >= 1");
  }
}

namespace {

constexpr double kApHeightM = 10.0;
constexpr double kPathlossInterceptDb = -30.5;

double torus_delta(double a, double b, double side) {
  const double d = std::fabs(a - b);
  return std::min(d, side - d);
}

}  // namespace

NetworkRealization generate_network(const SystemParams& params,
                                    std::uint64_t seed) {
  params.validate();

  NetworkRealization net;
  net.seed = seed;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(0.0, params.area_side);

  net.ap_positions.resize(params.M);
  for (auto& pos : net.ap_positions) {
    pos[0] = coord(rng);
    pos[1] = coord(rng);
  }
  net.user_positions.resize(params.K);
  for (auto& pos : net.user_positions) {
    pos[0] = coord(rng);
    pos[1] = coord(rng);
  }

  net.beta = Mat(params.M, params.K);
  for (int m = 0; m < params.M; ++m) {
    for (int j = 0; j < params.K; ++j) {
      const double dx = torus_delta(net.ap_positions[m][0],
                                    net.user_positions[j][0], params.area_side);
      const double dy = torus_delta(net.ap_positions[m][1],
                                    net.user_positions[j][1], params.area_side);
      const double dist =
          std::sqrt(dx * dx + dy * dy + kApHeightM * kApHeightM);
      const double beta_db =
          kPathlossInterceptDb - 10.0 * params.alpha_p * std::log10(dist);
      net.beta(m, j) = std::pow(10.0, beta_db / 10.0);
    }
  }
  return net;
}

PilotAssignment assign_pilots(const NetworkRealization& realization,
                              int tau_p) {
  if (tau_p < 1) throw std::invalid_argument("assign_pilots: tau_p must be >= 1");

  const auto M = realization.beta.rows();
  const auto K = realization.beta.cols();

  std::vector<double> total_gain(K, 0.0);
  for (std::size_t j = 0; j < K; ++j) {
    for (std::size_t m = 0; m < M; ++m) total_gain[j] += realization.beta(m, j);
  }

  // Strongest users claim the orthogonal pilots first.
  std::vector<std::size_t> order(K);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return total_gain[a] > total_gain[b];
  });

  PilotAssignment assignment;
  assignment.pilot_index.assign(K, -1);

  std::vector<std::vector<std::size_t>> users_on_pilot(tau_p);
  for (std::size_t rank = 0; rank < K; ++rank) {
    const std::size_t j = order[rank];
    int pilot;
    if (rank < static_cast<std::size_t>(tau_p)) {
      pilot = static_cast<int>(rank);
    } else {
      // Greedy reuse: minimize the beta-weighted contamination between user j
      // and the users already holding each pilot.
      pilot = 0;
      double best = std::numeric_limits<double>::infinity();
      for (int t = 0; t < tau_p; ++t) {
        double contamination = 0.0;
        for (std::size_t other : users_on_pilot[t]) {
          for (std::size_t m = 0; m < M; ++m) {
            contamination += realization.beta(m, j) * realization.beta(m, other);
          }
        }
        if (contamination < best) {
          best = contamination;
          pilot = t;
        }
      }
    }
    assignment.pilot_index[j] = pilot;
    users_on_pilot[pilot].push_back(j);
  }

  assignment.cross_corr2 = Mat(K, K);
  for (std::size_t j = 0; j < K; ++j) {
    for (std::size_t j2 = 0; j2 < K; ++j2) {
      assignment.cross_corr2(j, j2) =
          assignment.pilot_index[j] == assignment.pilot_index[j2] ? 1.0 : 0.0;
    }
  }
  return assignment;
}

EstimationStats mmse_stats(const NetworkRealization& realization,
                           const PilotAssignment& pilots,
                           const SystemParams& params) {
  params.validate();
  const int M = params.M;
  const int K = params.K;
  if (realization.beta.rows() != static_cast<std::size_t>(M) ||
      realization.beta.cols() != static_cast<std::size_t>(K) ||
      pilots.pilot_index.size() != static_cast<std::size_t>(K)) {
    throw std::invalid_argument("mmse_stats: dimension mismatch");
  }

  EstimationStats stats;
  stats.params = params;
  stats.pilots = pilots;
  stats.beta = realization.beta;
  stats.p_p = params.pilot_energy();

  stats.c = Mat(M, K);
  stats.gamma = Mat(M, K);
  const double sqrt_pp = std::sqrt(stats.p_p);
  for (int m = 0; m < M; ++m) {
    for (int j = 0; j < K; ++j) {
      double denom = 1.0;
      for (int j2 = 0; j2 < K; ++j2) {
        denom += stats.p_p * realization.beta(m, j2) * pilots.cross_corr2(j2, j);
      }
      stats.c(m, j) = sqrt_pp * realization.beta(m, j) / denom;
      stats.gamma(m, j) = sqrt_pp * realization.beta(m, j) * stats.c(m, j);
    }
  }

  const double N = params.N;
  stats.a.assign(K, 0.0);
  stats.i_mob.assign(K, 0.0);
  stats.S = Mat(K, K);
  stats.W = Mat(K, K);
  const double sigma2 = params.sigma2();
  for (int k = 0; k < K; ++k) {
    for (int m = 0; m < M; ++m) {
      stats.a[k] += N * stats.gamma(m, k);
      stats.i_mob[k] += N * sigma2 * stats.gamma(m, k) / params.p_u;
    }
    for (int j2 = 0; j2 < K; ++j2) {
      for (int m = 0; m < M; ++m) {
        stats.S(k, j2) += N * stats.gamma(m, k) * realization.beta(m, j2);
        stats.W(k, j2) +=
            N * stats.gamma(m, k) * realization.beta(m, j2) / realization.beta(m, k);
      }
    }
  }
  return stats;
}

InterferenceTerms interference_terms(const EstimationStats& stats,
                                     const std::vector<double>& p) {
  const int K = stats.params.K;
  InterferenceTerms terms;
  terms.I_M = stats.i_mob;
  terms.I_p.assign(K, 0.0);
  for (int j = 0; j < K; ++j) {
    for (int j2 = 0; j2 < K; ++j2) {
      if (j2 == j) continue;
      const double w = stats.W(j, j2);
      terms.I_p[j] += p[j2] * stats.pilots.cross_corr2(j, j2) * w * w;
    }
  }
  return terms;
}

double uplink_rate(const EstimationStats& stats, const std::vector<double>& p,
                   int j) {
  if (p[j] == 0.0) return 0.0;
  double denom = stats.i_mob[j];
  for (int j2 = 0; j2 < stats.params.K; ++j2) {
    denom += p[j2] * stats.S(j, j2);
    if (j2 != j) {
      const double w = stats.W(j, j2);
      denom += p[j2] * stats.pilots.cross_corr2(j, j2) * w * w;
    }
  }
  const double sinr = p[j] * stats.a[j] * stats.a[j] / denom;
  return stats.params.prelog() * stats.params.B * std::log2(1.0 + sinr);
}

std::vector<double> uplink_rates(const EstimationStats& stats,
                                 const std::vector<double>& p) {
  std::vector<double> rates(stats.params.K);
  for (int j = 0; j < stats.params.K; ++j) rates[j] = uplink_rate(stats, p, j);
  return rates;
}

}  // namespace cffl
