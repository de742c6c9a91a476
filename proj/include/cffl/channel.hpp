#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "cffl/mat.hpp"

namespace cffl {

/// Receiver noise power in watts from thermal noise floor plus noise figure.
double noise_power_w(double bandwidth_hz, double noise_figure_db);

struct SystemParams {
  int M = 16;                    // AP count
  int N = 4;                     // antennas per AP
  int K = 20;                    // user count
  double B = 20e6;               // bandwidth (Hz)
  int tau_c = 200;               // coherence block length (channel uses)
  int tau_p = 10;                // pilot length (channel uses)
  double p_u = 0.1;              // max uplink transmit power (W)
  double noise_figure_db = 7.0;  // receiver noise figure (dB)
  double area_side = 1000.0;     // square side length (m)
  double alpha_p = 3.67;         // pathloss exponent
  int b_bits = 32;               // bits per model entry
  std::int64_t d_dim = 462410;   // model dimension
  double rho_p = 0.0;            // normalized per-pilot SNR; 0 = derive from p_u/sigma2

  double sigma2() const { return noise_power_w(B, noise_figure_db); }
  double prelog() const { return 1.0 - static_cast<double>(tau_p) / tau_c; }

  /// Total pilot energy p_p = tau_p * rho_p. With rho_p unset, pilots are
  /// sent at full power: rho_p = p_u / sigma2.
  double pilot_energy() const {
    const double rho = rho_p > 0.0 ? rho_p : p_u / sigma2();
    return tau_p * rho;
  }

  /// Throws std::invalid_argument on an inconsistent parameter set.
  void validate() const;
};

struct NetworkRealization {
  std::vector<std::array<double, 2>> ap_positions;
  std::vector<std::array<double, 2>> user_positions;
  Mat beta;  // M x K large-scale fading, linear scale
  std::uint64_t seed = 0;
};

struct PilotAssignment {
  std::vector<int> pilot_index;  // per user, in [0, tau_p)
  Mat cross_corr2;               // K x K, |phi_j^H phi_j'|^2 in {0,1}
};

struct EstimationStats {
  Mat c;            // M x K MMSE scaling coefficients
  Mat gamma;        // M x K estimate variances
  double p_p = 0;   // total pilot energy
  PilotAssignment pilots;
  SystemParams params;
  Mat beta;         // copy of the realization's fading matrix

  // Precomputed link gains reused across rate/derivative evaluations:
  //   a[j]    = sum_m N*gamma_m^j
  //   S(k,j') = sum_m N*gamma_m^k * beta_m^j'
  //   W(k,j') = sum_m N*gamma_m^k * beta_m^j' / beta_m^k
  //   i_mob[j] = sum_m N*sigma2*gamma_m^j / p_u
  std::vector<double> a;
  Mat S;
  Mat W;
  std::vector<double> i_mob;
};

/// Places APs and users uniformly at random on the square and fills the
/// large-scale fading matrix from the wrap-around distance. Deterministic
/// in (params, seed).
NetworkRealization generate_network(const SystemParams& params, std::uint64_t seed);

/// Orthonormal pilot book of size tau_p. With K <= tau_p every user gets a
/// distinct pilot; beyond that, users sorted by descending total channel gain
/// keep the first tau_p pilots and each remaining user greedily takes the
/// pilot with the least beta-weighted contamination.
PilotAssignment assign_pilots(const NetworkRealization& realization, int tau_p);

/// MMSE channel-estimation statistics for the given realization and pilots.
EstimationStats mmse_stats(const NetworkRealization& realization,
                           const PilotAssignment& pilots,
                           const SystemParams& params);

struct InterferenceTerms {
  std::vector<double> I_M;  // per-user, power-independent
  std::vector<double> I_p;  // per-user, pilot contamination
};

InterferenceTerms interference_terms(const EstimationStats& stats,
                                     const std::vector<double>& p);

/// Achievable uplink rate of user j (bit/s). Returns 0 when p[j] == 0.
double uplink_rate(const EstimationStats& stats, const std::vector<double>& p,
                   int j);

/// Per-user rates for the whole allocation.
std::vector<double> uplink_rates(const EstimationStats& stats,
                                 const std::vector<double>& p);

}  // namespace cffl
