#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "cellfree/core.hpp"
#include "cellfree/geometry.hpp"
#include "cellfree/rng.hpp"

namespace cellfree {

/// System-level parameters. Powers are linear watts; beta is normalized by
/// the noise power at drop generation, so the downlink noise variance is 1
/// everywhere downstream and SINR denominators carry a literal "+1".
struct SystemParams {
  int m = 20;              // APs
  int k = 20;              // users
  int l = 14;              // antennas per AP
  double area_side = 2000.0;  // meters
  int tau = 2000;          // coherence interval, samples
  int tau_u = 20;          // uplink pilot length, samples (>= k)
  double rho = 1.0;        // max downlink power per AP, linear
  double rho_u = 0.5;      // pilot symbol power, linear
  double noise_dbm = -92.0;
  double qos_c = 1.0;      // min SE per centralized user, bit/s/Hz
  double qos_d = 1.0;      // min SE per distributed user, bit/s/Hz
  double fh_max = 9e9;     // per-AP fronthaul capacity, bit/s

  double prelog() const { return 1.0 - static_cast<double>(tau_u) / tau; }
  double noise_watt() const { return dbm_to_watt(noise_dbm); }

  void validate() const {
    if (m < 1 || k < 1 || l < 1)
      throw std::invalid_argument("SystemParams: M, K, L must be >= 1");
    if (tau_u < k)
      throw std::invalid_argument(
          "SystemParams: orthogonal pilots require tau_u >= K");
    if (tau_u >= tau)
      throw std::invalid_argument("SystemParams: tau_u must be < tau");
    if (rho <= 0.0 || rho_u <= 0.0)
      throw std::invalid_argument("SystemParams: powers must be positive");
    if (area_side <= 0.0)
      throw std::invalid_argument("SystemParams: area_side must be positive");
    if (qos_c < 0.0 || qos_d < 0.0 || fh_max < 0.0)
      throw std::invalid_argument("SystemParams: qos/fh_max must be >= 0");
  }
};

/// Three-slope path-loss model (Hata-COST231 constant, breakpoints d0/d1)
/// with log-normal shadowing beyond d1.
struct PathLossModel {
  double f_mhz = 1900.0;
  double h_ap = 15.0;      // meters
  double h_user = 1.65;    // meters
  double d0 = 10.0;        // meters
  double d1 = 50.0;        // meters
  double sigma_shadow_db = 8.0;
  double d_min = 1.0;      // distance clamp, meters
  bool normalize_by_noise = true;

  double cost231_constant_db() const {
    const double lf = std::log10(f_mhz);
    return 46.3 + 33.9 * lf - 13.82 * std::log10(h_ap) -
           (1.1 * lf - 0.7) * h_user + (1.56 * lf - 0.8);
  }

  /// Path loss in dB (negative gain) at distance d_m meters, no shadowing.
  double path_loss_db(double d_m) const {
    const double d = std::max(d_m, d_min) / 1000.0;  // km
    const double d0_km = d0 / 1000.0;
    const double d1_km = d1 / 1000.0;
    const double big_l = cost231_constant_db();
    if (d > d1_km) return -big_l - 35.0 * std::log10(d);
    if (d > d0_km)
      return -big_l - 15.0 * std::log10(d1_km) - 20.0 * std::log10(d);
    return -big_l - 15.0 * std::log10(d1_km) - 20.0 * std::log10(d0_km);
  }
};

/// One network drop: geometry plus the large-scale fading matrix.
struct Scenario {
  SystemParams params;
  std::vector<Point> ap_positions;    // size M
  std::vector<Point> user_positions;  // size K
  Matrix beta;                        // M x K, linear, noise-normalized
};

/// Generates a random drop: uniform AP/user placement on the wrap-around
/// square, three-slope path loss, shadowing for d > d1 only, noise
/// normalization. Deterministic per seed; shadowing variates are consumed
/// for every (m,k) pair regardless of distance so the stream layout is
/// independent of the geometry.
inline Scenario generate_drop(const SystemParams& params, std::uint64_t seed,
                              const PathLossModel& model = PathLossModel{}) {
  params.validate();
  Scenario scen;
  scen.params = params;

  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> unif(0.0, params.area_side);
  scen.ap_positions.resize(params.m);
  for (auto& p : scen.ap_positions) {
    p.x = unif(rng);
    p.y = unif(rng);
  }
  scen.user_positions.resize(params.k);
  for (auto& p : scen.user_positions) {
    p.x = unif(rng);
    p.y = unif(rng);
  }

  std::normal_distribution<double> gauss(0.0, 1.0);
  const double noise_w = params.noise_watt();
  scen.beta.resize(params.m, params.k);
  for (int m = 0; m < params.m; ++m) {
    for (int k = 0; k < params.k; ++k) {
      const double d = std::max(
          wraparound_distance(scen.ap_positions[m], scen.user_positions[k],
                              params.area_side),
          model.d_min);
      double gain_db = model.path_loss_db(d);
      const double z = gauss(rng);
      if (d > model.d1) gain_db += model.sigma_shadow_db * z;
      double b = db_to_linear(gain_db);
      if (model.normalize_by_noise) b /= noise_w;
      scen.beta(m, k) = b;
    }
  }
  return scen;
}

}  // namespace cellfree
