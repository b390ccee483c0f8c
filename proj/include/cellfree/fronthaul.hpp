#pragma once

#include <cmath>
#include <stdexcept>

namespace cellfree {

/// eCPRI fronthaul accounting parameters. All rates are bit/s; Gbps appears
/// only at I/O edges.
struct FronthaulParams {
  double m_order = 64.0;        // modulation cardinality, power of 2
  double n_subcarrier = 3264.0;
  double n_ofdm = 14.0;
  double ecpri_eff = 0.85;      // in (0, 1]
  double delay_data = 5e-4;     // seconds
  double delay_pr = 2e-4;       // seconds
  double n_bits = 16.0;         // quantization bits per I/Q component
  double n_gran = 136.0;        // precoding granularity
  int l = 14;                   // antennas per AP

  void validate() const {
    if (m_order <= 1.0 || n_subcarrier <= 0.0 || n_ofdm <= 0.0 ||
        delay_data <= 0.0 || delay_pr <= 0.0 || n_bits <= 0.0 ||
        n_gran <= 0.0 || l < 1)
      throw std::invalid_argument("FronthaulParams: all fields must be positive");
    if (ecpri_eff <= 0.0 || ecpri_eff > 1.0)
      throw std::invalid_argument("FronthaulParams: ecpri_eff in (0,1]");
    const double log2m = std::log2(m_order);
    if (std::fabs(log2m - std::round(log2m)) > 1e-9)
      throw std::invalid_argument("FronthaulParams: m_order must be a power of 2");
  }
};

/// Per-user data-symbol rate on the fronthaul, bit/s.
inline double alpha1(const FronthaulParams& fp) {
  return std::log2(fp.m_order) * fp.n_subcarrier * fp.n_ofdm /
         (fp.ecpri_eff * fp.delay_data);
}

/// Per-centralized-user precoding-weight rate on the fronthaul, bit/s.
inline double alpha2(const FronthaulParams& fp) {
  return 2.0 * fp.l * fp.n_bits * fp.n_gran / (fp.ecpri_eff * fp.delay_pr);
}

/// Per-AP constraint K_c*alpha2 + (K_c+K_d)*alpha1 <= FH_max, compared at
/// 1 bit/s resolution.
inline bool check_constraint(int k_c, int k_d, const FronthaulParams& fp,
                             double fh_max) {
  if (k_c < 0 || k_d < 0)
    throw std::invalid_argument("check_constraint: counts must be >= 0");
  const double used = k_c * alpha2(fp) + (k_c + k_d) * alpha1(fp);
  return used <= fh_max + 0.5;
}

/// Fronthaul usage of a served (K_c, K_d) split at one AP, bit/s.
inline double fronthaul_used(int k_c, int k_d, const FronthaulParams& fp) {
  return k_c * alpha2(fp) + (k_c + k_d) * alpha1(fp);
}

struct MaxGroupSizes {
  int k_max_c = 0;
  int k_max_d = 0;
};

namespace detail {
// floor of a nonnegative rate quotient, robust to <=1e-9 rounding.
inline int rate_floor(double num, double den) {
  if (num <= 0.0 || den <= 0.0) return 0;
  return static_cast<int>(std::floor(num / den + 1e-9));
}
}  // namespace detail

/// Largest single-scheme group sizes: K_c with K_d = 0 (capped by the ZF
/// rank M*L and K) and K_d with K_c = 0 (capped by L-1, required by the
/// L - K_d factor in the distributed SINR, and K).
inline MaxGroupSizes max_group_sizes(const FronthaulParams& fp, double fh_max,
                                     int m, int k) {
  MaxGroupSizes sizes;
  sizes.k_max_c = std::min(
      {detail::rate_floor(fh_max, alpha1(fp) + alpha2(fp)), m * fp.l, k});
  sizes.k_max_d =
      std::min({detail::rate_floor(fh_max, alpha1(fp)), fp.l - 1, k});
  return sizes;
}

/// Largest K_c when all K users must be served (K_d = K - K_c). The default
/// follows the per-AP constraint: K_c <= (FH_max - K*alpha1)/alpha2. The
/// compat form swaps the roles of alpha1/alpha2 as printed in the source
/// description of the serve-all experiment.
inline int k_max_c_serve_all(const FronthaulParams& fp, double fh_max, int k,
                             bool compat_swapped = false) {
  const double a1 = alpha1(fp);
  const double a2 = alpha2(fp);
  const double num = compat_swapped ? fh_max - k * a2 : fh_max - k * a1;
  const double den = compat_swapped ? a1 : a2;
  if (num < 0.0) return -1;  // even K_c = 0 cannot serve all K users
  return std::min(detail::rate_floor(num, den), k);
}

}  // namespace cellfree
