#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "cellfree/core.hpp"
#include "cellfree/rng.hpp"
#include "cellfree/scenario.hpp"

namespace cellfree {

/// Large-scale statistics: beta plus the MMSE-estimate variances gamma.
struct ChannelStats {
  Matrix beta;   // M x K
  Matrix gamma;  // M x K, 0 < gamma < beta for beta > 0
};

/// gamma_mk = tau_u rho_u beta^2 / (tau_u rho_u beta + 1), element-wise.
/// beta = 0 maps to gamma = 0.
inline Matrix compute_gamma(const Matrix& beta, int tau_u, double rho_u) {
  if (tau_u < 1 || rho_u <= 0.0)
    throw std::invalid_argument("compute_gamma: tau_u >= 1, rho_u > 0");
  const double c = static_cast<double>(tau_u) * rho_u;
  return (c * beta.array().square() / (c * beta.array() + 1.0)).matrix();
}

inline ChannelStats make_stats(const Scenario& scen) {
  return ChannelStats{scen.beta,
                      compute_gamma(scen.beta, scen.params.tau_u,
                                    scen.params.rho_u)};
}

/// One small-scale realization. Per AP m, columns of g[m] / g_hat[m] /
/// g_err[m] (all L x K) are the true channel, its MMSE estimate and the
/// estimation error for each user; g = g_hat + g_err holds exactly.
struct ChannelDraw {
  int l = 0;
  std::vector<CMatrix> g;      // M entries, each L x K
  std::vector<CMatrix> g_hat;  // M entries, each L x K
  std::vector<CMatrix> g_err;  // M entries, each L x K
};

/// Draws estimates and errors directly from their MMSE statistics: g_hat
/// entries CN(0, gamma), g_err independent CN(0, beta - gamma). Real and
/// imaginary parts are N(0, sigma^2/2) each. Deterministic per seed.
inline ChannelDraw draw_channels(const ChannelStats& stats, int l,
                                 std::uint64_t seed) {
  const int m_count = static_cast<int>(stats.beta.rows());
  const int k_count = static_cast<int>(stats.beta.cols());
  ChannelDraw draw;
  draw.l = l;
  draw.g.resize(m_count);
  draw.g_hat.resize(m_count);
  draw.g_err.resize(m_count);

  auto rng = make_rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int m = 0; m < m_count; ++m) {
    draw.g_hat[m].resize(l, k_count);
    draw.g_err[m].resize(l, k_count);
    for (int k = 0; k < k_count; ++k) {
      const double var_hat = stats.gamma(m, k);
      const double var_err = stats.beta(m, k) - stats.gamma(m, k);
      const double s_hat = std::sqrt(std::max(var_hat, 0.0) / 2.0);
      const double s_err = std::sqrt(std::max(var_err, 0.0) / 2.0);
      for (int a = 0; a < l; ++a) {
        draw.g_hat[m](a, k) = Complex(s_hat * gauss(rng), s_hat * gauss(rng));
        draw.g_err[m](a, k) = Complex(s_err * gauss(rng), s_err * gauss(rng));
      }
    }
    draw.g[m] = draw.g_hat[m] + draw.g_err[m];
  }
  return draw;
}

}  // namespace cellfree
