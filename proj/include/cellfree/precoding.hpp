#pragma once

#include <cstdint>
#include <vector>

#include "cellfree/channel.hpp"
#include "cellfree/core.hpp"
#include "cellfree/grouping.hpp"
#include "cellfree/rng.hpp"

namespace cellfree {

/// Substream tag for the draws inside estimate_mu: draw d uses
/// substream_seed(seed, kMuDrawStream, d).
constexpr std::uint64_t kMuDrawStream = 0xD12A;

namespace detail {

constexpr double kCondLimit = 1e12;

/// Solves gram * x = rhs for a Hermitian PSD gram with a condition-number
/// guard. Throws SingularMatrixError instead of regularizing.
inline CMatrix solve_gram(const CMatrix& gram, const CMatrix& rhs,
                          const char* what) {
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(gram);
  if (eig.info() != Eigen::Success)
    throw SingularMatrixError(std::string(what) + ": eigensolver failed");
  const double ev_min = eig.eigenvalues().minCoeff();
  const double ev_max = eig.eigenvalues().maxCoeff();
  if (!(ev_min > 0.0) || ev_max / ev_min > kCondLimit)
    throw SingularMatrixError(std::string(what) +
                              ": Gram matrix singular or ill-conditioned");
  Eigen::LLT<CMatrix> llt(gram);
  if (llt.info() != Eigen::Success)
    throw SingularMatrixError(std::string(what) + ": Cholesky failed");
  return llt.solve(rhs);
}

}  // namespace detail

/// Centralized ZF across all APs: W = G_hat_c (G_hat_c^H G_hat_c)^-1 built
/// from the stacked ML x K_c estimate of the centralized users' channels.
/// Column i is the network-wide precoder of the i-th centralized user; the
/// rows (m*L .. m*L+L-1) are AP m's component w_mk^c. Satisfies the
/// collective identity (G_hat_c)^H W = I exactly per realization.
inline CMatrix centralized_zf(const ChannelDraw& draw,
                              const Grouping& grouping) {
  const int m_count = static_cast<int>(draw.g_hat.size());
  const int l = draw.l;
  const int k_c = grouping.kc();
  if (k_c == 0) return CMatrix(m_count * l, 0);
  if (k_c > m_count * l)
    throw std::invalid_argument("centralized_zf: K_c exceeds M*L");

  CMatrix stacked(m_count * l, k_c);
  for (int m = 0; m < m_count; ++m)
    for (int i = 0; i < k_c; ++i)
      stacked.block(m * l, i, l, 1) = draw.g_hat[m].col(grouping.centralized[i]);

  const CMatrix gram = stacked.adjoint() * stacked;
  const CMatrix inv = detail::solve_gram(
      gram, CMatrix::Identity(k_c, k_c), "centralized_zf");
  return stacked * inv;
}

/// Local ZF at one AP for the distributed users: direction
/// G_m^d ((G_m^d)^H G_m^d)^-1 pi_j, scaled so that E{||w_mk^d||^2} = 1
/// using the closed-form normalizer E{||dir||^2} = 1/((L-K_d) gamma_mk).
/// Column j is the precoder for the j-th distributed user. Requires
/// L > K_d; equality makes the normalizer singular.
inline CMatrix local_zf(const ChannelDraw& draw, const ChannelStats& stats,
                        const Grouping& grouping, int ap) {
  const int l = draw.l;
  const int k_d = grouping.kd();
  if (k_d == 0) return CMatrix(l, 0);
  if (k_d >= l)
    throw std::domain_error(
        "local_zf: distributed group too large (requires K_d < L)");

  CMatrix g_d(l, k_d);
  for (int j = 0; j < k_d; ++j)
    g_d.col(j) = draw.g_hat[ap].col(grouping.distributed[j]);

  const CMatrix gram = g_d.adjoint() * g_d;
  const CMatrix dir =
      g_d * detail::solve_gram(gram, CMatrix::Identity(k_d, k_d), "local_zf");

  CMatrix w(l, k_d);
  for (int j = 0; j < k_d; ++j) {
    const double gamma = stats.gamma(ap, grouping.distributed[j]);
    w.col(j) = dir.col(j) * std::sqrt((l - k_d) * gamma);
  }
  return w;
}

/// Monte Carlo estimate of mu_mk = E{||w_mk^c||^2} over n_draws independent
/// channel realizations. Returns an M x K_c matrix. Singular draws are
/// skipped and counted; more than 1% skipped is an error.
inline Matrix estimate_mu(const ChannelStats& stats, const Grouping& grouping,
                          int l, int n_draws, std::uint64_t seed) {
  if (n_draws < 1) throw std::invalid_argument("estimate_mu: n_draws >= 1");
  const int m_count = static_cast<int>(stats.beta.rows());
  const int k_c = grouping.kc();
  Matrix mu = Matrix::Zero(m_count, k_c);
  if (k_c == 0) return mu;

  int used = 0, skipped = 0;
  for (int d = 0; d < n_draws; ++d) {
    const ChannelDraw draw =
        draw_channels(stats, l, substream_seed(seed, kMuDrawStream, d));
    CMatrix w;
    try {
      w = centralized_zf(draw, grouping);
    } catch (const SingularMatrixError&) {
      ++skipped;
      continue;
    }
    for (int m = 0; m < m_count; ++m)
      for (int i = 0; i < k_c; ++i)
        mu(m, i) += w.block(m * l, i, l, 1).squaredNorm();
    ++used;
  }
  if (skipped > n_draws / 100 || used == 0)
    throw SingularMatrixError("estimate_mu: too many singular draws");
  return mu / used;
}

}  // namespace cellfree
