#pragma once

#include <cstdint>
#include <vector>

#include "cellfree/channel.hpp"
#include "cellfree/core.hpp"
#include "cellfree/precoding.hpp"
#include "cellfree/rng.hpp"
#include "cellfree/se_eval.hpp"

namespace cellfree {

// Independent Monte Carlo verifier for the closed-form SINR and power
// expressions. Precoders are rebuilt from fresh channel realizations on
// every draw; nothing is shared with the closed-form path (in particular,
// no mu estimate enters the computation — interference powers are averaged
// directly from the received-signal terms).

/// Use-and-then-forget SINR per user, estimated from raw realizations of
/// the received signal: |E{desired}|^2 over (var{desired} + interference
/// powers + 1). Entries of the result are indexed by user id; users not in
/// the grouping get 0. Singular draws are skipped (at most 1%).
inline Vector mc_uatf_sinr(const ChannelStats& stats, const Grouping& grouping,
                           const PowerAllocation& alloc,
                           const SystemParams& params, int n_draws,
                           std::uint64_t seed) {
  const int m_count = params.m;
  const int l = params.l;
  const int k_total = params.k;
  const int k_c = grouping.kc();
  const int k_d = grouping.kd();
  const int served = k_c + k_d;

  // Served-user table: type and column in its precoder block.
  std::vector<int> users(served);
  for (int i = 0; i < k_c; ++i) users[i] = grouping.centralized[i];
  for (int j = 0; j < k_d; ++j) users[k_c + j] = grouping.distributed[j];

  std::vector<Complex> mean_a(served, Complex(0.0, 0.0));
  Matrix p2 = Matrix::Zero(served, served);  // E|term from user v at user u|^2

  int used = 0, skipped = 0;
  for (int d = 0; d < n_draws; ++d) {
    const ChannelDraw draw =
        draw_channels(stats, l, substream_seed(seed, stream::kOracle, d));
    CMatrix w_c;
    std::vector<CMatrix> w_d(m_count);
    try {
      w_c = centralized_zf(draw, grouping);
      for (int m = 0; m < m_count; ++m)
        w_d[m] = local_zf(draw, stats, grouping, m);
    } catch (const SingularMatrixError&) {
      ++skipped;
      continue;
    }

    // z(u, v): received coefficient at user u of the signal meant for v.
    CMatrix z = CMatrix::Zero(served, served);
    for (int m = 0; m < m_count; ++m) {
      CMatrix gm(l, served);
      for (int u = 0; u < served; ++u) gm.col(u) = draw.g[m].col(users[u]);
      const CMatrix pc = gm.adjoint() * w_c.block(m * l, 0, l, k_c);
      const CMatrix pd = gm.adjoint() * w_d[m];
      for (int u = 0; u < served; ++u) {
        for (int v = 0; v < k_c; ++v)
          z(u, v) += std::sqrt(alloc.eta_c[v]) * pc(u, v);
        for (int v = 0; v < k_d; ++v)
          z(u, k_c + v) += std::sqrt(alloc.eta_d(m, v)) * pd(u, v);
      }
    }
    for (int u = 0; u < served; ++u) {
      mean_a[u] += z(u, u);
      for (int v = 0; v < served; ++v) p2(u, v) += std::norm(z(u, v));
    }
    ++used;
  }
  if (skipped > n_draws / 100 || used == 0)
    throw SingularMatrixError("mc_uatf_sinr: too many singular draws");

  Vector sinr = Vector::Zero(k_total);
  for (int u = 0; u < served; ++u) {
    const Complex ma = mean_a[u] / static_cast<double>(used);
    const double desired = std::norm(ma);
    double den = p2(u, u) / used - desired + 1.0;  // fluctuation + noise
    for (int v = 0; v < served; ++v)
      if (v != u) den += p2(u, v) / used;
    sinr[users[u]] = desired / den;
  }
  return sinr;
}

/// Monte Carlo per-AP transmit power E{||s_m||^2}. The unit-power symbols
/// are integrated out analytically, so each draw contributes
/// sum_k eta ||w_mk||^2 over the served users.
inline Vector mc_ap_power(const ChannelStats& stats, const Grouping& grouping,
                          const PowerAllocation& alloc,
                          const SystemParams& params, int n_draws,
                          std::uint64_t seed) {
  const int m_count = params.m;
  const int l = params.l;
  Vector power = Vector::Zero(m_count);
  int used = 0, skipped = 0;
  for (int d = 0; d < n_draws; ++d) {
    const ChannelDraw draw =
        draw_channels(stats, l, substream_seed(seed, stream::kOracle, d));
    Vector draw_power = Vector::Zero(m_count);
    try {
      const CMatrix w_c = centralized_zf(draw, grouping);
      for (int m = 0; m < m_count; ++m) {
        const CMatrix w_dm = local_zf(draw, stats, grouping, m);
        double p = 0.0;
        for (int i = 0; i < grouping.kc(); ++i)
          p += alloc.eta_c[i] * w_c.block(m * l, i, l, 1).squaredNorm();
        for (int j = 0; j < grouping.kd(); ++j)
          p += alloc.eta_d(m, j) * w_dm.col(j).squaredNorm();
        draw_power[m] = p;
      }
    } catch (const SingularMatrixError&) {
      ++skipped;
      continue;
    }
    power += draw_power;
    ++used;
  }
  if (skipped > n_draws / 100 || used == 0)
    throw SingularMatrixError("mc_ap_power: too many singular draws");
  return power / used;
}

}  // namespace cellfree
