#pragma once

// Shared instance builders for the power/sweep/oracle tests.

#include <cstdint>
#include <random>

#include "cellfree/channel.hpp"
#include "cellfree/grouping.hpp"
#include "cellfree/precoding.hpp"
#include "cellfree/scenario.hpp"

namespace testutil {

struct Instance {
  cellfree::SystemParams params;
  cellfree::ChannelStats stats;
  cellfree::Grouping grouping;
  cellfree::Matrix mu;
};

inline cellfree::ChannelStats random_stats(int m, int k, std::uint64_t seed,
                                           double lo = 0.05, double hi = 5.0) {
  cellfree::ChannelStats stats;
  auto rng = cellfree::make_rng(seed);
  std::uniform_real_distribution<double> unif(lo, hi);
  stats.beta.resize(m, k);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < k; ++j) stats.beta(i, j) = unif(rng);
  stats.gamma = cellfree::compute_gamma(stats.beta, 20, 0.5);
  return stats;
}

/// Random small instance with a valid grouping and an estimated mu.
inline Instance random_instance(std::uint64_t seed, double qos = 0.0,
                                int mu_draws = 200) {
  auto rng = cellfree::make_rng(seed);
  std::uniform_int_distribution<int> m_dist(2, 5), l_dist(4, 8), k_dist(2, 6);

  Instance inst;
  inst.params.m = m_dist(rng);
  inst.params.l = l_dist(rng);
  inst.params.k = k_dist(rng);
  inst.params.tau_u = 20;
  inst.params.qos_c = qos;
  inst.params.qos_d = qos;
  inst.params.fh_max = 1e12;  // not binding here
  inst.stats = random_stats(inst.params.m, inst.params.k, seed * 77 + 1);

  const int max_kd = std::min(inst.params.l - 1, inst.params.k);
  std::uniform_int_distribution<int> kc_dist(0, inst.params.k);
  int k_c = kc_dist(rng);
  if (inst.params.k - k_c > max_kd) k_c = inst.params.k - max_kd;
  inst.grouping = cellfree::lsf_group(inst.stats.beta, k_c);
  inst.mu = cellfree::estimate_mu(inst.stats, inst.grouping, inst.params.l,
                                  mu_draws, seed * 31 + 7);
  return inst;
}

}  // namespace testutil
