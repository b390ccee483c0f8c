#include <catch2/catch.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "cellfree/precoding.hpp"
#include "cellfree/sweep.hpp"
#include "helpers.hpp"

using namespace cellfree;

namespace {

/// Content-addressed mu provider: identical groupings always see identical
/// draws, so sweep results are comparable against re-enumeration.
MuProvider hashed_mu_provider(const ChannelStats& stats, int l,
                              int n_draws = 400) {
  return [&stats, l, n_draws](const Grouping& g) -> Matrix {
    std::uint64_t h = 0x9E3779B97F4A7C15ULL;
    for (int u : g.centralized) h = splitmix64(h ^ (u + 1));
    return estimate_mu(stats, g, l, n_draws, h);
  };
}

struct Tiny {
  SystemParams params;
  ChannelStats stats;
  FronthaulParams fp;
};

Tiny tiny_instance(double fh_max) {
  Tiny t;
  t.params.m = 2;
  t.params.k = 4;
  t.params.l = 6;
  t.params.tau_u = 20;
  t.params.qos_c = 0.0;
  t.params.qos_d = 0.0;
  t.params.fh_max = fh_max;
  t.stats.beta.resize(2, 4);
  t.stats.beta << 2.0, 1.8, 0.05, 0.06,
                  0.04, 0.05, 1.6, 1.9;
  t.stats.gamma = compute_gamma(t.stats.beta, t.params.tau_u, t.params.rho_u);
  t.fp.l = t.params.l;
  return t;
}

}  // namespace

TEST_CASE("sweep equals exhaustive partition enumeration on a tiny instance",
          "[sweep]") {
  const Tiny t = tiny_instance(1e12);  // caps admit every partition
  const MuProvider mu_of = hashed_mu_provider(t.stats, t.params.l);
  const double a1 = alpha1(t.fp);
  const double a2 = alpha2(t.fp);

  double best_se = -1.0;
  std::vector<int> best_set;
  for (int mask = 0; mask < 16; ++mask) {
    Grouping g;
    for (int u = 0; u < 4; ++u)
      if (mask & (1 << u))
        g.centralized.push_back(u);
      else
        g.distributed.push_back(u);
    if (g.kc() > max_group_sizes(t.fp, t.params.fh_max, t.params.m,
                                 t.params.k).k_max_c)
      continue;
    const int k_d_fh = static_cast<int>(
        std::floor((t.params.fh_max - g.kc() * (a1 + a2)) / a1 + 1e-9));
    const int k_d = std::min({t.params.k - g.kc(), k_d_fh, t.params.l - 1});
    if (g.kd() > k_d) continue;  // not reachable under the caps
    const Matrix mu = mu_of(g);
    const PowerAllocation alloc = epa(g, mu, t.params);
    const SEReport rep = sum_se(t.stats, g, mu, alloc, t.params, t.fp);
    if (rep.sum_se > best_se) {
      best_se = rep.sum_se;
      best_set = g.centralized;
    }
  }

  SweepOptions opts;
  opts.method = GroupingMethod::kKmeans;
  opts.alloc = AllocMode::kEpa;
  const SweepResult res = sweep_select(t.stats, mu_of, t.fp, t.params, opts);
  REQUIRE(res.any_candidate);
  const bool same_partition = res.grouping.centralized == best_set;
  const bool same_value = std::fabs(res.report.sum_se - best_se) <= 1e-9;
  CHECK((same_partition || same_value));
  CHECK(res.report.sum_se == Approx(best_se).margin(1e-9));
}

TEST_CASE("sweep argmax dominates the pure candidates", "[sweep]") {
  for (std::uint64_t seed : {2ULL, 6ULL, 14ULL}) {
    SystemParams p;
    p.m = 3;
    p.k = 5;
    p.l = 8;
    p.tau_u = 20;
    p.qos_c = 0.0;
    p.qos_d = 0.0;
    p.fh_max = 1e12;  // both extremes admissible
    const ChannelStats stats =
        testutil::random_stats(p.m, p.k, seed, 0.05, 3.0);
    FronthaulParams fp;
    fp.l = p.l;
    const MuProvider mu_of = hashed_mu_provider(stats, p.l);

    SweepOptions opts;
    opts.method = GroupingMethod::kKmeans;
    opts.alloc = AllocMode::kEpa;
    const SweepResult res = sweep_select(stats, mu_of, fp, p, opts);
    REQUIRE(res.any_candidate);

    Grouping all_c;
    for (int u = 0; u < p.k; ++u) all_c.centralized.push_back(u);
    Grouping all_d;
    for (int u = 0; u < p.k; ++u) all_d.distributed.push_back(u);
    for (const Grouping& g : {all_c, all_d}) {
      const Matrix mu = mu_of(g);
      const SEReport rep =
          sum_se(stats, g, mu, epa(g, mu, p), p, fp);
      CHECK(res.report.sum_se >= rep.sum_se - 1e-9);
    }
  }
}

TEST_CASE("every selected grouping satisfies the caps", "[sweep]") {
  SystemParams p;
  p.m = 2;
  p.k = 12;
  p.l = 5;
  p.tau_u = 20;
  p.qos_c = 0.0;
  p.qos_d = 0.0;
  const ChannelStats stats = testutil::random_stats(p.m, p.k, 99, 0.05, 3.0);
  FronthaulParams fp;
  fp.l = p.l;
  const MuProvider mu_of = hashed_mu_provider(stats, p.l, 200);

  for (double fh_gbps : {1.0, 2.0, 4.0, 8.0}) {
    p.fh_max = fh_gbps * 1e9;
    SweepOptions opts;
    opts.method = GroupingMethod::kKmeans;
    opts.alloc = AllocMode::kEpa;
    const SweepResult res = sweep_select(stats, mu_of, fp, p, opts);
    if (!res.any_candidate) continue;
    CHECK(check_constraint(res.grouping.kc(), res.grouping.kd(), fp,
                           p.fh_max));
    CHECK(res.grouping.kd() <= p.l - 1);
    CHECK(res.grouping.kc() <= p.m * p.l);
  }
}

TEST_CASE("capacity mode drops the weakest users", "[sweep]") {
  SystemParams p;
  p.m = 2;
  p.k = 6;
  p.l = 4;
  p.tau_u = 20;
  p.qos_c = 0.0;
  p.qos_d = 0.0;
  FronthaulParams fp;
  fp.l = p.l;
  // Budget fits exactly 2 distributed users and no centralized ones.
  p.fh_max = 2.2 * alpha1(fp);

  ChannelStats stats;
  stats.beta.resize(2, 6);
  stats.beta << 0.1, 0.9, 0.2, 1.0, 0.3, 0.8,
                0.1, 0.8, 0.2, 1.1, 0.3, 0.9;
  stats.gamma = compute_gamma(stats.beta, p.tau_u, p.rho_u);
  const MuProvider mu_of = hashed_mu_provider(stats, p.l, 100);

  SweepOptions opts;
  opts.method = GroupingMethod::kKmeans;
  opts.alloc = AllocMode::kEpa;
  const SweepResult res = sweep_select(stats, mu_of, fp, p, opts);
  REQUIRE(res.any_candidate);
  REQUIRE(res.grouping.kc() == 0);
  // Users 1 and 3 carry the largest total gains.
  CHECK(res.grouping.distributed == std::vector<int>{1, 3});
}

TEST_CASE("serve-all mode keeps every user", "[sweep]") {
  SystemParams p;
  p.m = 3;
  p.k = 4;
  p.l = 8;
  p.tau_u = 20;
  p.qos_c = 0.0;
  p.qos_d = 0.0;
  FronthaulParams fp;
  fp.l = p.l;
  p.fh_max = 4 * alpha1(fp) + 2.5 * alpha2(fp);  // K_max^c = 2 serving all
  const ChannelStats stats = testutil::random_stats(p.m, p.k, 3, 0.1, 2.0);
  const MuProvider mu_of = hashed_mu_provider(stats, p.l, 200);

  SweepOptions opts;
  opts.method = GroupingMethod::kKmeans;
  opts.alloc = AllocMode::kEpa;
  opts.mode = ServiceMode::kServeAllK;
  const SweepResult res = sweep_select(stats, mu_of, fp, p, opts);
  REQUIRE(res.any_candidate);
  CHECK(res.grouping.served() == p.k);
  CHECK(res.grouping.kc() <= 2);

  // Not enough fronthaul for all users: no candidate at all.
  SystemParams starved = p;
  starved.fh_max = 3 * alpha1(fp);
  const SweepResult none = sweep_select(stats, mu_of, fp, starved, opts);
  CHECK_FALSE(none.any_candidate);
}

TEST_CASE("fast OPA mode re-solves the winner", "[sweep][sca]") {
  SystemParams p;
  p.m = 2;
  p.k = 3;
  p.l = 6;
  p.tau_u = 20;
  p.qos_c = 0.0;
  p.qos_d = 0.0;
  p.fh_max = 1e12;
  const ChannelStats stats = testutil::random_stats(p.m, p.k, 8, 0.1, 2.0);
  FronthaulParams fp;
  fp.l = p.l;
  const MuProvider mu_of = hashed_mu_provider(stats, p.l, 200);

  SweepOptions epa_opts;
  epa_opts.method = GroupingMethod::kKmeans;
  epa_opts.alloc = AllocMode::kEpa;
  SweepOptions opa_opts = epa_opts;
  opa_opts.alloc = AllocMode::kOpa;

  const SweepResult epa_res = sweep_select(stats, mu_of, fp, p, epa_opts);
  const SweepResult opa_res = sweep_select(stats, mu_of, fp, p, opa_opts);
  REQUIRE(opa_res.any_candidate);
  CHECK(opa_res.report.sca_iterations > 0);
  CHECK(opa_res.report.sum_se >= epa_res.report.sum_se - 1e-6);
  CHECK_FALSE(opa_res.trace.empty());
}
