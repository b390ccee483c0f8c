#pragma once

#include <cstdint>
#include <functional>

#include "cellfree/fronthaul.hpp"
#include "cellfree/grouping.hpp"
#include "cellfree/power.hpp"
#include "cellfree/se_eval.hpp"

namespace cellfree {

enum class GroupingMethod { kKmeans, kLsf, kRandom };
enum class AllocMode { kEpa, kOpa };

/// How a sweep treats users that do not fit the fronthaul budget.
enum class ServiceMode {
  kCapacityLimited,  // excess users dropped, weakest total gain first
  kServeAllK,        // candidates must serve all K users
};

/// Supplies mu for a candidate grouping; the harness caches and seeds it.
using MuProvider = std::function<Matrix(const Grouping&)>;

/// Pluggable OPA entry point (the harness wraps solve_sca with a cache;
/// identical groupings across sweep points then solve once).
using OpaSolver = std::function<ScaResult(
    const ChannelStats&, const Grouping&, const Matrix&, const SystemParams&,
    const PowerAllocation&, const ScaOptions&)>;

struct SweepOptions {
  GroupingMethod method = GroupingMethod::kKmeans;
  AllocMode alloc = AllocMode::kEpa;
  bool full_opa_sweep = false;  // default: EPA sweep, OPA on the winner
  ServiceMode mode = ServiceMode::kCapacityLimited;
  bool fig3_kmax_compat = false;
  std::uint64_t seed = 0;  // per-candidate random-grouping substreams
  ScaOptions sca{};
  OpaSolver opa_solver{};  // defaults to solve_sca
};

struct SweepResult {
  Grouping grouping;
  PowerAllocation alloc;
  SEReport report;
  Matrix mu;
  bool any_candidate = false;
  bool qos_infeasible = false;
  std::vector<ScaTraceRow> trace;  // from the winning OPA solve, if any
};

namespace detail {

/// Keeps the k_d strongest distributed users (by total gain), preserving
/// ascending index order. Users cut here are dropped, not moved.
inline void truncate_distributed(Grouping& grouping, const Matrix& beta,
                                 int k_d) {
  if (grouping.kd() <= k_d) return;
  Vector gains = beta.colwise().sum();
  std::vector<int> order = grouping.distributed;
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return gains[a] > gains[b]; });
  order.resize(k_d);
  std::sort(order.begin(), order.end());
  grouping.distributed = std::move(order);
}

inline Grouping make_grouping(GroupingMethod method, const Matrix& beta,
                              int k_c, std::uint64_t seed) {
  switch (method) {
    case GroupingMethod::kKmeans:
      return kmeans_group(beta, k_c, seed);
    case GroupingMethod::kLsf:
      return lsf_group(beta, k_c);
    case GroupingMethod::kRandom:
      return random_group(static_cast<int>(beta.cols()), k_c, seed);
  }
  throw std::logic_error("make_grouping: unknown method");
}

}  // namespace detail

/// Sweeps K_c from 0 to K_max^c, forms the grouping for each candidate,
/// caps K_d by the fronthaul constraint and L-1 (capacity mode drops the
/// weakest users; serve-all mode skips candidates that cannot carry all K),
/// evaluates the sum SE and returns the argmax (ties to the smaller K_c).
///
/// Under AllocMode::kOpa the sweep scores candidates with EPA and re-solves
/// the winner with the SCA optimizer unless full_opa_sweep is set, in which
/// case every candidate is optimized.
inline SweepResult sweep_select(const ChannelStats& stats,
                                const MuProvider& mu_provider,
                                const FronthaulParams& fp,
                                const SystemParams& params,
                                const SweepOptions& opts) {
  const Matrix& beta = stats.beta;
  const double a1 = alpha1(fp);
  const double a2 = alpha2(fp);
  const int k_total = params.k;

  int k_max_c = 0;
  if (opts.mode == ServiceMode::kCapacityLimited) {
    k_max_c = max_group_sizes(fp, params.fh_max, params.m, k_total).k_max_c;
  } else {
    k_max_c = k_max_c_serve_all(fp, params.fh_max, k_total,
                                opts.fig3_kmax_compat);
    k_max_c = std::min(k_max_c, params.m * params.l);
  }

  SweepResult best;
  const bool opa = opts.alloc == AllocMode::kOpa;
  const OpaSolver solve_opa =
      opts.opa_solver
          ? opts.opa_solver
          : [](const ChannelStats& st, const Grouping& g, const Matrix& mu,
               const SystemParams& pr, const PowerAllocation& init,
               const ScaOptions& sca) {
              return solve_sca(st, g, mu, pr, init, sca);
            };
  for (int k_c = 0; k_c <= k_max_c; ++k_c) {
    Grouping grouping = detail::make_grouping(
        opts.method, beta, k_c, substream_seed(opts.seed, stream::kGrouping,
                                               static_cast<std::uint64_t>(k_c)));
    if (opts.mode == ServiceMode::kCapacityLimited) {
      const int k_d_fh =
          detail::rate_floor(params.fh_max - k_c * (a1 + a2), a1);
      const int k_d =
          std::min({k_total - k_c, k_d_fh, params.l - 1});
      detail::truncate_distributed(grouping, beta, std::max(k_d, 0));
      if (!check_constraint(grouping.kc(), grouping.kd(), fp, params.fh_max))
        continue;
    } else {
      const int k_d = k_total - k_c;
      if (k_d > params.l - 1) continue;
      if (!opts.fig3_kmax_compat &&
          !check_constraint(k_c, k_d, fp, params.fh_max))
        continue;
    }

    Matrix mu = mu_provider(grouping);
    PowerAllocation alloc = epa(grouping, mu, params);
    SEReport rep;
    bool qos_inf = false;
    std::vector<ScaTraceRow> trace;
    if (opa && opts.full_opa_sweep) {
      ScaResult sca = solve_opa(stats, grouping, mu, params, alloc, opts.sca);
      alloc = sca.alloc;
      rep = sum_se(stats, grouping, mu, alloc, params, fp);
      rep.sca_iterations = sca.iterations;
      qos_inf = sca.qos_infeasible;
      trace = std::move(sca.trace);
    } else {
      rep = sum_se(stats, grouping, mu, alloc, params, fp);
    }

    if (!best.any_candidate || rep.sum_se > best.report.sum_se) {
      best.any_candidate = true;
      best.grouping = std::move(grouping);
      best.alloc = std::move(alloc);
      best.report = std::move(rep);
      best.mu = std::move(mu);
      best.qos_infeasible = qos_inf;
      best.trace = std::move(trace);
    }
  }

  if (best.any_candidate && opa && !opts.full_opa_sweep) {
    PowerAllocation start = epa(best.grouping, best.mu, params);
    ScaResult sca =
        solve_opa(stats, best.grouping, best.mu, params, start, opts.sca);
    best.alloc = sca.alloc;
    best.report = sum_se(stats, best.grouping, best.mu, best.alloc, params, fp);
    best.report.sca_iterations = sca.iterations;
    best.qos_infeasible = sca.qos_infeasible;
    if (sca.qos_infeasible) best.report.feasible = false;
    best.trace = std::move(sca.trace);
  }
  return best;
}

}  // namespace cellfree
