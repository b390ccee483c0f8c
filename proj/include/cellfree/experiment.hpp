#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "cellfree/channel.hpp"
#include "cellfree/config.hpp"
#include "cellfree/parallel.hpp"
#include "cellfree/precoding.hpp"
#include "cellfree/scenario.hpp"
#include "cellfree/sweep.hpp"

namespace cellfree {

struct ResultRow {
  double sweep_value = 0.0;  // Gbps for the fh axis, antennas for the L axis
  int drop_id = 0;
  std::string scheme;
  std::string grouping_method;
  std::string alloc;
  int k_c = 0;
  int k_d = 0;
  double sum_se = 0.0;
  double min_user_se = 0.0;
  bool feasible = false;
  double fh_used_max_ap = 0.0;  // bit/s
  int sca_iters = 0;
  double wall_time_ms = 0.0;
};

struct AggregateRow {
  double sweep_value = 0.0;
  std::string scheme;
  std::string grouping_method;
  std::string alloc;
  double mean_sum_se = 0.0;
  int n_drops = 0;
};

struct ExperimentResult {
  std::vector<ResultRow> rows;        // (point, drop, scheme) order
  std::vector<AggregateRow> aggregate;
  std::string per_drop_csv;
  std::string aggregate_csv;
};

namespace detail {

/// Round-trip-exact double formatting for CSV output.
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// mu is a statistic of the centralized precoder only, so the cache key
// ignores the distributed set.
inline std::string mu_signature(const Grouping& g, int l) {
  std::string sig = "L" + std::to_string(l) + "|c";
  for (int u : g.centralized) sig += ":" + std::to_string(u);
  return sig;
}

/// Per-drop mu cache; groupings repeat across sweep points and schemes.
class MuCache {
 public:
  MuCache(const ChannelStats& stats, int n_draws, std::uint64_t seed)
      : stats_(stats), n_draws_(n_draws), seed_(seed) {}

  Matrix get(const Grouping& grouping, int l) {
    const std::string sig = mu_signature(grouping, l);
    auto it = cache_.find(sig);
    if (it != cache_.end()) return it->second;
    const std::uint64_t s =
        substream_seed(seed_, stream::kMu, std::hash<std::string>{}(sig));
    Matrix mu = estimate_mu(stats_, grouping, l, n_draws_, s);
    cache_.emplace(sig, mu);
    return mu;
  }

 private:
  const ChannelStats& stats_;
  int n_draws_;
  std::uint64_t seed_;
  std::map<std::string, Matrix> cache_;
};

/// Per-drop OPA cache. An SCA solve depends on (grouping, L, objective,
/// QoS) but not on fh_max, so identical groupings across sweep points
/// solve once.
class ScaCache {
 public:
  ScaResult solve(const ChannelStats& stats, const Grouping& grouping,
                  const Matrix& mu, const SystemParams& params,
                  const PowerAllocation& init, const ScaOptions& opts) {
    std::string key = mu_signature(grouping, params.l) + "|d";
    for (int u : grouping.distributed) key += ":" + std::to_string(u);
    key += opts.objective == ObjectiveMode::kPaper9a ? "|9a" : "|gm";
    key += opts.with_qos ? "|q" : "|nq";
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    ScaResult res = solve_sca(stats, grouping, mu, params, init, opts);
    cache_.emplace(key, res);
    return res;
  }

 private:
  std::map<std::string, ScaResult> cache_;
};

}  // namespace detail

/// Evaluates one scheme on one drop at one sweep point. Pure-scheme
/// baselines serve the strongest users that fit the fronthaul budget;
/// the hybrid scheme runs the K_c sweep.
inline ResultRow evaluate_scheme(const SchemeSpec& spec,
                                 const ChannelStats& stats,
                                 const SystemParams& params,
                                 const FronthaulParams& fp,
                                 const ExperimentConfig& cfg, int drop_id,
                                 detail::MuCache& mu_cache,
                                 detail::ScaCache& sca_cache,
                                 std::vector<ScaTraceRow>* trace_out = nullptr) {
  const auto t0 = std::chrono::steady_clock::now();
  ResultRow row;
  row.drop_id = drop_id;
  row.scheme = spec.scheme_name();
  row.grouping_method = spec.method_name();
  row.alloc = spec.alloc_name();

  ScaOptions sca;
  sca.objective = cfg.objective;
  const OpaSolver cached_opa =
      [&sca_cache](const ChannelStats& st, const Grouping& g, const Matrix& mu,
                   const SystemParams& pr, const PowerAllocation& init,
                   const ScaOptions& o) {
        return sca_cache.solve(st, g, mu, pr, init, o);
      };

  Grouping grouping;
  bool candidate = true;
  if (spec.kind == SchemeKind::kHybrid) {
    SweepOptions opts;
    opts.method = spec.method;
    opts.alloc = spec.alloc;
    opts.full_opa_sweep = cfg.full_opa_sweep;
    opts.mode = cfg.mode;
    opts.fig3_kmax_compat = cfg.fig3_kmax_compat;
    opts.seed = substream_seed(cfg.seed, stream::kGrouping, drop_id);
    opts.sca = sca;
    opts.opa_solver = cached_opa;
    auto mu_provider = [&](const Grouping& g) {
      return mu_cache.get(g, params.l);
    };
    SweepResult res = sweep_select(stats, mu_provider, fp, params, opts);
    if (res.any_candidate) {
      row.k_c = res.grouping.kc();
      row.k_d = res.grouping.kd();
      row.sum_se = res.report.sum_se;
      row.min_user_se = res.grouping.served() > 0 ? res.report.min_served_se
                                                  : 0.0;
      row.feasible = res.report.feasible;
      row.fh_used_max_ap = res.report.fh_used.size() > 0
                               ? res.report.fh_used.maxCoeff()
                               : 0.0;
      row.sca_iters = res.report.sca_iterations;
      if (trace_out) *trace_out = res.trace;
    }
  } else {
    // Pure baselines: as many users as the caps admit, taken in index
    // order (drops are i.i.d., so this is an unranked subset). Gain-based
    // selection is a separate grouping heuristic, not part of the
    // baselines.
    const MaxGroupSizes sizes = max_group_sizes(fp, params.fh_max, params.m,
                                                params.k);
    if (spec.kind == SchemeKind::kCentralized) {
      const int k_c = cfg.mode == ServiceMode::kServeAllK
                          ? (check_constraint(params.k, 0, fp, params.fh_max)
                                 ? params.k
                                 : -1)
                          : sizes.k_max_c;
      if (k_c < 0) {
        candidate = false;
      } else {
        for (int u = 0; u < k_c; ++u) grouping.centralized.push_back(u);
      }
    } else {
      const int k_d =
          cfg.mode == ServiceMode::kServeAllK
              ? ((params.k <= params.l - 1 &&
                  check_constraint(0, params.k, fp, params.fh_max))
                     ? params.k
                     : -1)
              : sizes.k_max_d;
      if (k_d < 0) {
        candidate = false;
      } else {
        for (int u = 0; u < k_d; ++u) grouping.distributed.push_back(u);
      }
    }
    if (candidate) {
      Matrix mu = mu_cache.get(grouping, params.l);
      PowerAllocation alloc = epa(grouping, mu, params);
      SEReport rep;
      if (spec.alloc == AllocMode::kOpa && grouping.served() > 0) {
        ScaResult res = cached_opa(stats, grouping, mu, params, alloc, sca);
        alloc = res.alloc;
        rep = sum_se(stats, grouping, mu, alloc, params, fp);
        rep.sca_iterations = res.iterations;
        if (res.qos_infeasible) rep.feasible = false;
        if (trace_out) *trace_out = res.trace;
      } else {
        rep = sum_se(stats, grouping, mu, alloc, params, fp);
      }
      row.k_c = grouping.kc();
      row.k_d = grouping.kd();
      row.sum_se = rep.sum_se;
      row.min_user_se = grouping.served() > 0 ? rep.min_served_se : 0.0;
      row.feasible = rep.feasible;
      row.fh_used_max_ap =
          rep.fh_used.size() > 0 ? rep.fh_used.maxCoeff() : 0.0;
      row.sca_iters = rep.sca_iterations;
    }
  }

  const auto t1 = std::chrono::steady_clock::now();
  row.wall_time_ms =
      std::chrono::duration<double, std::milli>(t1 - t0).count();
  return row;
}

/// Runs the configured experiment: for every sweep point x drop x scheme,
/// builds the scenario and statistics, evaluates the scheme and emits one
/// CSV row; drops run on a worker pool and all randomness is derived from
/// the root seed, so results are independent of the worker count (wall
/// times aside). Writes per_drop.csv and aggregate.csv under out_dir.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                       int n_workers = 0,
                                       bool write_files = true) {
  cfg.validate();
  if (n_workers <= 0) n_workers = worker_count_from_env();

  const int n_points = cfg.axis == SweepAxis::kFhMax
                           ? static_cast<int>(cfg.fh_list.size())
                           : static_cast<int>(cfg.l_list.size());
  const int n_schemes = static_cast<int>(cfg.schemes.size());

  std::vector<std::vector<ResultRow>> per_drop(cfg.n_drops);
  std::vector<std::map<std::string, std::vector<ScaTraceRow>>> traces(
      cfg.n_drops);

  parallel_for(cfg.n_drops, n_workers, [&](int drop) {
    const std::uint64_t scen_seed =
        substream_seed(cfg.seed, stream::kScenario, drop);
    const Scenario scen = generate_drop(cfg.system, scen_seed);
    const ChannelStats base_stats = make_stats(scen);
    detail::MuCache mu_cache(base_stats, cfg.n_mu_draws,
                             substream_seed(cfg.seed, stream::kMu, drop));
    detail::ScaCache sca_cache;

    for (int pt = 0; pt < n_points; ++pt) {
      SystemParams params = cfg.system;
      FronthaulParams fp = cfg.fronthaul;
      double sweep_value = 0.0;
      if (cfg.axis == SweepAxis::kFhMax) {
        params.fh_max = cfg.fh_list[pt];
        sweep_value = cfg.fh_list[pt] / 1e9;
      } else {
        params.l = cfg.l_list[pt];
        fp.l = cfg.l_list[pt];
        params.fh_max = cfg.fh_fixed;
        sweep_value = cfg.l_list[pt];
      }
      for (int s = 0; s < n_schemes; ++s) {
        std::vector<ScaTraceRow> trace;
        ResultRow row = evaluate_scheme(
            cfg.schemes[s], base_stats, params, fp, cfg, drop, mu_cache,
            sca_cache, cfg.dump_sca_trace ? &trace : nullptr);
        row.sweep_value = sweep_value;
        per_drop[drop].push_back(row);
        if (cfg.dump_sca_trace && !trace.empty()) {
          const std::string key = detail::fmt_double(sweep_value) + "_" +
                                  std::to_string(drop) + "_" +
                                  cfg.schemes[s].label();
          traces[drop][key] = std::move(trace);
        }
      }
    }
  });

  // Deterministic (point, drop, scheme) ordering.
  ExperimentResult out;
  for (int pt = 0; pt < n_points; ++pt)
    for (int drop = 0; drop < cfg.n_drops; ++drop)
      for (int s = 0; s < n_schemes; ++s)
        out.rows.push_back(per_drop[drop][pt * n_schemes + s]);

  for (int pt = 0; pt < n_points; ++pt)
    for (int s = 0; s < n_schemes; ++s) {
      AggregateRow agg;
      agg.scheme = cfg.schemes[s].scheme_name();
      agg.grouping_method = cfg.schemes[s].method_name();
      agg.alloc = cfg.schemes[s].alloc_name();
      double sum = 0.0;
      for (int drop = 0; drop < cfg.n_drops; ++drop) {
        const ResultRow& row =
            out.rows[(pt * cfg.n_drops + drop) * n_schemes + s];
        agg.sweep_value = row.sweep_value;
        sum += row.sum_se;
      }
      agg.mean_sum_se = sum / cfg.n_drops;
      agg.n_drops = cfg.n_drops;
      out.aggregate.push_back(agg);
    }

  if (write_files) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    out.per_drop_csv = (fs::path(cfg.out_dir) / "per_drop.csv").string();
    out.aggregate_csv = (fs::path(cfg.out_dir) / "aggregate.csv").string();

    std::ofstream pd(out.per_drop_csv);
    if (!pd)
      throw std::runtime_error("run_experiment: cannot write " +
                               out.per_drop_csv);
    pd << "sweep_value,drop_id,scheme,grouping_method,alloc,K_c,K_d,sum_se,"
          "min_user_se,feasible,fh_used_max_ap,sca_iters,wall_time_ms\n";
    for (const auto& r : out.rows)
      pd << detail::fmt_double(r.sweep_value) << ',' << r.drop_id << ','
         << r.scheme << ',' << r.grouping_method << ',' << r.alloc << ','
         << r.k_c << ',' << r.k_d << ',' << detail::fmt_double(r.sum_se)
         << ',' << detail::fmt_double(r.min_user_se) << ','
         << (r.feasible ? 1 : 0) << ','
         << detail::fmt_double(r.fh_used_max_ap) << ',' << r.sca_iters << ','
         << detail::fmt_double(r.wall_time_ms) << '\n';

    std::ofstream ag(out.aggregate_csv);
    if (!ag)
      throw std::runtime_error("run_experiment: cannot write " +
                               out.aggregate_csv);
    ag << "sweep_value,scheme,grouping_method,alloc,mean_sum_se,n_drops\n";
    for (const auto& r : out.aggregate)
      ag << detail::fmt_double(r.sweep_value) << ',' << r.scheme << ','
         << r.grouping_method << ',' << r.alloc << ','
         << detail::fmt_double(r.mean_sum_se) << ',' << r.n_drops << '\n';

    if (cfg.dump_sca_trace) {
      const fs::path trace_dir = fs::path(cfg.out_dir) / "traces";
      fs::create_directories(trace_dir);
      for (int drop = 0; drop < cfg.n_drops; ++drop)
        for (const auto& [key, trace] : traces[drop]) {
          std::ofstream tf(trace_dir / (key + ".csv"));
          write_trace_csv(tf, trace);
        }
    }
  }
  return out;
}

struct ComplexityRow {
  double sweep_value = 0.0;
  std::string scheme;
  int k_c = 0;
  int k_d = 0;
  double flops_estimate = 0.0;
  double fh_pr = 0.0;  // bit/s
};

/// Operation-count and precoding-fronthaul table: the hybrid rows cover
/// K_c = 0..K_max^c with the matching K_d; the pure schemes use all K users
/// as in the scheme definitions.
inline std::vector<ComplexityRow> complexity_report(
    const ExperimentConfig& cfg) {
  std::vector<ComplexityRow> rows;
  const int n_points = cfg.axis == SweepAxis::kFhMax
                           ? static_cast<int>(cfg.fh_list.size())
                           : static_cast<int>(cfg.l_list.size());
  for (int pt = 0; pt < n_points; ++pt) {
    FronthaulParams fp = cfg.fronthaul;
    double fh = cfg.fh_fixed;
    int l = cfg.system.l;
    double sweep_value;
    if (cfg.axis == SweepAxis::kFhMax) {
      fh = cfg.fh_list[pt];
      sweep_value = fh / 1e9;
    } else {
      l = cfg.l_list[pt];
      fp.l = l;
      sweep_value = l;
    }
    const int k = cfg.system.k;
    const int m = cfg.system.m;
    const double a1 = alpha1(fp);
    const double a2 = alpha2(fp);
    const MaxGroupSizes sizes = max_group_sizes(fp, fh, m, k);

    for (int k_c = 0; k_c <= sizes.k_max_c; ++k_c) {
      const int k_d = std::max(
          0, std::min({k - k_c, detail::rate_floor(fh - k_c * (a1 + a2), a1),
                       l - 1}));
      ComplexityRow row;
      row.sweep_value = sweep_value;
      row.scheme = "hybrid";
      row.k_c = k_c;
      row.k_d = k_d;
      row.flops_estimate = static_cast<double>(m) * l * k_c * k_c +
                           std::pow(k_c, 3) + static_cast<double>(l) * k_d *
                           k_d + std::pow(k_d, 3);
      row.fh_pr = k_c * a2;
      rows.push_back(row);
    }
    rows.push_back(ComplexityRow{sweep_value, "centralized", k, 0,
                                 static_cast<double>(m) * l * k * k +
                                     std::pow(k, 3),
                                 k * a2});
    rows.push_back(ComplexityRow{sweep_value, "distributed", 0, k,
                                 static_cast<double>(l) * k * k +
                                     std::pow(k, 3),
                                 0.0});
  }
  return rows;
}

inline void write_complexity_csv(std::ostream& os,
                                 const std::vector<ComplexityRow>& rows) {
  os << "sweep_value,scheme,K_c,K_d,flops_estimate,fh_pr_gbps\n";
  for (const auto& r : rows)
    os << detail::fmt_double(r.sweep_value) << ',' << r.scheme << ',' << r.k_c
       << ',' << r.k_d << ',' << detail::fmt_double(r.flops_estimate) << ','
       << detail::fmt_double(r.fh_pr / 1e9) << '\n';
}

}  // namespace cellfree
