#pragma once

#include <cmath>
#include <ostream>
#include <vector>

#include "cellfree/core.hpp"
#include "cellfree/qcqp.hpp"
#include "cellfree/se_eval.hpp"

namespace cellfree {

/// Equal power allocation: one coefficient c for every served user, chosen
/// so the most-loaded AP meets its budget with equality:
/// c = rho / max_m(sum_{k in Kc} mu_mk + K_d).
inline PowerAllocation epa(const Grouping& grouping, const Matrix& mu,
                           const SystemParams& params) {
  const int m_count = params.m;
  PowerAllocation alloc =
      PowerAllocation::zeros(m_count, grouping.kc(), grouping.kd());
  if (grouping.served() == 0) return alloc;
  double worst = 0.0;
  for (int m = 0; m < m_count; ++m) {
    double load = grouping.kd();
    for (int i = 0; i < grouping.kc(); ++i) load += mu(m, i);
    worst = std::max(worst, load);
  }
  const double c = params.rho / worst;
  alloc.eta_c.setConstant(c);
  alloc.eta_d.setConstant(c);
  return alloc;
}

/// SINR floor equivalent to the QoS "SE >= S" with SE = prelog*log2(1+SINR).
inline double qos_sinr_floor(double se_target, double prelog) {
  if (se_target <= 0.0) return 0.0;
  return std::exp2(se_target / prelog) - 1.0;
}

enum class ObjectiveMode {
  kGeomean,  // geometric mean of (1+t) over served users (default)
  kPaper9a,  // literal product-sum objective, alternating block ascent
};

/// One SCA iterate: power coefficients plus the slack targets t (the
/// surrogate SINRs, re-tightened to the exact closed-form SINRs after each
/// subproblem solve).
struct ScaState {
  int iter = 0;
  PowerAllocation eta;
  Vector t_c;  // K_c
  Vector t_d;  // K_d
  double objective = 0.0;
};

/// Variable layout of the emitted subproblem.
struct SubproblemLayout {
  int n_c = 0, n_d = 0, m = 0;
  int eta_c0 = 0, eta_d0 = 0, y0 = 0, t_c0 = 0, t_d0 = 0, n = 0;

  static SubproblemLayout make(int m_count, int k_c, int k_d) {
    SubproblemLayout lay;
    lay.n_c = k_c;
    lay.n_d = k_d;
    lay.m = m_count;
    lay.eta_c0 = 0;
    lay.eta_d0 = k_c;
    lay.y0 = lay.eta_d0 + m_count * k_d;
    lay.t_c0 = lay.y0 + m_count * k_d;
    lay.t_d0 = lay.t_c0 + k_c;
    lay.n = lay.t_d0 + k_d;
    return lay;
  }
  int eta_c(int i) const { return eta_c0 + i; }
  int eta_d(int m_, int j) const { return eta_d0 + m_ * n_d + j; }
  int y(int m_, int j) const { return y0 + m_ * n_d + j; }
  int t_c(int i) const { return t_c0 + i; }
  int t_d(int j) const { return t_d0 + j; }
};

/// Which slack block the subproblem objective maximizes. kAll is the
/// geometric-mean objective; kCentralized/kDistributed are the two half
/// steps of the literal product-sum objective, with the other block's
/// slacks held at (or above) their current values.
enum class ObjectiveBlock { kAll, kCentralized, kDistributed };

struct Subproblem {
  ConvexProgram program;
  SubproblemLayout layout;
  Vector x0;
};

/// Emits the convex inner approximation of the power problem around the
/// given state: the centralized SINR constraints as pivot-quadratic rows
/// (squares (t+eta)^2 against linearized (t-eta)^2), the distributed SINR
/// constraints linearized through sqrt lifts y_mk <= sqrt(eta_mk), the
/// per-AP power budget, and the QoS floors on the slacks. Every row is
/// scaled to O(1) at the expansion point.
inline Subproblem build_subproblem(const ScaState& state,
                                   const ChannelStats& stats,
                                   const Grouping& grouping, const Matrix& mu,
                                   const SystemParams& params,
                                   bool with_qos = true,
                                   ObjectiveBlock block = ObjectiveBlock::kAll) {
  const int m_count = params.m;
  const int k_c = grouping.kc();
  const int k_d = grouping.kd();
  const int l = params.l;

  Subproblem sp;
  sp.layout = SubproblemLayout::make(m_count, k_c, k_d);
  const auto& lay = sp.layout;
  ConvexProgram& prog = sp.program;
  prog.n = lay.n;
  prog.lb = Vector::Zero(lay.n);

  const double prelog = params.prelog();
  const double qos_t_c = with_qos ? qos_sinr_floor(params.qos_c, prelog) : 0.0;
  const double qos_t_d = with_qos ? qos_sinr_floor(params.qos_d, prelog) : 0.0;
  for (int i = 0; i < k_c; ++i) prog.lb[lay.t_c(i)] = qos_t_c;
  for (int j = 0; j < k_d; ++j) prog.lb[lay.t_d(j)] = qos_t_d;

  // Block half-steps pin the other block's slacks at their current values.
  if (block == ObjectiveBlock::kCentralized)
    for (int j = 0; j < k_d; ++j)
      prog.lb[lay.t_d(j)] = std::max(prog.lb[lay.t_d(j)], state.t_d[j]);
  if (block == ObjectiveBlock::kDistributed)
    for (int i = 0; i < k_c; ++i)
      prog.lb[lay.t_c(i)] = std::max(prog.lb[lay.t_c(i)], state.t_c[i]);

  if (block != ObjectiveBlock::kDistributed)
    for (int i = 0; i < k_c; ++i) prog.log_vars.push_back(lay.t_c(i));
  if (block != ObjectiveBlock::kCentralized)
    for (int j = 0; j < k_d; ++j) prog.log_vars.push_back(lay.t_d(j));

  // Starting point: the expansion point itself (with y = sqrt(eta)).
  sp.x0 = Vector::Zero(lay.n);
  for (int i = 0; i < k_c; ++i) sp.x0[lay.eta_c(i)] = state.eta.eta_c[i];
  for (int m = 0; m < m_count; ++m)
    for (int j = 0; j < k_d; ++j) {
      sp.x0[lay.eta_d(m, j)] = state.eta.eta_d(m, j);
      sp.x0[lay.y(m, j)] = std::sqrt(std::max(state.eta.eta_d(m, j), 0.0));
    }
  for (int i = 0; i < k_c; ++i) sp.x0[lay.t_c(i)] = state.t_c[i];
  for (int j = 0; j < k_d; ++j) sp.x0[lay.t_d(j)] = state.t_d[j];

  // u_tk = sum_m mu_mt (beta_mk - gamma_mk) for t,k in Kc.
  Matrix u_tk(k_c, k_c);
  for (int t = 0; t < k_c; ++t)
    for (int i = 0; i < k_c; ++i) {
      const int k = grouping.centralized[i];
      double v = 0.0;
      for (int m = 0; m < m_count; ++m)
        v += mu(m, t) * (stats.beta(m, k) - stats.gamma(m, k));
      u_tk(t, i) = v;
    }

  // Centralized SINR surrogates (one pivot-quadratic row per k in Kc).
  for (int i = 0; i < k_c; ++i) {
    const int k = grouping.centralized[i];
    QuadConstraint qc;
    qc.pivot = lay.t_c(i);
    double ub = 0.0;
    double t_lin = 4.0;
    const double tn = state.t_c[i];
    for (int t = 0; t < k_c; ++t) {
      const double u = u_tk(t, i);
      if (u <= 0.0) continue;
      const double su = std::sqrt(u);
      qc.squares.push_back(QuadSquare{su, lay.eta_c(t), su});
      const double vn = tn - state.eta.eta_c[t];
      t_lin += -2.0 * u * vn;
      qc.a.add(lay.eta_c(t), 2.0 * u * vn);
      ub -= u * vn * vn;
    }
    for (int t = 0; t < k_d; ++t) {
      for (int m = 0; m < m_count; ++m) {
        const double b = stats.beta(m, k);
        if (b <= 0.0) continue;
        const double sb = std::sqrt(b);
        qc.squares.push_back(QuadSquare{sb, lay.eta_d(m, t), sb});
        const double zn = tn - state.eta.eta_d(m, t);
        t_lin += -2.0 * b * zn;
        qc.a.add(lay.eta_d(m, t), 2.0 * b * zn);
        ub -= b * zn * zn;
      }
    }
    qc.a.add(lay.t_c(i), t_lin);
    qc.a.add(lay.eta_c(i), -4.0);
    qc.ub = ub;

    // Scale the row to O(1) at the expansion point.
    double quad0 = 0.0;
    for (const auto& sq : qc.squares) {
      const double v = sq.cp * sp.x0[qc.pivot] + sq.cv * sp.x0[sq.var];
      quad0 += v * v;
    }
    const double omega =
        std::max({1.0, std::fabs(qc.ub), quad0, std::fabs(qc.a.dot(sp.x0))});
    const double sw = 1.0 / std::sqrt(omega);
    for (auto& sq : qc.squares) {
      sq.cp *= sw;
      sq.cv *= sw;
    }
    for (auto& [idx, v] : qc.a.terms) v /= omega;
    qc.ub /= omega;
    prog.quad.push_back(std::move(qc));
  }

  // Distributed SINR surrogates (linear after the sqrt lift). Expansion
  // powers are floored so a user driven to (numerically) zero power keeps a
  // usable linearization and can re-enter.
  const double eta_floor = 1e-14 * params.rho;
  for (int j = 0; j < k_d; ++j) {
    const int k = grouping.distributed[j];
    double amp = 0.0;
    for (int m = 0; m < m_count; ++m)
      amp += std::sqrt((l - k_d) *
                       std::max(state.eta.eta_d(m, j), eta_floor) *
                       stats.gamma(m, k));
    const double tn = std::max(state.t_d[j], 1e-12);
    const double q = amp / tn;

    LinearConstraint lc;
    for (int t = 0; t < k_c; ++t) {
      double mu_beta = 0.0;
      for (int m = 0; m < m_count; ++m) mu_beta += mu(m, t) * stats.beta(m, k);
      lc.a.add(lay.eta_c(t), mu_beta);
    }
    for (int t = 0; t < k_d; ++t)
      for (int m = 0; m < m_count; ++m)
        lc.a.add(lay.eta_d(m, t), stats.beta(m, k) - stats.gamma(m, k));
    for (int m = 0; m < m_count; ++m)
      lc.a.add(lay.y(m, j),
               -2.0 * q * std::sqrt((l - k_d) * stats.gamma(m, k)));
    lc.a.add(lay.t_d(j), q * q);
    lc.ub = -1.0;

    const double omega =
        std::max({1.0, std::fabs(lc.ub), std::fabs(lc.a.dot(sp.x0))});
    for (auto& [idx, v] : lc.a.terms) v /= omega;
    lc.ub /= omega;
    prog.lin.push_back(std::move(lc));
  }

  // sqrt lifts y_mj^2 <= eta_mj.
  for (int m = 0; m < m_count; ++m)
    for (int j = 0; j < k_d; ++j) {
      QuadConstraint qc;
      qc.pivot = -1;
      qc.squares.push_back(QuadSquare{0.0, lay.y(m, j), 1.0});
      qc.a.add(lay.eta_d(m, j), -1.0);
      qc.ub = 0.0;
      prog.quad.push_back(std::move(qc));
    }

  // Per-AP power budget.
  for (int m = 0; m < m_count; ++m) {
    LinearConstraint lc;
    for (int i = 0; i < k_c; ++i) lc.a.add(lay.eta_c(i), mu(m, i));
    for (int j = 0; j < k_d; ++j) lc.a.add(lay.eta_d(m, j), 1.0);
    lc.ub = params.rho;
    const double omega = std::max(1.0, params.rho);
    for (auto& [idx, v] : lc.a.terms) v /= omega;
    lc.ub /= omega;
    prog.lin.push_back(std::move(lc));
  }

  return sp;
}

struct ScaTraceRow {
  int iter = 0;
  double objective = 0.0;
  double max_power_violation = 0.0;
};

inline void write_trace_csv(std::ostream& os,
                            const std::vector<ScaTraceRow>& trace) {
  os << "iter,objective,max_power_violation\n";
  for (const auto& row : trace)
    os << row.iter << ',' << row.objective << ',' << row.max_power_violation
       << '\n';
}

struct ScaOptions {
  double rel_tol = 1e-4;
  int max_iters = 100;
  bool with_qos = true;
  bool best_effort_on_infeasible = true;
  ObjectiveMode objective = ObjectiveMode::kGeomean;
  IpmOptions ipm{};
};

struct ScaResult {
  PowerAllocation alloc;
  SEReport report;
  std::vector<ScaTraceRow> trace;
  int iterations = 0;
  bool converged = false;
  bool qos_infeasible = false;  // QoS dropped (or unmet) along the way
};

namespace detail {

inline Vector exact_sinrs_c(const ChannelStats& stats, const Grouping& g,
                            const Matrix& mu, const PowerAllocation& alloc) {
  Vector t(g.kc());
  for (int i = 0; i < g.kc(); ++i)
    t[i] = sinr_centralized(stats, g, mu, alloc, i);
  return t;
}

inline Vector exact_sinrs_d(const ChannelStats& stats, const Grouping& g,
                            const Matrix& mu, const PowerAllocation& alloc,
                            int l) {
  Vector t(g.kd());
  for (int j = 0; j < g.kd(); ++j)
    t[j] = sinr_distributed(stats, g, mu, alloc, j, l);
  return t;
}

inline double exact_sum_se(const Vector& t_c, const Vector& t_d,
                           double prelog) {
  double s = 0.0;
  for (int i = 0; i < t_c.size(); ++i) s += std::log2(1.0 + t_c[i]);
  for (int j = 0; j < t_d.size(); ++j) s += std::log2(1.0 + t_d[j]);
  return prelog * s;
}

inline double paper9a_objective(const Vector& t_c, const Vector& t_d) {
  double pc = 1.0, pd = 1.0;
  for (int i = 0; i < t_c.size(); ++i) pc *= 1.0 + t_c[i];
  for (int j = 0; j < t_d.size(); ++j) pd *= 1.0 + t_d[j];
  return pc + pd;
}

inline double max_power_violation(const Matrix& mu,
                                  const PowerAllocation& alloc,
                                  const SystemParams& params) {
  double v = 0.0;
  for (int m = 0; m < params.m; ++m)
    v = std::max(v, (ap_power(m, mu, alloc) - params.rho) / params.rho);
  return std::max(v, 0.0);
}

/// Largest step theta keeping eta(theta) = base + theta*dir inside the
/// nonnegativity and per-AP power constraints.
inline double max_extrapolation(const PowerAllocation& base,
                                const PowerAllocation& dir, const Matrix& mu,
                                const SystemParams& params) {
  double theta = 64.0;
  auto cap_nonneg = [&](double v, double d) {
    if (d < 0.0) theta = std::min(theta, v / -d);
  };
  for (int i = 0; i < base.eta_c.size(); ++i)
    cap_nonneg(base.eta_c[i], dir.eta_c[i]);
  for (int m = 0; m < base.eta_d.rows(); ++m)
    for (int j = 0; j < base.eta_d.cols(); ++j)
      cap_nonneg(base.eta_d(m, j), dir.eta_d(m, j));
  for (int m = 0; m < params.m; ++m) {
    const double p0 = ap_power(m, mu, base);
    const double dp = ap_power(m, mu, dir);  // linear in the coefficients
    if (dp > 0.0) theta = std::min(theta, (params.rho - p0) / dp);
  }
  return std::max(theta, 0.0);
}

}  // namespace detail

/// SCA driver: starting from a feasible allocation (EPA unless overridden),
/// iterates convex inner approximations until the exact objective change
/// drops below rel_tol or max_iters is hit. The trace records the exact
/// objective at the initial point and after every accepted subproblem
/// solution, so it is non-decreasing up to solver tolerance.
///
/// If the first subproblem is QoS-infeasible the result carries
/// qos_infeasible = true; with best_effort_on_infeasible the optimization
/// reruns without the QoS floors (the report's feasible flag stays false
/// whenever QoS is unmet).
inline ScaResult solve_sca(const ChannelStats& stats, const Grouping& grouping,
                           const Matrix& mu, const SystemParams& params,
                           const PowerAllocation& init,
                           const ScaOptions& opts = {}) {
  ScaResult out;
  if (grouping.served() == 0) {
    out.alloc = PowerAllocation::zeros(params.m, 0, 0);
    out.report = sum_se(stats, grouping, mu, out.alloc, params);
    out.converged = true;
    return out;
  }

  const bool two_blocks = opts.objective == ObjectiveMode::kPaper9a &&
                          grouping.kc() > 0 && grouping.kd() > 0;

  ScaState state;
  state.eta = init;
  state.t_c = detail::exact_sinrs_c(stats, grouping, mu, state.eta);
  state.t_d = detail::exact_sinrs_d(stats, grouping, mu, state.eta, params.l);

  auto objective_of = [&](const ScaState& st) {
    return opts.objective == ObjectiveMode::kPaper9a
               ? detail::paper9a_objective(st.t_c, st.t_d)
               : detail::exact_sum_se(st.t_c, st.t_d, params.prelog());
  };
  state.objective = objective_of(state);
  out.trace.push_back(ScaTraceRow{
      0, state.objective,
      detail::max_power_violation(mu, state.eta, params)});

  bool with_qos = opts.with_qos;
  double prev_cycle_obj = state.objective;
  for (int n = 0; n < opts.max_iters; ++n) {
    ObjectiveBlock block = ObjectiveBlock::kAll;
    if (two_blocks)
      block = (n % 2 == 0) ? ObjectiveBlock::kCentralized
                           : ObjectiveBlock::kDistributed;

    Subproblem sp = build_subproblem(state, stats, grouping, mu, params,
                                     with_qos, block);
    IpmResult sol = solve_ipm(sp.program, sp.x0, opts.ipm);

    if (sol.status == IpmStatus::kInfeasible && n == 0 && with_qos) {
      out.qos_infeasible = true;
      if (!opts.best_effort_on_infeasible) {
        out.alloc = state.eta;
        out.report = sum_se(stats, grouping, mu, out.alloc, params);
        out.report.sca_iterations = out.iterations;
        return out;
      }
      with_qos = false;
      continue;  // retry iteration 0 without the QoS floors
    }
    if (!sol.ok() && sol.status != IpmStatus::kMaxIters) break;

    ScaState next;
    next.iter = n + 1;
    next.eta = PowerAllocation::zeros(params.m, grouping.kc(), grouping.kd());
    for (int i = 0; i < grouping.kc(); ++i)
      next.eta.eta_c[i] = std::max(sol.x[sp.layout.eta_c(i)], 0.0);
    for (int m = 0; m < params.m; ++m)
      for (int j = 0; j < grouping.kd(); ++j)
        next.eta.eta_d(m, j) = std::max(sol.x[sp.layout.eta_d(m, j)], 0.0);
    next.t_c = detail::exact_sinrs_c(stats, grouping, mu, next.eta);
    next.t_d =
        detail::exact_sinrs_d(stats, grouping, mu, next.eta, params.l);
    next.objective = objective_of(next);

    // A near-failed subproblem solve must not degrade the iterate.
    if (sol.status == IpmStatus::kMaxIters &&
        next.objective < state.objective) {
      break;
    }

    // Monotone extrapolation along the accepted step: the exact objective
    // is cheap, so probing doubled steps (within the power polytope and
    // the QoS floors) collapses the linearization's short-step tail.
    {
      PowerAllocation dir = next.eta;
      dir.eta_c -= state.eta.eta_c;
      if (dir.eta_d.size() > 0) dir.eta_d -= state.eta.eta_d;
      const double theta_max =
          detail::max_extrapolation(state.eta, dir, mu, params);
      const double qos_floor_c =
          with_qos ? qos_sinr_floor(params.qos_c, params.prelog()) : 0.0;
      const double qos_floor_d =
          with_qos ? qos_sinr_floor(params.qos_d, params.prelog()) : 0.0;
      for (double theta = 2.0; theta <= theta_max; theta *= 2.0) {
        ScaState probe = next;
        probe.eta.eta_c = state.eta.eta_c + theta * dir.eta_c;
        if (dir.eta_d.size() > 0)
          probe.eta.eta_d = state.eta.eta_d + theta * dir.eta_d;
        probe.t_c = detail::exact_sinrs_c(stats, grouping, mu, probe.eta);
        probe.t_d =
            detail::exact_sinrs_d(stats, grouping, mu, probe.eta, params.l);
        probe.objective = objective_of(probe);
        const bool qos_ok =
            (probe.t_c.size() == 0 ||
             probe.t_c.minCoeff() >= qos_floor_c - 1e-12) &&
            (probe.t_d.size() == 0 ||
             probe.t_d.minCoeff() >= qos_floor_d - 1e-12);
        if (!qos_ok || probe.objective <= next.objective) break;
        next = probe;
      }
    }

    state = next;
    out.iterations = n + 1;
    out.trace.push_back(ScaTraceRow{
        n + 1, state.objective,
        detail::max_power_violation(mu, state.eta, params)});

    const bool cycle_done = !two_blocks || (n % 2 == 1);
    if (cycle_done) {
      if (std::fabs(state.objective - prev_cycle_obj) <=
          opts.rel_tol * std::max(1.0, std::fabs(prev_cycle_obj))) {
        out.converged = true;
        break;
      }
      prev_cycle_obj = state.objective;
    }
  }

  out.alloc = state.eta;
  out.report = sum_se(stats, grouping, mu, out.alloc, params);
  out.report.sca_iterations = out.iterations;
  if (out.qos_infeasible) out.report.feasible = false;
  return out;
}

}  // namespace cellfree
