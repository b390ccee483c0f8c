#pragma once

#include <optional>

#include "cellfree/channel.hpp"
#include "cellfree/core.hpp"
#include "cellfree/fronthaul.hpp"
#include "cellfree/grouping.hpp"
#include "cellfree/scenario.hpp"

namespace cellfree {

/// Downlink power-control coefficients. eta_c[i] belongs to the i-th user
/// of grouping.centralized (AP-independent by design); eta_d(m, j) belongs
/// to AP m and the j-th user of grouping.distributed.
struct PowerAllocation {
  Vector eta_c;  // K_c
  Matrix eta_d;  // M x K_d

  static PowerAllocation zeros(int m, int k_c, int k_d) {
    return PowerAllocation{Vector::Zero(k_c), Matrix::Zero(m, k_d)};
  }
};

/// Expected transmit power at AP m: sum_{k in Kc} eta_k mu_mk +
/// sum_{k in Kd} eta_mk.
inline double ap_power(int m, const Matrix& mu, const PowerAllocation& alloc) {
  double p = 0.0;
  for (int i = 0; i < alloc.eta_c.size(); ++i) p += alloc.eta_c[i] * mu(m, i);
  if (alloc.eta_d.cols() > 0) p += alloc.eta_d.row(m).sum();
  return p;
}

/// Closed-form SINR of the i-th centralized user (index into
/// grouping.centralized), from large-scale statistics only.
inline double sinr_centralized(const ChannelStats& stats,
                               const Grouping& grouping, const Matrix& mu,
                               const PowerAllocation& alloc, int i) {
  const int m_count = static_cast<int>(stats.beta.rows());
  const int k = grouping.centralized[i];
  double den = 1.0;
  for (int t = 0; t < grouping.kc(); ++t) {
    double u_tk = 0.0;
    for (int m = 0; m < m_count; ++m)
      u_tk += mu(m, t) * (stats.beta(m, k) - stats.gamma(m, k));
    den += alloc.eta_c[t] * u_tk;
  }
  for (int t = 0; t < grouping.kd(); ++t)
    for (int m = 0; m < m_count; ++m)
      den += alloc.eta_d(m, t) * stats.beta(m, k);
  return alloc.eta_c[i] / den;
}

/// Closed-form SINR of the j-th distributed user (index into
/// grouping.distributed). Requires L > K_d. The estimation-error sum over
/// distributed users includes the user's own term.
inline double sinr_distributed(const ChannelStats& stats,
                               const Grouping& grouping, const Matrix& mu,
                               const PowerAllocation& alloc, int j, int l) {
  const int m_count = static_cast<int>(stats.beta.rows());
  const int k_d = grouping.kd();
  if (l <= k_d)
    throw std::domain_error("sinr_distributed: requires L > K_d");
  const int k = grouping.distributed[j];

  double amp = 0.0;
  for (int m = 0; m < m_count; ++m)
    amp += std::sqrt(alloc.eta_d(m, j) * stats.gamma(m, k));
  const double num = (l - k_d) * amp * amp;

  double den = 1.0;
  for (int t = 0; t < grouping.kc(); ++t) {
    double mu_beta = 0.0;
    for (int m = 0; m < m_count; ++m) mu_beta += mu(m, t) * stats.beta(m, k);
    den += alloc.eta_c[t] * mu_beta;
  }
  for (int t = 0; t < k_d; ++t)
    for (int m = 0; m < m_count; ++m)
      den += alloc.eta_d(m, t) * (stats.beta(m, k) - stats.gamma(m, k));
  return num / den;
}

/// Per-drop evaluation summary. sinr/se are indexed by user id (0 for users
/// not served by the grouping).
struct SEReport {
  Vector sinr;      // K, linear
  Vector se;        // K, bit/s/Hz
  double sum_se = 0.0;
  double prelog = 0.0;
  bool feasible = false;
  Vector fh_used;   // M, bit/s
  bool qos_met = false;
  bool power_ok = false;
  bool fh_ok = false;
  double min_served_se = 0.0;
  int sca_iterations = 0;

  static constexpr double kPowerSlack = 1e-8;   // relative, Eq.-style budget
  static constexpr double kQosSlack = 1e-6;     // absolute, bit/s/Hz
};

/// Assembles the SEReport for a grouping and allocation. The feasible flag
/// requires per-user QoS, the per-AP power budget, and (when fronthaul
/// parameters are given) the fronthaul constraint.
inline SEReport sum_se(const ChannelStats& stats, const Grouping& grouping,
                       const Matrix& mu, const PowerAllocation& alloc,
                       const SystemParams& params,
                       const std::optional<FronthaulParams>& fp = std::nullopt) {
  const int m_count = static_cast<int>(stats.beta.rows());
  SEReport rep;
  rep.prelog = params.prelog();
  rep.sinr = Vector::Zero(params.k);
  rep.se = Vector::Zero(params.k);
  rep.fh_used = Vector::Zero(m_count);

  rep.qos_met = true;
  rep.min_served_se = grouping.served() > 0
                          ? std::numeric_limits<double>::infinity()
                          : 0.0;
  for (int i = 0; i < grouping.kc(); ++i) {
    const int k = grouping.centralized[i];
    rep.sinr[k] = sinr_centralized(stats, grouping, mu, alloc, i);
    rep.se[k] = rep.prelog * std::log2(1.0 + rep.sinr[k]);
    rep.min_served_se = std::min(rep.min_served_se, rep.se[k]);
    if (rep.se[k] < params.qos_c - SEReport::kQosSlack) rep.qos_met = false;
  }
  for (int j = 0; j < grouping.kd(); ++j) {
    const int k = grouping.distributed[j];
    rep.sinr[k] = sinr_distributed(stats, grouping, mu, alloc, j, params.l);
    rep.se[k] = rep.prelog * std::log2(1.0 + rep.sinr[k]);
    rep.min_served_se = std::min(rep.min_served_se, rep.se[k]);
    if (rep.se[k] < params.qos_d - SEReport::kQosSlack) rep.qos_met = false;
  }
  rep.sum_se = rep.se.sum();

  rep.power_ok = true;
  for (int m = 0; m < m_count; ++m)
    if (ap_power(m, mu, alloc) >
        params.rho * (1.0 + SEReport::kPowerSlack))
      rep.power_ok = false;

  rep.fh_ok = true;
  if (fp) {
    const double used = fronthaul_used(grouping.kc(), grouping.kd(), *fp);
    rep.fh_used.setConstant(used);
    rep.fh_ok = check_constraint(grouping.kc(), grouping.kd(), *fp,
                                 params.fh_max);
  }
  rep.feasible = rep.qos_met && rep.power_ok && rep.fh_ok;
  return rep;
}

}  // namespace cellfree
