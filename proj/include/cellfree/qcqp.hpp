#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <utility>
#include <vector>

#include "cellfree/core.hpp"

namespace cellfree {

// Solver-agnostic description of the convex subproblem class emitted by the
// power-allocation module, and a primal-dual interior-point solver for it:
//
//   maximize    sum_{i in log_vars} log(1 + x_i) + obj_linear . x
//   subject to  a . x <= ub                                   (linear)
//               sum_j (cp_j x_pivot + cv_j x_var_j)^2 + a . x <= ub
//               x_i >= lb_i                                   (bounds)
//
// The quadratic rows cover both the rotated-cone surrogates (pivot = slack
// variable, squares paired with power variables) and the sqrt lifts
// y^2 <= eta (no pivot, single square). Any conic solver handling
// second-order cones could consume the same description.

struct SparseVec {
  std::vector<std::pair<int, double>> terms;

  void add(int i, double v) {
    if (v != 0.0) terms.emplace_back(i, v);
  }
  double dot(const Vector& x) const {
    double s = 0.0;
    for (const auto& [i, v] : terms) s += v * x[i];
    return s;
  }
  void axpy(double c, Vector& out) const {
    for (const auto& [i, v] : terms) out[i] += c * v;
  }
  double max_abs() const {
    double s = 0.0;
    for (const auto& [i, v] : terms) s = std::max(s, std::fabs(v));
    return s;
  }
};

struct LinearConstraint {
  SparseVec a;
  double ub = 0.0;
};

struct QuadSquare {
  double cp = 0.0;  // coefficient of the pivot variable inside the square
  int var = -1;
  double cv = 0.0;  // coefficient of var inside the square
};

struct QuadConstraint {
  int pivot = -1;  // -1: every square involves only its own variable
  std::vector<QuadSquare> squares;
  SparseVec a;
  double ub = 0.0;
};

struct ConvexProgram {
  int n = 0;
  Vector lb;                 // finite lower bound per variable
  std::vector<int> log_vars; // maximize sum log(1 + x_i)
  SparseVec obj_linear;
  std::vector<LinearConstraint> lin;
  std::vector<QuadConstraint> quad;
};

enum class IpmStatus { kOptimal, kMaxIters, kInfeasible, kNumerical };

struct IpmOptions {
  double tol_feas = 1e-8;
  double tol_gap = 1e-9;
  int max_iters = 120;
  bool use_structured = true;  // Woodbury path; dense Cholesky otherwise
};

struct IpmResult {
  IpmStatus status = IpmStatus::kNumerical;
  Vector x;
  int iters = 0;
  double gap = 0.0;
  double primal_res = 0.0;
  double dual_res = 0.0;

  bool ok() const { return status == IpmStatus::kOptimal; }
};

class IpmSolver {
 public:
  explicit IpmSolver(const ConvexProgram& prog, IpmOptions opt = {})
      : p_(prog), opt_(opt) {
    n_ = p_.n;
    n_lin_ = static_cast<int>(p_.lin.size());
    n_quad_ = static_cast<int>(p_.quad.size());
    m_ = n_lin_ + n_quad_ + n_;  // bounds appended last
    rows_.assign(n_lin_ + n_quad_, Vector::Zero(n_));
    for (int i = 0; i < n_lin_; ++i) p_.lin[i].a.axpy(1.0, rows_[i]);
  }

  IpmResult solve(const Vector& x0) {
    Vector x = x0;
    for (int j = 0; j < n_; ++j) x[j] = std::max(x[j], p_.lb[j]);
    for (int i : p_.log_vars) x[i] = std::max(x[i], -0.5);

    Vector f(m_), s(m_), lam(m_);
    eval_constraints(x, f);
    for (int i = 0; i < m_; ++i) {
      s[i] = std::max(-f[i], 1e-2);
      lam[i] = std::max(0.1 / s[i], 1e-8);
    }

    IpmResult res;
    res.x = x;
    double best_rp = std::numeric_limits<double>::infinity();
    int stalled = 0;

    for (int iter = 0; iter < opt_.max_iters; ++iter) {
      eval_constraints(x, f);
      update_quad_grads(x);

      // Residuals.
      Vector grad0 = obj_grad(x);
      Vector r_d = grad0;
      add_jt_product(lam, r_d);
      Vector r_p = f + s;
      const double mu = s.dot(lam) / m_;

      const double rp_norm = r_p.lpNorm<Eigen::Infinity>();
      const double rd_norm = r_d.lpNorm<Eigen::Infinity>();
      const double obj_scale = std::max(1.0, grad0.lpNorm<Eigen::Infinity>());
      res.iters = iter;
      res.gap = mu;
      res.primal_res = rp_norm;
      res.dual_res = rd_norm;
      res.x = x;
      if (rp_norm <= opt_.tol_feas && rd_norm <= opt_.tol_feas * obj_scale &&
          mu <= std::max(opt_.tol_gap, opt_.tol_feas * 1e-1)) {
        res.status = IpmStatus::kOptimal;
        return res;
      }

      // Infeasibility heuristic: complementarity collapsed and duals blew
      // up while the primal residual stayed stuck well above tolerance.
      if (rp_norm < best_rp * 0.999) {
        best_rp = rp_norm;
        stalled = 0;
      } else {
        ++stalled;
      }
      if (mu < 1e-10 && rp_norm > 1e3 * opt_.tol_feas && stalled > 10 &&
          lam.lpNorm<Eigen::Infinity>() > 1e8) {
        res.status = IpmStatus::kInfeasible;
        return res;
      }

      if (!factorize(x, lam, s)) {
        res.status = IpmStatus::kNumerical;
        return res;
      }

      // Predictor (affine scaling direction).
      Vector r_c = s.cwiseProduct(lam);
      Vector dx_aff = solve_newton(r_d, r_p, r_c, s, lam);
      Vector ds_aff = -r_p - j_product(dx_aff);
      Vector dl_aff =
          (-r_c - lam.cwiseProduct(ds_aff)).cwiseQuotient(s);
      const double a_aff =
          std::min({1.0, max_step(s, ds_aff), max_step(lam, dl_aff)});
      const double mu_aff = (s + a_aff * ds_aff).dot(lam + a_aff * dl_aff) /
                            m_;
      double sigma = std::pow(std::max(mu_aff, 0.0) / std::max(mu, 1e-300), 3);
      sigma = std::min(std::max(sigma, 1e-4), 0.9);
      // Keep centering alive while the primal residual dominates the gap,
      // otherwise mu collapses and the iteration wedges.
      if (rp_norm > 1e2 * mu) sigma = std::max(sigma, 0.5);

      // Corrector. The quadratic rows are exactly quadratic, so the
      // predictor's curvature q(dx_aff) gives a second-order correction of
      // the primal linearization alongside the usual Mehrotra term.
      r_c = s.cwiseProduct(lam) + ds_aff.cwiseProduct(dl_aff) -
            Vector::Constant(m_, sigma * mu);
      const Vector r_p_soc = r_p + quad_curvature(dx_aff);
      Vector dx = solve_newton(r_d, r_p_soc, r_c, s, lam);
      Vector ds = -r_p_soc - j_product(dx);
      Vector dl = (-r_c - lam.cwiseProduct(ds)).cwiseQuotient(s);

      const double tau = 0.995;
      double alpha_p = std::min({1.0, tau * max_step(s, ds)});
      const double alpha_d = std::min({1.0, tau * max_step(lam, dl)});
      // Keep log terms inside their domain.
      for (int i : p_.log_vars)
        if (dx[i] < 0.0)
          alpha_p = std::min(alpha_p, -tau * (1.0 + x[i]) / dx[i]);

      // Light safeguard against divergent steps on the nonlinear rows. The
      // quadratic rows pick up an O(alpha^2) violation on every step, which
      // the next iteration absorbs; only blow-ups are cut back.
      const double phi0 = r_p.squaredNorm();
      Vector x_new(n_), f_new(m_);
      for (int bt = 0; bt < 6; ++bt) {
        x_new = x + alpha_p * dx;
        eval_constraints(x_new, f_new);
        const double phi = (f_new + s + alpha_p * ds).squaredNorm();
        if ((std::isfinite(phi) && phi < 100.0 * (phi0 + 1.0)) || bt == 5)
          break;
        alpha_p *= 0.5;
      }
      x = x_new;
      s += alpha_p * ds;
      lam += alpha_d * dl;
      for (int i = 0; i < m_; ++i) {
        s[i] = std::max(s[i], 1e-300);
        lam[i] = std::max(lam[i], 1e-300);
      }
    }
    res.x = x;
    res.status = (res.primal_res <= 1e2 * opt_.tol_feas)
                     ? IpmStatus::kMaxIters
                     : IpmStatus::kInfeasible;
    return res;
  }

 private:
  // ---- constraint evaluation -------------------------------------------

  void eval_constraints(const Vector& x, Vector& f) const {
    for (int i = 0; i < n_lin_; ++i)
      f[i] = p_.lin[i].a.dot(x) - p_.lin[i].ub;
    for (int q = 0; q < n_quad_; ++q) {
      const auto& qc = p_.quad[q];
      double v = qc.a.dot(x) - qc.ub;
      const double xp = qc.pivot >= 0 ? x[qc.pivot] : 0.0;
      for (const auto& sq : qc.squares) {
        const double t = sq.cp * xp + sq.cv * x[sq.var];
        v += t * t;
      }
      f[n_lin_ + q] = v;
    }
    for (int j = 0; j < n_; ++j)
      f[n_lin_ + n_quad_ + j] = p_.lb[j] - x[j];
  }

  void update_quad_grads(const Vector& x) {
    for (int q = 0; q < n_quad_; ++q) {
      const auto& qc = p_.quad[q];
      Vector& g = rows_[n_lin_ + q];
      g.setZero();
      qc.a.axpy(1.0, g);
      const double xp = qc.pivot >= 0 ? x[qc.pivot] : 0.0;
      for (const auto& sq : qc.squares) {
        const double t = 2.0 * (sq.cp * xp + sq.cv * x[sq.var]);
        if (qc.pivot >= 0) g[qc.pivot] += t * sq.cp;
        g[sq.var] += t * sq.cv;
      }
    }
  }

  Vector obj_grad(const Vector& x) const {
    Vector g = Vector::Zero(n_);
    for (int i : p_.log_vars) g[i] = -1.0 / (1.0 + x[i]);
    p_.obj_linear.axpy(-1.0, g);
    return g;
  }

  // J^T w over all constraints (bounds included).
  void add_jt_product(const Vector& w, Vector& out) const {
    for (int i = 0; i < n_lin_ + n_quad_; ++i) out += w[i] * rows_[i];
    for (int j = 0; j < n_; ++j) out[j] -= w[n_lin_ + n_quad_ + j];
  }

  Vector j_product(const Vector& dx) const {
    Vector out(m_);
    for (int i = 0; i < n_lin_ + n_quad_; ++i) out[i] = rows_[i].dot(dx);
    for (int j = 0; j < n_; ++j) out[n_lin_ + n_quad_ + j] = -dx[j];
    return out;
  }

  static double max_step(const Vector& v, const Vector& dv) {
    double a = 1e30;
    for (int i = 0; i < v.size(); ++i)
      if (dv[i] < 0.0) a = std::min(a, -v[i] / dv[i]);
    return a;
  }

  // Exact curvature of the quadratic rows along a step direction.
  Vector quad_curvature(const Vector& d) const {
    Vector q = Vector::Zero(m_);
    for (int i = 0; i < n_quad_; ++i) {
      const auto& qc = p_.quad[i];
      const double dp = qc.pivot >= 0 ? d[qc.pivot] : 0.0;
      double v = 0.0;
      for (const auto& sq : qc.squares) {
        const double e = sq.cp * dp + sq.cv * d[sq.var];
        v += e * e;
      }
      q[n_lin_ + i] = v;
    }
    return q;
  }

  // ---- Newton system ----------------------------------------------------
  //
  // M dx = -r_d + J^T ((r_c - lam .* r_p) ./ s),
  // M = H_obj + sum_i lam_i Hess f_i + J^T diag(lam ./ s) J.
  //
  // Structured path: M = B + U C U^T with B = diagonal plus disjoint 2x2
  // blocks (bounds, small-support rows, quadratic diagonals) and U holding
  // the few dense gradient rows and pivot rank-2 couplings.

  bool factorize(const Vector& x, const Vector& lam, const Vector& s) {
    structured_ok_ = false;
    base_diag_ = Vector::Zero(n_);
    for (int i : p_.log_vars)
      base_diag_[i] += 1.0 / ((1.0 + x[i]) * (1.0 + x[i]));
    base_diag_.array() += 1e-13;
    for (int j = 0; j < n_; ++j)
      base_diag_[j] += lam[n_lin_ + n_quad_ + j] / s[n_lin_ + n_quad_ + j];

    // Quadratic-constraint Hessians: diagonal pieces into the base, the
    // pivot coupling as a scaled rank-2 update.
    pair_partner_.assign(n_, -1);
    blocks_.clear();
    block_of_.clear();
    u_cols_.clear();
    core_.clear();
    for (int q = 0; q < n_quad_; ++q) {
      const auto& qc = p_.quad[q];
      const double l_q = lam[n_lin_ + q];
      double cpp = 0.0;
      Vector a_vec;  // lazily allocated pivot coupling column
      for (const auto& sq : qc.squares) {
        base_diag_[sq.var] += l_q * 2.0 * sq.cv * sq.cv;
        if (qc.pivot >= 0 && sq.cp != 0.0) {
          cpp += 2.0 * sq.cp * sq.cp;
          if (a_vec.size() == 0) a_vec = Vector::Zero(n_);
          a_vec[sq.var] += 2.0 * sq.cp * sq.cv;
        }
      }
      if (qc.pivot >= 0) {
        base_diag_[qc.pivot] += l_q * cpp;
        if (a_vec.size() != 0) {
          // Balance the two columns of the rank-2 factor so the
          // capacitance matrix stays well conditioned.
          const double sl = std::sqrt(l_q);
          const double bal = std::sqrt(std::max(a_vec.norm(), 1e-150));
          Vector ep = Vector::Zero(n_);
          ep[qc.pivot] = sl * bal;
          u_cols_.push_back(std::move(ep));
          u_cols_.push_back((sl / bal) * a_vec);
          core_.push_back(CoreBlock{true});
        }
      }
    }

    // Gradient outer products d_i g g^T: tiny support goes into the base,
    // everything else becomes a rank-1 column sqrt(d_i) g.
    for (int i = 0; i < n_lin_ + n_quad_; ++i) {
      const double d = lam[i] / s[i];
      const Vector& g = rows_[i];
      int nz = 0, i0 = -1, i1 = -1;
      for (int j = 0; j < n_; ++j)
        if (g[j] != 0.0) {
          if (nz == 0)
            i0 = j;
          else if (nz == 1)
            i1 = j;
          ++nz;
          if (nz > 2) break;
        }
      if (nz == 0) continue;
      if (nz == 1) {
        base_diag_[i0] += d * g[i0] * g[i0];
        continue;
      }
      if (nz == 2 && try_block(i0, i1, d, g)) continue;
      u_cols_.push_back(std::sqrt(d) * g);
      core_.push_back(CoreBlock{false});
    }

    const int r = static_cast<int>(u_cols_.size());
    const bool want_structured = opt_.use_structured && n_ >= 120 && r < n_ / 2;
    if (want_structured) {
      u_mat_.resize(n_, r);
      for (int c = 0; c < r; ++c) u_mat_.col(c) = u_cols_[c];
      if (r == 0) {
        structured_ok_ = true;
      } else {
        // S = C^-1 + U^T B^-1 U. The cores are self-inverse ([[0,1],[1,0]]
        // and [1]), so C^-1 is assembled directly.
        Matrix binv_u(n_, r);
        for (int c = 0; c < r; ++c) binv_u.col(c) = base_solve(u_mat_.col(c));
        Matrix cap = u_mat_.transpose() * binv_u;
        int c = 0;
        for (const auto& blk : core_) {
          if (blk.rank2) {
            cap(c, c + 1) += 1.0;
            cap(c + 1, c) += 1.0;
            c += 2;
          } else {
            cap(c, c) += 1.0;
            c += 1;
          }
        }
        cap_lu_.compute(cap);
        binv_u_ = std::move(binv_u);
        structured_ok_ = cap_lu_.rcond() > 1e-14;
      }
    }
    if (structured_ok_) {
      dense_ok_ = false;  // built lazily if the structured solve degrades
      return true;
    }
    return build_dense();
  }

  // Assembles M explicitly and factors it.
  bool build_dense() const {
    Matrix m_mat = Matrix::Zero(n_, n_);
    m_mat.diagonal() = base_diag_;
    for (const auto& blk : blocks_) {
      m_mat(blk.i, blk.j) += blk.bij;
      m_mat(blk.j, blk.i) += blk.bij;
    }
    {
      int c = 0;
      for (const auto& blk : core_) {
        if (blk.rank2) {
          m_mat += u_cols_[c] * u_cols_[c + 1].transpose() +
                   u_cols_[c + 1] * u_cols_[c].transpose();
          c += 2;
        } else {
          m_mat += u_cols_[c] * u_cols_[c].transpose();
          c += 1;
        }
      }
    }
    dense_llt_.compute(m_mat);
    if (dense_llt_.info() != Eigen::Success) {
      m_mat.diagonal().array() += 1e-9 * (1.0 + base_diag_.maxCoeff());
      dense_llt_.compute(m_mat);
      if (dense_llt_.info() != Eigen::Success) return false;
    }
    dense_ok_ = true;
    return true;
  }

  // Accumulates a 2-support outer product into a disjoint 2x2 block if the
  // pairing allows it.
  bool try_block(int i0, int i1, double d, const Vector& g) {
    const std::pair<int, int> key{std::min(i0, i1), std::max(i0, i1)};
    if (pair_partner_[i0] == -1 && pair_partner_[i1] == -1) {
      pair_partner_[i0] = i1;
      pair_partner_[i1] = i0;
      block_of_[key] = static_cast<int>(blocks_.size());
      blocks_.push_back(Block{key.first, key.second, 0.0});
    } else if (pair_partner_[i0] != i1 || pair_partner_[i1] != i0) {
      return false;
    }
    auto& blk = blocks_[block_of_[key]];
    base_diag_[i0] += d * g[i0] * g[i0];
    base_diag_[i1] += d * g[i1] * g[i1];
    blk.bij += d * g[i0] * g[i1];
    return true;
  }

  Vector base_solve(const Vector& r) const {
    Vector out = r.cwiseQuotient(base_diag_);
    for (const auto& blk : blocks_) {
      const double a = base_diag_[blk.i];
      const double b = blk.bij;
      const double c = base_diag_[blk.j];
      const double det = a * c - b * b;
      out[blk.i] = (c * r[blk.i] - b * r[blk.j]) / det;
      out[blk.j] = (a * r[blk.j] - b * r[blk.i]) / det;
    }
    return out;
  }

  Vector m_apply(const Vector& v) const {
    Vector out = base_diag_.cwiseProduct(v);
    for (const auto& blk : blocks_) {
      out[blk.i] += blk.bij * v[blk.j];
      out[blk.j] += blk.bij * v[blk.i];
    }
    int c = 0;
    for (const auto& blk : core_) {
      if (blk.rank2) {
        out += u_cols_[c] * u_cols_[c + 1].dot(v) +
               u_cols_[c + 1] * u_cols_[c].dot(v);
        c += 2;
      } else {
        out += u_cols_[c] * u_cols_[c].dot(v);
        c += 1;
      }
    }
    return out;
  }

  Vector solve_m(const Vector& rhs) const {
    if (structured_ok_) {
      auto woodbury = [&](const Vector& r) {
        Vector v = base_solve(r);
        if (u_mat_.cols() > 0)
          v -= binv_u_ * cap_lu_.solve(u_mat_.transpose() * v);
        return v;
      };
      Vector dx = woodbury(rhs);
      // Iterative refinement against the exact operator; if the direction
      // stays inexact the iteration falls back to the dense factorization.
      const double rhs_scale = 1.0 + rhs.lpNorm<Eigen::Infinity>();
      double rel = 0.0;
      for (int pass = 0; pass < 3; ++pass) {
        const Vector r = rhs - m_apply(dx);
        rel = r.lpNorm<Eigen::Infinity>() / rhs_scale;
        if (rel <= 1e-13) break;
        dx += woodbury(r);
      }
      if (rel <= 1e-9) return dx;
      structured_ok_ = false;
    }
    if (!dense_ok_ && !build_dense()) return Vector::Zero(n_);
    return dense_llt_.solve(rhs);
  }

  Vector solve_newton(const Vector& r_d, const Vector& r_p, const Vector& r_c,
                      const Vector& s, const Vector& lam) const {
    Vector w = (r_c - lam.cwiseProduct(r_p)).cwiseQuotient(s);
    Vector rhs = -r_d;
    add_jt_product(w, rhs);
    return solve_m(rhs);
  }

  struct Block {
    int i = 0, j = 0;
    double bij = 0.0;
  };
  struct CoreBlock {
    bool rank2 = false;
  };

  ConvexProgram p_;
  IpmOptions opt_;
  int n_ = 0, m_ = 0, n_lin_ = 0, n_quad_ = 0;
  std::vector<Vector> rows_;  // gradients of lin+quad constraints

  Vector base_diag_;
  std::vector<int> pair_partner_;
  std::vector<Block> blocks_;
  std::map<std::pair<int, int>, int> block_of_;
  std::vector<Vector> u_cols_;
  std::vector<CoreBlock> core_;
  Matrix u_mat_, binv_u_;
  Eigen::PartialPivLU<Matrix> cap_lu_;
  mutable Eigen::LLT<Matrix> dense_llt_;
  mutable bool structured_ok_ = false;
  mutable bool dense_ok_ = false;
};

inline IpmResult solve_ipm(const ConvexProgram& prog, const Vector& x0,
                           const IpmOptions& opt = {}) {
  IpmSolver solver(prog, opt);
  return solver.solve(x0);
}

}  // namespace cellfree
