#pragma once

// Dense two-phase revised simplex with shadow-price duals.
//
// Dual convention: dual[i] = d(objective)/d(rhs[i]) at the final basis, in the
// caller's sense. So "min -x s.t. x <= 3" reports dual -1.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "hcopt/error.hpp"

namespace hcopt {

enum class Sense { Minimize, Maximize };
enum class RowType { LessEqual, Equal, GreaterEqual };
enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

inline std::string to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
    case LpStatus::IterationLimit: return "iteration_limit";
  }
  return "?";
}

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct LpProblem {
  Sense sense = Sense::Minimize;
  std::vector<double> cost;
  std::vector<double> matrix;  // row-major, rows x cost.size()
  std::vector<RowType> types;
  std::vector<double> rhs;
  std::vector<double> lower;  // empty: all 0
  std::vector<double> upper;  // empty: all +inf

  LpProblem() = default;
  LpProblem(Sense s, std::vector<double> c) : sense(s), cost(std::move(c)) {}

  std::size_t num_vars() const { return cost.size(); }
  std::size_t num_rows() const { return rhs.size(); }
  double coef(std::size_t i, std::size_t j) const { return matrix[i * num_vars() + j]; }
  double lower_bound(std::size_t j) const { return lower.empty() ? 0.0 : lower[j]; }
  double upper_bound(std::size_t j) const { return upper.empty() ? kInf : upper[j]; }

  std::size_t add_row(std::span<const double> a, RowType t, double b) {
    if (a.size() != num_vars()) throw DimensionError("LP row length does not match the number of variables");
    matrix.insert(matrix.end(), a.begin(), a.end());
    types.push_back(t);
    rhs.push_back(b);
    return rhs.size() - 1;
  }

  void set_bounds(std::size_t j, double lo, double hi) {
    if (lower.empty()) lower.assign(num_vars(), 0.0);
    if (upper.empty()) upper.assign(num_vars(), kInf);
    lower[j] = lo;
    upper[j] = hi;
  }

  void validate() const {
    if (matrix.size() != num_rows() * num_vars() || types.size() != num_rows())
      throw DimensionError("LP matrix, row types and rhs have inconsistent sizes");
    if (!lower.empty() && lower.size() != num_vars()) throw DimensionError("LP lower bounds have the wrong length");
    if (!upper.empty() && upper.size() != num_vars()) throw DimensionError("LP upper bounds have the wrong length");
    for (double b : rhs)
      if (!std::isfinite(b)) throw ArgumentError("LP right-hand sides must be finite");
    for (double c : cost)
      if (!std::isfinite(c)) throw ArgumentError("LP costs must be finite");
    for (double a : matrix)
      if (!std::isfinite(a)) throw ArgumentError("LP coefficients must be finite");
    for (std::size_t j = 0; j < num_vars(); ++j) {
      const double lo = lower_bound(j), hi = upper_bound(j);
      if (std::isnan(lo) || std::isnan(hi) || lo == kInf || hi == -kInf || lo > hi)
        throw ArgumentError("LP variable bounds are inconsistent");
    }
  }
};

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  std::vector<double> primal;
  std::vector<double> dual;
  double objective = std::numeric_limits<double>::quiet_NaN();
  std::size_t iterations = 0;
  bool bland_used = false;

  bool optimal() const { return status == LpStatus::Optimal; }
};

struct LpOptions {
  double pivot_tol = 1e-9;
  double feasibility_tol = 1e-7;
  double optimality_tol = 1e-9;
  bool bland_only = false;
  std::size_t refactor_every = 64;
};

namespace lp_detail {

class Simplex {
 public:
  Simplex(const LpProblem& p, const LpOptions& opt) : p_(p), opt_(opt) { build(); }

  LpSolution solve() {
    LpSolution sol;
    const std::size_t limit = 100 * (m_ + ncol_) + 1000;
    iter_limit_ = limit;
    if (num_art_ > 0) {
      phase_cost_.assign(ncol_, 0.0);
      for (std::size_t j = first_art_; j < ncol_; ++j) phase_cost_[j] = 1.0;
      const LpStatus s1 = iterate(/*allow_art=*/true);
      if (s1 == LpStatus::IterationLimit) return finish_status(sol, s1);
      double infeas = 0.0;
      for (std::size_t r = 0; r < m_; ++r)
        if (basis_[r] >= first_art_) infeas += std::max(0.0, xb_[r]);
      if (infeas > opt_.feasibility_tol * std::max(1.0, bmax_)) return finish_status(sol, LpStatus::Infeasible);
      drive_out_artificials();
    }
    phase_cost_ = cost_;
    const LpStatus s2 = iterate(/*allow_art=*/false);
    if (s2 != LpStatus::Optimal) return finish_status(sol, s2);
    refactor();
    extract(sol);
    return sol;
  }

 private:
  const LpProblem& p_;
  LpOptions opt_;
  std::size_t n_ = 0, m_ = 0, ncol_ = 0, first_art_ = 0, num_art_ = 0;
  // internal column j of original var: kind 0 shift (x = l + s), 1 mirror (x = u - s), 2 free (x = s+ - s-)
  std::vector<int> var_kind_;
  std::vector<std::size_t> var_col_;
  std::vector<double> cols_;   // column-major m_ x ncol_
  std::vector<double> b_;
  std::vector<double> cost_;   // minimization costs of internal columns
  std::vector<double> phase_cost_;
  std::vector<double> row_sign_;  // +1 / -1 applied to user rows
  std::vector<std::size_t> basis_;
  std::vector<char> is_basic_;
  std::vector<double> binv_;   // row-major m_ x m_
  std::vector<double> xb_;
  std::vector<double> y_, d_, alpha_;
  double obj_shift_ = 0.0;
  double bmax_ = 0.0;
  std::size_t iters_ = 0, iter_limit_ = 0, degenerate_ = 0, since_refactor_ = 0;
  bool bland_ = false;

  double* col(std::size_t j) { return cols_.data() + j * m_; }
  const double* col(std::size_t j) const { return cols_.data() + j * m_; }

  void build() {
    p_.validate();
    n_ = p_.num_vars();
    const double sgn = p_.sense == Sense::Maximize ? -1.0 : 1.0;
    // structural columns
    std::size_t nstruct = 0;
    var_kind_.resize(n_);
    var_col_.resize(n_);
    std::size_t bound_rows = 0;
    for (std::size_t j = 0; j < n_; ++j) {
      const double lo = p_.lower_bound(j), hi = p_.upper_bound(j);
      var_col_[j] = nstruct;
      if (std::isfinite(lo)) {
        var_kind_[j] = 0;
        nstruct += 1;
        if (std::isfinite(hi)) ++bound_rows;
      } else if (std::isfinite(hi)) {
        var_kind_[j] = 1;
        nstruct += 1;
      } else {
        var_kind_[j] = 2;
        nstruct += 2;
      }
    }
    const std::size_t mu = p_.num_rows();
    m_ = mu + bound_rows;

    // dense internal rows before slacks: m_ x nstruct (row-major scratch)
    std::vector<double> a(m_ * nstruct, 0.0);
    std::vector<RowType> t(m_);
    b_.assign(m_, 0.0);
    for (std::size_t i = 0; i < mu; ++i) {
      double rhs = p_.rhs[i];
      for (std::size_t j = 0; j < n_; ++j) {
        const double v = p_.coef(i, j);
        if (v == 0.0) continue;
        const std::size_t c = var_col_[j];
        switch (var_kind_[j]) {
          case 0: a[i * nstruct + c] = v; rhs -= v * p_.lower_bound(j); break;
          case 1: a[i * nstruct + c] = -v; rhs -= v * p_.upper_bound(j); break;
          default: a[i * nstruct + c] = v; a[i * nstruct + c + 1] = -v; break;
        }
      }
      b_[i] = rhs;
      t[i] = p_.types[i];
    }
    std::size_t r = mu;
    for (std::size_t j = 0; j < n_; ++j) {
      if (var_kind_[j] != 0 || !std::isfinite(p_.upper_bound(j))) continue;
      a[r * nstruct + var_col_[j]] = 1.0;
      b_[r] = p_.upper_bound(j) - p_.lower_bound(j);
      t[r] = RowType::LessEqual;
      ++r;
    }
    row_sign_.assign(m_, 1.0);
    for (std::size_t i = 0; i < m_; ++i) {
      if (b_[i] < 0.0) {
        row_sign_[i] = -1.0;
        b_[i] = -b_[i];
        for (std::size_t c = 0; c < nstruct; ++c) a[i * nstruct + c] = -a[i * nstruct + c];
        if (t[i] == RowType::LessEqual)
          t[i] = RowType::GreaterEqual;
        else if (t[i] == RowType::GreaterEqual)
          t[i] = RowType::LessEqual;
      }
      bmax_ = std::max(bmax_, b_[i]);
    }
    std::size_t nslack = 0;
    for (auto tt : t)
      if (tt != RowType::Equal) ++nslack;
    num_art_ = 0;
    for (auto tt : t)
      if (tt != RowType::LessEqual) ++num_art_;
    first_art_ = nstruct + nslack;
    ncol_ = first_art_ + num_art_;
    cols_.assign(m_ * ncol_, 0.0);
    for (std::size_t i = 0; i < m_; ++i)
      for (std::size_t c = 0; c < nstruct; ++c) col(c)[i] = a[i * nstruct + c];
    cost_.assign(ncol_, 0.0);
    for (std::size_t j = 0; j < n_; ++j) {
      const double cj = sgn * p_.cost[j];
      const std::size_t c = var_col_[j];
      switch (var_kind_[j]) {
        case 0: cost_[c] = cj; obj_shift_ += cj * p_.lower_bound(j); break;
        case 1: cost_[c] = -cj; obj_shift_ += cj * p_.upper_bound(j); break;
        default: cost_[c] = cj; cost_[c + 1] = -cj; break;
      }
    }
    basis_.assign(m_, 0);
    is_basic_.assign(ncol_, 0);
    std::size_t s = nstruct, art = first_art_;
    for (std::size_t i = 0; i < m_; ++i) {
      if (t[i] == RowType::LessEqual) {
        col(s)[i] = 1.0;
        basis_[i] = s++;
      } else {
        if (t[i] == RowType::GreaterEqual) col(s++)[i] = -1.0;
        col(art)[i] = 1.0;
        basis_[i] = art++;
      }
      is_basic_[basis_[i]] = 1;
    }
    binv_.assign(m_ * m_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) binv_[i * m_ + i] = 1.0;
    xb_ = b_;
    y_.assign(m_, 0.0);
    d_.assign(ncol_, 0.0);
    alpha_.assign(m_, 0.0);
  }

  void refactor() {
    // Gauss-Jordan inverse of B with partial pivoting.
    std::vector<double> bm(m_ * m_), inv(m_ * m_, 0.0);
    for (std::size_t r = 0; r < m_; ++r) {
      const double* c = col(basis_[r]);
      for (std::size_t i = 0; i < m_; ++i) bm[i * m_ + r] = c[i];
      inv[r * m_ + r] = 1.0;
    }
    for (std::size_t k = 0; k < m_; ++k) {
      std::size_t piv = k;
      for (std::size_t i = k + 1; i < m_; ++i)
        if (std::abs(bm[i * m_ + k]) > std::abs(bm[piv * m_ + k])) piv = i;
      if (std::abs(bm[piv * m_ + k]) < 1e-13) throw InternalError("simplex basis became singular");
      if (piv != k)
        for (std::size_t c = 0; c < m_; ++c) {
          std::swap(bm[k * m_ + c], bm[piv * m_ + c]);
          std::swap(inv[k * m_ + c], inv[piv * m_ + c]);
        }
      const double pv = 1.0 / bm[k * m_ + k];
      for (std::size_t c = 0; c < m_; ++c) {
        bm[k * m_ + c] *= pv;
        inv[k * m_ + c] *= pv;
      }
      for (std::size_t i = 0; i < m_; ++i) {
        if (i == k) continue;
        const double f = bm[i * m_ + k];
        if (f == 0.0) continue;
        for (std::size_t c = 0; c < m_; ++c) {
          bm[i * m_ + c] -= f * bm[k * m_ + c];
          inv[i * m_ + c] -= f * inv[k * m_ + c];
        }
      }
    }
    binv_.swap(inv);
    for (std::size_t r = 0; r < m_; ++r) {
      double v = 0.0;
      for (std::size_t i = 0; i < m_; ++i) v += binv_[r * m_ + i] * b_[i];
      xb_[r] = std::abs(v) < 1e-14 ? 0.0 : v;
    }
    since_refactor_ = 0;
  }

  void compute_duals() {
    std::fill(y_.begin(), y_.end(), 0.0);
    for (std::size_t r = 0; r < m_; ++r) {
      const double cb = phase_cost_[basis_[r]];
      if (cb == 0.0) continue;
      const double* row = binv_.data() + r * m_;
      for (std::size_t i = 0; i < m_; ++i) y_[i] += cb * row[i];
    }
  }

  void compute_alpha(std::size_t q) {
    const double* a = col(q);
    for (std::size_t r = 0; r < m_; ++r) {
      const double* row = binv_.data() + r * m_;
      double v = 0.0;
      for (std::size_t i = 0; i < m_; ++i) v += row[i] * a[i];
      alpha_[r] = v;
    }
  }

  void pivot(std::size_t r, std::size_t q, double theta) {
    for (std::size_t i = 0; i < m_; ++i) xb_[i] -= theta * alpha_[i];
    xb_[r] = theta;
    double* prow = binv_.data() + r * m_;
    const double inv = 1.0 / alpha_[r];
    for (std::size_t c = 0; c < m_; ++c) prow[c] *= inv;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == r || alpha_[i] == 0.0) continue;
      double* row = binv_.data() + i * m_;
      const double f = alpha_[i];
      for (std::size_t c = 0; c < m_; ++c) row[c] -= f * prow[c];
    }
    is_basic_[basis_[r]] = 0;
    basis_[r] = q;
    is_basic_[q] = 1;
    for (double& v : xb_)
      if (v < 0.0 && v > -opt_.feasibility_tol) v = 0.0;
    if (++since_refactor_ >= opt_.refactor_every) refactor();
  }

  LpStatus iterate(bool allow_art) {
    const std::size_t entering_end = allow_art ? ncol_ : first_art_;
    double cmax = 1.0;
    for (std::size_t j = 0; j < entering_end; ++j) cmax = std::max(cmax, std::abs(phase_cost_[j]));
    const double otol = opt_.optimality_tol * cmax;
    for (;;) {
      if (iters_ >= iter_limit_) return LpStatus::IterationLimit;
      compute_duals();
      std::size_t q = ncol_;
      double best = -otol;
      for (std::size_t j = 0; j < entering_end; ++j) {
        if (is_basic_[j]) continue;
        const double* a = col(j);
        double dj = phase_cost_[j];
        for (std::size_t i = 0; i < m_; ++i) dj -= y_[i] * a[i];
        if (dj < best) {
          q = j;
          if (bland_) break;
          best = dj;
        }
      }
      if (q == ncol_) return LpStatus::Optimal;
      compute_alpha(q);
      std::size_t r = m_;
      double theta = kInf;
      for (std::size_t i = 0; i < m_; ++i) {
        if (alpha_[i] <= opt_.pivot_tol) continue;
        const double ratio = std::max(0.0, xb_[i]) / alpha_[i];
        if (r == m_ || ratio < theta - 1e-12) {
          r = i;
          theta = ratio;
        } else if (ratio <= theta + 1e-12) {
          const bool better = bland_ ? basis_[i] < basis_[r] : alpha_[i] > alpha_[r];
          if (better) {
            r = i;
            theta = std::min(theta, ratio);
          }
        }
      }
      if (r == m_) return LpStatus::Unbounded;
      if (theta <= 1e-12) {
        if (++degenerate_ > 10 * (m_ + ncol_)) bland_ = true;
      }
      pivot(r, q, theta);
      ++iters_;
    }
  }

  void drive_out_artificials() {
    for (std::size_t r = 0; r < m_; ++r) {
      if (basis_[r] < first_art_) continue;
      for (std::size_t j = 0; j < first_art_; ++j) {
        if (is_basic_[j]) continue;
        compute_alpha(j);
        if (std::abs(alpha_[r]) > 1e-7) {
          pivot(r, j, xb_[r] / alpha_[r]);
          break;
        }
      }
    }
  }

  LpSolution& finish_status(LpSolution& sol, LpStatus s) {
    sol.status = s;
    sol.iterations = iters_;
    sol.bland_used = bland_;
    return sol;
  }

  void extract(LpSolution& sol) {
    std::vector<double> z(ncol_, 0.0);
    for (std::size_t r = 0; r < m_; ++r) z[basis_[r]] = std::max(0.0, xb_[r]);
    sol.primal.assign(n_, 0.0);
    for (std::size_t j = 0; j < n_; ++j) {
      const std::size_t c = var_col_[j];
      switch (var_kind_[j]) {
        case 0: sol.primal[j] = p_.lower_bound(j) + z[c]; break;
        case 1: sol.primal[j] = p_.upper_bound(j) - z[c]; break;
        default: sol.primal[j] = z[c] - z[c + 1]; break;
      }
    }
    compute_duals();
    const double sgn = p_.sense == Sense::Maximize ? -1.0 : 1.0;
    sol.dual.assign(p_.num_rows(), 0.0);
    for (std::size_t i = 0; i < p_.num_rows(); ++i) {
      const double v = sgn * row_sign_[i] * y_[i];
      sol.dual[i] = v == 0.0 ? 0.0 : v;
    }
    double obj = 0.0;
    for (std::size_t j = 0; j < n_; ++j) obj += p_.cost[j] * sol.primal[j];
    sol.objective = obj;
    finish_status(sol, LpStatus::Optimal);
  }
};

}  // namespace lp_detail

inline LpSolution solve_lp(const LpProblem& p, const LpOptions& opt = {}) {
  lp_detail::Simplex s(p, opt);
  return s.solve();
}

/// Residuals of an optimal solution, recomputed from the original data.
struct LpCertificate {
  double primal_residual = 0.0;   // max row/bound violation
  double dual_residual = 0.0;     // max dual sign/reduced-cost violation
  double complementarity = 0.0;   // max |slack * multiplier|
  double duality_gap = 0.0;       // |primal - dual| / max(1, |primal|)
  double dual_objective = 0.0;

  bool ok(double feas = 1e-7, double cs = 1e-6, double gap = 1e-6) const {
    return primal_residual <= feas && dual_residual <= feas && complementarity <= cs && duality_gap <= gap;
  }
};

inline LpCertificate check_certificate(const LpProblem& p, const LpSolution& s) {
  if (!s.optimal()) throw ArgumentError("certificate requested for a non-optimal solution");
  const std::size_t n = p.num_vars(), m = p.num_rows();
  const double sgn = p.sense == Sense::Maximize ? -1.0 : 1.0;
  LpCertificate c;
  // min-form multipliers: y = sgn * dual
  std::vector<double> red(n);
  for (std::size_t j = 0; j < n; ++j) red[j] = sgn * p.cost[j];
  double dual_obj = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double ax = 0.0;
    for (std::size_t j = 0; j < n; ++j) ax += p.coef(i, j) * s.primal[j];
    const double slack = ax - p.rhs[i];
    const double y = sgn * s.dual[i];
    switch (p.types[i]) {
      case RowType::LessEqual:
        c.primal_residual = std::max(c.primal_residual, slack);
        c.dual_residual = std::max(c.dual_residual, y);
        break;
      case RowType::GreaterEqual:
        c.primal_residual = std::max(c.primal_residual, -slack);
        c.dual_residual = std::max(c.dual_residual, -y);
        break;
      case RowType::Equal:
        c.primal_residual = std::max(c.primal_residual, std::abs(slack));
        break;
    }
    c.complementarity = std::max(c.complementarity, std::abs(y * slack));
    dual_obj += y * p.rhs[i];
    for (std::size_t j = 0; j < n; ++j) red[j] -= y * p.coef(i, j);
  }
  for (std::size_t j = 0; j < n; ++j) {
    const double lo = p.lower_bound(j), hi = p.upper_bound(j), x = s.primal[j], d = red[j];
    c.primal_residual = std::max({c.primal_residual, lo - x, x - hi});
    if (!std::isfinite(lo)) c.dual_residual = std::max(c.dual_residual, d);
    if (!std::isfinite(hi)) c.dual_residual = std::max(c.dual_residual, -d);
    if (d > 0.0 && std::isfinite(lo)) {
      c.complementarity = std::max(c.complementarity, d * (x - lo));
      dual_obj += d * lo;
    } else if (d < 0.0 && std::isfinite(hi)) {
      c.complementarity = std::max(c.complementarity, -d * (hi - x));
      dual_obj += d * hi;
    }
  }
  c.dual_objective = sgn * dual_obj;
  c.duality_gap = std::abs(s.objective - c.dual_objective) / std::max(1.0, std::abs(s.objective));
  return c;
}

}  // namespace hcopt
