#pragma once

// Service-stage recourse LPs. Dual values are reported as the nonnegative
// multipliers of the dual form: v1 on capacity rows, v2 on w <= z rows, so
// that dGamma/dz_i = l_i - v2_i.

#include <optional>
#include <span>
#include <vector>

#include "hcopt/lp.hpp"
#include "hcopt/nrm/instance.hpp"

namespace hcopt::nrm {

struct GammaResult {
  double penalty = 0.0;
  Vector served;        // w
  Vector leg_duals;     // v1 (weight rows for air-cargo)
  Vector volume_duals;  // air-cargo only
  Vector class_duals;   // v2
  Vector routing;       // y_ik, air-cargo only, flattened by class then route
};

namespace detail {
inline double nonneg_dual(double shadow) {
  const double v = -shadow;
  return v == 0.0 ? 0.0 : v;
}
}  // namespace detail

/// Gamma(z, c) = min l^T (z - w)  s.t.  A w <= c,  0 <= w <= z.
class PassengerGamma {
 public:
  explicit PassengerGamma(std::vector<Vector> consumption) : a_(std::move(consumption)) {
    if (a_.empty()) throw DimensionError("consumption matrix has no legs");
    m_ = a_.size();
    d_ = a_.front().size();
    lp_ = LpProblem(Sense::Minimize, Vector(d_, 0.0));
    for (std::size_t j = 0; j < m_; ++j) {
      require_same_size(d_, a_[j].size(), "consumption row");
      lp_.add_row(a_[j], RowType::LessEqual, 0.0);
    }
    Vector e(d_, 0.0);
    for (std::size_t i = 0; i < d_; ++i) {
      e[i] = 1.0;
      lp_.add_row(e, RowType::LessEqual, 0.0);
      e[i] = 0.0;
    }
  }

  GammaResult solve(std::span<const double> z, std::span<const double> c, std::span<const double> l) {
    require_same_size(d_, z.size(), "show-ups z");
    require_same_size(m_, c.size(), "capacities c");
    require_same_size(d_, l.size(), "penalties l");
    double base = 0.0;
    for (std::size_t i = 0; i < d_; ++i) {
      lp_.cost[i] = -l[i];
      lp_.rhs[m_ + i] = z[i];
      base += l[i] * z[i];
    }
    for (std::size_t j = 0; j < m_; ++j) lp_.rhs[j] = c[j];
    const LpSolution s = solve_lp(lp_);
    if (!s.optimal()) throw InternalError("service-stage LP failed: " + to_string(s.status));
    GammaResult g;
    g.penalty = std::max(0.0, base + s.objective);
    g.served = s.primal;
    g.leg_duals.resize(m_);
    g.class_duals.resize(d_);
    for (std::size_t j = 0; j < m_; ++j) g.leg_duals[j] = detail::nonneg_dual(s.dual[j]);
    for (std::size_t i = 0; i < d_; ++i) g.class_duals[i] = detail::nonneg_dual(s.dual[m_ + i]);
    return g;
  }

  const LpProblem& last_problem() const { return lp_; }

 private:
  std::vector<Vector> a_;
  std::size_t m_ = 0, d_ = 0;
  LpProblem lp_;
};

inline GammaResult gamma_passenger(std::span<const double> z, std::span<const double> c,
                                   const std::vector<Vector>& consumption, std::span<const double> l) {
  PassengerGamma g(consumption);
  return g.solve(z, c, l);
}

/// Gamma(z, W, V, c_w, c_v) = min l^T (z - w) over routings y:
///   sum_{i,k: j in route k} W_i y_ik <= c_wj,  same with V and c_vj,
///   w_i = sum_k y_ik,  w <= z,  y >= 0.
class AirCargoGamma {
 public:
  AirCargoGamma(std::vector<std::vector<Route>> routes, std::size_t num_legs)
      : routes_(std::move(routes)), m_(num_legs), d_(routes_.size()) {
    for (const auto& rs : routes_) {
      offsets_.push_back(ny_);
      ny_ += rs.size();
    }
    n_ = ny_ + d_;
    lp_ = LpProblem(Sense::Minimize, Vector(n_, 0.0));
    Vector row(n_, 0.0);
    for (std::size_t j = 0; j < 2 * m_; ++j) lp_.add_row(row, RowType::LessEqual, 0.0);
    for (std::size_t i = 0; i < d_; ++i) {
      std::fill(row.begin(), row.end(), 0.0);
      row[ny_ + i] = 1.0;
      for (std::size_t k = 0; k < routes_[i].size(); ++k) row[offsets_[i] + k] = -1.0;
      lp_.add_row(row, RowType::Equal, 0.0);
    }
    for (std::size_t i = 0; i < d_; ++i) {
      std::fill(row.begin(), row.end(), 0.0);
      row[ny_ + i] = 1.0;
      lp_.add_row(row, RowType::LessEqual, 0.0);
    }
  }

  GammaResult solve(std::span<const double> z, std::span<const double> weight, std::span<const double> volume,
                    std::span<const double> cap_w, std::span<const double> cap_v, std::span<const double> l) {
    require_same_size(d_, z.size(), "show-ups z");
    require_same_size(d_, weight.size(), "weights W");
    require_same_size(d_, volume.size(), "volumes V");
    require_same_size(m_, cap_w.size(), "weight capacities");
    require_same_size(m_, cap_v.size(), "volume capacities");
    require_same_size(d_, l.size(), "penalties l");
    std::fill(lp_.matrix.begin(), lp_.matrix.begin() + static_cast<std::ptrdiff_t>(2 * m_ * n_), 0.0);
    for (std::size_t i = 0; i < d_; ++i)
      for (std::size_t k = 0; k < routes_[i].size(); ++k)
        for (std::size_t j : routes_[i][k]) {
          lp_.matrix[j * n_ + offsets_[i] + k] += weight[i];
          lp_.matrix[(m_ + j) * n_ + offsets_[i] + k] += volume[i];
        }
    double base = 0.0;
    for (std::size_t i = 0; i < d_; ++i) {
      lp_.cost[ny_ + i] = -l[i];
      lp_.rhs[2 * m_ + d_ + i] = z[i];
      base += l[i] * z[i];
    }
    for (std::size_t j = 0; j < m_; ++j) {
      lp_.rhs[j] = cap_w[j];
      lp_.rhs[m_ + j] = cap_v[j];
    }
    const LpSolution s = solve_lp(lp_);
    if (!s.optimal()) throw InternalError("air-cargo service LP failed: " + to_string(s.status));
    GammaResult g;
    g.penalty = std::max(0.0, base + s.objective);
    g.routing.assign(s.primal.begin(), s.primal.begin() + static_cast<std::ptrdiff_t>(ny_));
    g.served.assign(s.primal.begin() + static_cast<std::ptrdiff_t>(ny_), s.primal.end());
    g.leg_duals.resize(m_);
    g.volume_duals.resize(m_);
    g.class_duals.resize(d_);
    for (std::size_t j = 0; j < m_; ++j) {
      g.leg_duals[j] = detail::nonneg_dual(s.dual[j]);
      g.volume_duals[j] = detail::nonneg_dual(s.dual[m_ + j]);
    }
    for (std::size_t i = 0; i < d_; ++i) g.class_duals[i] = detail::nonneg_dual(s.dual[2 * m_ + d_ + i]);
    return g;
  }

  std::size_t route_offset(std::size_t i) const { return offsets_[i]; }
  const LpProblem& last_problem() const { return lp_; }

 private:
  std::vector<std::vector<Route>> routes_;
  std::size_t m_ = 0, d_ = 0, ny_ = 0, n_ = 0;
  std::vector<std::size_t> offsets_;
  LpProblem lp_;
};

inline GammaResult gamma_aircargo(std::span<const double> z, std::span<const double> weight,
                                  std::span<const double> volume, std::span<const double> cap_w,
                                  std::span<const double> cap_v, const std::vector<std::vector<Route>>& routes,
                                  std::span<const double> l) {
  AirCargoGamma g(routes, cap_w.size());
  return g.solve(z, weight, volume, cap_w, cap_v, l);
}

/// Dispatches on the instance mode; one solver per evaluator.
class GammaEvaluator {
 public:
  explicit GammaEvaluator(const NrmInstance& inst) : inst_(&inst) {
    if (inst.mode == NetworkMode::Passenger)
      passenger_.emplace(inst.consumption);
    else
      cargo_.emplace(inst.routes, inst.num_legs);
  }

  GammaResult operator()(std::span<const double> z, const ServiceScenario& sc, std::span<const double> l) {
    if (passenger_) return passenger_->solve(z, sc.capacity, l);
    return cargo_->solve(z, sc.weight, sc.volume, sc.capacity, sc.capacity_volume, l);
  }

  const LpProblem& last_problem() const { return passenger_ ? passenger_->last_problem() : cargo_->last_problem(); }

 private:
  const NrmInstance* inst_;
  std::optional<PassengerGamma> passenger_;
  std::optional<AirCargoGamma> cargo_;
};

}  // namespace hcopt::nrm
