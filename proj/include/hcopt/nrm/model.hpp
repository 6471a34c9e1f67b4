#pragma once

// Booking-limit control as a composite problem:  min_x E[f(x ^ D)],
// f(y) = -(r^T y - Gamma(Z(y), ...)).

#include <memory>

#include "hcopt/estimators.hpp"
#include "hcopt/nrm/gamma.hpp"
#include "hcopt/nrm/instance.hpp"

namespace hcopt::nrm {

enum class GradientMode { ExactDiff, DualApprox };

inline std::string to_string(GradientMode g) { return g == GradientMode::ExactDiff ? "exact_diff" : "dual_approx"; }

/// Step used for the right derivative of Gamma when show-ups equal accepted counts.
inline constexpr double kAllShowUpStep = 1e-5;

class NrmModel {
 public:
  explicit NrmModel(NrmInstance inst, GradientMode mode = GradientMode::DualApprox)
      : inst_(std::make_shared<NrmInstance>(std::move(inst))),
        domain_(BoxDomain::uniform(inst_->num_classes, 0.0, inst_->x_upper)),
        mode_(mode),
        gamma_(std::make_shared<GammaEvaluator>(*inst_)) {
    inst_->validate();
    // Count show-ups stay Poisson inside the optimizer; the evaluator honors the declared model.
    optimizer_show_up_ = inst_->show_up == ShowUpModel::AllShowUp ? ShowUpModel::AllShowUp : ShowUpModel::Poisson;
    const auto [rmax, lmax] = revenue_penalty_bounds(*inst_);
    double pmax = 0.0;
    for (double p : inst_->show_prob) pmax = std::max(pmax, p);
    lipschitz_ = std::sqrt(static_cast<double>(inst_->num_classes)) * (rmax + pmax * lmax);
  }

  const NrmInstance& instance() const { return *inst_; }
  const BoxDomain& domain() const { return domain_; }
  const PhiFamily& phi() const { return phi_; }
  GradientMode mode() const { return mode_; }
  void set_mode(GradientMode m) { mode_ = m; }
  ShowUpModel optimizer_show_up() const { return optimizer_show_up_; }

  Vector sample_xi(Stream& rng) const { return sample_demand(*inst_, rng); }

  /// -(r^T y - Gamma(Z(y))) for one environment and show-up draw.
  double outer_value(std::span<const double> y, Stream& rng) const {
    ServiceScenario sc;
    const Vector z = draw_service(y, sc, rng);
    const Vector r = scenario_revenue(*inst_, sc);
    const Vector l = scenario_penalty(*inst_, sc);
    double rev = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) rev += r[i] * y[i];
    return -(rev - (*gamma_)(z, sc, l).penalty);
  }

  /// Gradient of outer_value in y (a descent direction for -revenue).
  Vector outer_gradient(std::span<const double> y, Stream& rng) const {
    Vector g = revenue_gradient(y, rng);
    for (double& v : g) v = -v;
    return g;
  }

  /// r_i - p_i (Gamma(Z + e_i) - Gamma(Z)), or its dual approximation r_i - p_i (l_i - v2_i).
  Vector revenue_gradient(std::span<const double> y, Stream& rng) const {
    require_same_size(inst_->num_classes, y.size(), "accepted y");
    ServiceScenario sc;
    const Vector z = draw_service(y, sc, rng);
    const Vector r = scenario_revenue(*inst_, sc);
    const Vector l = scenario_penalty(*inst_, sc);
    const GammaResult base = (*gamma_)(z, sc, l);
    const bool all = optimizer_show_up_ == ShowUpModel::AllShowUp;
    Vector g(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double p = all ? 1.0 : inst_->show_prob[i];
      double diff = 0.0;
      if (mode_ == GradientMode::DualApprox) {
        diff = l[i] - base.class_duals[i];
      } else {
        const double h = all ? kAllShowUpStep : 1.0;
        Vector zp = z;
        zp[i] += h;
        diff = ((*gamma_)(zp, sc, l).penalty - base.penalty) / h;
      }
      g[i] = r[i] - p * diff;
    }
    return g;
  }

  double outer_lipschitz() const { return lipschitz_; }

 private:
  std::shared_ptr<NrmInstance> inst_;
  BoxDomain domain_;
  PhiFamily phi_ = PhiFamily::trunc_min();
  GradientMode mode_;
  ShowUpModel optimizer_show_up_ = ShowUpModel::AllShowUp;
  double lipschitz_ = 1.0;
  std::shared_ptr<GammaEvaluator> gamma_;  // reusable LP workspace; one model per thread

  Vector draw_service(std::span<const double> y, ServiceScenario& sc, Stream& rng) const {
    Stream env = rng.split();
    sample_environment(*inst_, sc, env);
    const Stream show = rng.split();
    Vector acc(y.begin(), y.end());
    for (double& v : acc) v = std::max(0.0, v);
    return sample_show_ups(optimizer_show_up_, inst_->show_prob, acc, show);
  }
};

static_assert(CompositeModel<NrmModel>);

/// One-scenario revenue gradient at booking limits x, including the
/// truncation indicator 1{x_i < D_i}.
inline GradientSample nrm_outer_gradient(const NrmModel& model, std::span<const double> x, Stream& rng) {
  GradientSample s = grad_estimate_plain(model, x, rng);
  for (double& v : s.vector) v = v == 0.0 ? 0.0 : -v;
  return s;
}

}  // namespace hcopt::nrm
