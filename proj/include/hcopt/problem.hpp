#pragma once

// Problems of the form  min_{x in X} F(x) = E[f(phi(x, xi))]  where X is a box,
// phi acts coordinate-wise and is non-decreasing in x, and f is convex.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hcopt/distributions.hpp"
#include "hcopt/error.hpp"
#include "hcopt/rng.hpp"

namespace hcopt {

using Vector = std::vector<double>;

inline void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b)
    throw DimensionError(std::string(what) + ": length " + std::to_string(b) + " does not match dimension " +
                         std::to_string(a));
}

class BoxDomain {
 public:
  BoxDomain() = default;
  BoxDomain(Vector lower, Vector upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
    require_same_size(lower_.size(), upper_.size(), "BoxDomain upper bounds");
    for (std::size_t i = 0; i < lower_.size(); ++i) {
      if (!std::isfinite(lower_[i]) || !std::isfinite(upper_[i]))
        throw DomainError("box bounds must be finite", i);
      if (lower_[i] > upper_[i]) throw DomainError("box lower bound exceeds upper bound", i);
    }
  }

  static BoxDomain uniform(std::size_t dim, double lower, double upper) {
    return BoxDomain(Vector(dim, lower), Vector(dim, upper));
  }

  std::size_t dim() const { return lower_.size(); }
  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }

  /// D_X: the largest Euclidean norm of a point in the box.
  double radius() const {
    double s = 0.0;
    for (std::size_t i = 0; i < dim(); ++i) {
      const double m = std::max(std::fabs(lower_[i]), std::fabs(upper_[i]));
      s += m * m;
    }
    return std::sqrt(s);
  }

  bool contains(std::span<const double> x) const {
    if (x.size() != dim()) return false;
    for (std::size_t i = 0; i < dim(); ++i)
      if (!(x[i] >= lower_[i] && x[i] <= upper_[i])) return false;
    return true;
  }

  Vector project(std::span<const double> x) const {
    require_same_size(dim(), x.size(), "project_box");
    Vector out(x.begin(), x.end());
    for (std::size_t i = 0; i < dim(); ++i) out[i] = std::clamp(out[i], lower_[i], upper_[i]);
    return out;
  }

 private:
  Vector lower_;
  Vector upper_;
};

inline Vector project_box(const BoxDomain& domain, std::span<const double> x) { return domain.project(x); }

enum class PhiKind { TruncMin, Product, Saturating, Share };

/// A coordinate-wise random function phi_i(x_i, xi_i) from one of four families:
///   TruncMin    x ^ xi
///   Product     x * xi
///   Saturating  x xi / (x + alpha xi^kappa)     (kappa <= 1, alpha > 0)
///   Share       k x / (x + xi)                  (k >= 0)
/// `lipschitz` is the declared constant L_phi in x.
struct PhiFamily {
  PhiKind kind = PhiKind::TruncMin;
  double lipschitz = 1.0;
  double alpha = 1.0;
  double kappa = 1.0;
  double k = 1.0;

  static PhiFamily trunc_min() { return {PhiKind::TruncMin, 1.0}; }
  static PhiFamily product(double lipschitz) { return {PhiKind::Product, lipschitz}; }
  static PhiFamily saturating(double alpha, double kappa, double lipschitz) {
    if (!(alpha > 0.0) || !(kappa <= 1.0)) throw ArgumentError("saturating phi needs alpha > 0 and kappa <= 1");
    return {PhiKind::Saturating, lipschitz, alpha, kappa, 1.0};
  }
  static PhiFamily share(double k, double lipschitz) {
    if (!(k >= 0.0)) throw ArgumentError("share phi needs k >= 0");
    return {PhiKind::Share, lipschitz, 1.0, 1.0, k};
  }

  std::string name() const {
    switch (kind) {
      case PhiKind::TruncMin: return "trunc_min";
      case PhiKind::Product: return "product";
      case PhiKind::Saturating: return "saturating";
      case PhiKind::Share: return "share";
    }
    return "?";
  }

  double value(double x, double xi) const {
    switch (kind) {
      case PhiKind::TruncMin: return std::min(x, xi);
      case PhiKind::Product: return x * xi;
      case PhiKind::Saturating: {
        const double den = x + alpha * std::pow(xi, kappa);
        if (den == 0.0) throw SingularityError("saturating phi: x + alpha xi^kappa = 0");
        return x * xi / den;
      }
      case PhiKind::Share: {
        const double den = x + xi;
        if (den == 0.0) throw SingularityError("share phi: x + xi = 0");
        return k * x / den;
      }
    }
    return 0.0;
  }

  /// Almost-everywhere derivative in x; 0 where phi is not differentiable.
  double derivative(double x, double xi) const {
    switch (kind) {
      case PhiKind::TruncMin: return x < xi ? 1.0 : 0.0;
      case PhiKind::Product: return xi;
      case PhiKind::Saturating: {
        const double s = alpha * std::pow(xi, kappa);
        const double den = x + s;
        if (den == 0.0) throw SingularityError("saturating phi: x + alpha xi^kappa = 0");
        return xi * s / (den * den);
      }
      case PhiKind::Share: {
        const double den = x + xi;
        if (den == 0.0) throw SingularityError("share phi: x + xi = 0");
        return k * xi / (den * den);
      }
    }
    return 0.0;
  }
};

inline Vector phi_eval(const PhiFamily& phi, std::span<const double> x, std::span<const double> xi) {
  require_same_size(x.size(), xi.size(), "phi_eval xi");
  Vector out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = phi.value(x[i], xi[i]);
  return out;
}

/// Diagonal of the Jacobian of phi in x.
inline Vector phi_grad(const PhiFamily& phi, std::span<const double> x, std::span<const double> xi) {
  require_same_size(x.size(), xi.size(), "phi_grad xi");
  Vector out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = phi.derivative(x[i], xi[i]);
  return out;
}

/// Independent per-coordinate laws for xi.
class XiSampler {
 public:
  XiSampler() = default;
  explicit XiSampler(std::vector<Distribution> coords) : coords_(std::move(coords)) {}
  static XiSampler iid(std::size_t dim, const Distribution& d) { return XiSampler(std::vector<Distribution>(dim, d)); }

  std::size_t dim() const { return coords_.size(); }
  const Distribution& operator[](std::size_t i) const { return coords_[i]; }
  const std::vector<Distribution>& coords() const { return coords_; }

  Vector sample(Stream& rng) const {
    Vector xi(coords_.size());
    for (std::size_t i = 0; i < coords_.size(); ++i) xi[i] = coords_[i].sample(rng);
    return xi;
  }

 private:
  std::vector<Distribution> coords_;
};

/// A differentiable convex outer function f with its gradient.
struct OuterFunction {
  std::function<double(std::span<const double>)> value;
  std::function<Vector(std::span<const double>)> gradient;
  double lipschitz = 1.0;
  std::string name = "custom";

  /// f(y) = sum_i w_i (y_i - a_i)^2
  static OuterFunction quadratic(Vector target, Vector weight, double lipschitz) {
    if (weight.empty()) weight.assign(target.size(), 1.0);
    require_same_size(target.size(), weight.size(), "quadratic weights");
    OuterFunction f;
    f.value = [=](std::span<const double> y) {
      require_same_size(target.size(), y.size(), "quadratic outer");
      double s = 0.0;
      for (std::size_t i = 0; i < y.size(); ++i) s += weight[i] * (y[i] - target[i]) * (y[i] - target[i]);
      return s;
    };
    f.gradient = [=](std::span<const double> y) {
      require_same_size(target.size(), y.size(), "quadratic outer");
      Vector g(y.size());
      for (std::size_t i = 0; i < y.size(); ++i) g[i] = 2.0 * weight[i] * (y[i] - target[i]);
      return g;
    };
    f.lipschitz = lipschitz;
    f.name = "quadratic";
    return f;
  }

  /// f(y) = c^T y
  static OuterFunction linear(Vector c) {
    OuterFunction f;
    double norm = 0.0;
    for (double v : c) norm += v * v;
    f.value = [=](std::span<const double> y) {
      double s = 0.0;
      for (std::size_t i = 0; i < y.size(); ++i) s += c[i] * y[i];
      return s;
    };
    f.gradient = [=](std::span<const double>) { return c; };
    f.lipschitz = std::sqrt(norm);
    f.name = "linear";
    return f;
  }

  static OuterFunction constant(double value, std::size_t dim) {
    OuterFunction f;
    f.value = [=](std::span<const double>) { return value; };
    f.gradient = [=](std::span<const double>) { return Vector(dim, 0.0); };
    f.lipschitz = 0.0;
    f.name = "constant";
    return f;
  }
};

/// Interface shared by every problem the optimizers can drive. The outer
/// function may itself be stochastic (the NRM recourse is), so value and
/// gradient receive a stream; deterministic models ignore it.
template <class M>
concept CompositeModel = requires(const M& m, std::span<const double> y, Stream& rng) {
  { m.domain() } -> std::convertible_to<const BoxDomain&>;
  { m.phi() } -> std::convertible_to<const PhiFamily&>;
  { m.sample_xi(rng) } -> std::same_as<Vector>;
  { m.outer_value(y, rng) } -> std::convertible_to<double>;
  { m.outer_gradient(y, rng) } -> std::same_as<Vector>;
  { m.outer_lipschitz() } -> std::convertible_to<double>;
};

class Problem {
 public:
  Problem(BoxDomain domain, PhiFamily phi, XiSampler sampler, OuterFunction outer)
      : domain_(std::move(domain)), phi_(phi), sampler_(std::move(sampler)), outer_(std::move(outer)) {
    require_same_size(domain_.dim(), sampler_.dim(), "Problem xi sampler");
    if (!(phi_.lipschitz > 0.0)) throw ArgumentError("phi Lipschitz constant must be positive");
  }

  const BoxDomain& domain() const { return domain_; }
  const PhiFamily& phi() const { return phi_; }
  const XiSampler& sampler() const { return sampler_; }
  const OuterFunction& outer() const { return outer_; }
  std::size_t dim() const { return domain_.dim(); }

  Vector sample_xi(Stream& rng) const { return sampler_.sample(rng); }
  double outer_value(std::span<const double> y, Stream&) const { return outer_.value(y); }
  Vector outer_gradient(std::span<const double> y, Stream&) const { return outer_.gradient(y); }
  double outer_lipschitz() const { return outer_.lipschitz; }

  /// Declared lower bound mu_g on the diagonal of grad g over X (0 = undeclared).
  double declared_mu_g = 0.0;

 private:
  BoxDomain domain_;
  PhiFamily phi_;
  XiSampler sampler_;
  OuterFunction outer_;
};

static_assert(CompositeModel<Problem>);

/// Monte-Carlo mean with its standard error, per coordinate.
struct MeanEstimate {
  Vector mean;
  Vector std_error;
  std::size_t samples = 0;
};

/// Running mean and variance (Welford), one per coordinate.
class Accumulator {
 public:
  explicit Accumulator(std::size_t dim = 1) : mean_(dim, 0.0), m2_(dim, 0.0) {}

  void add(std::span<const double> v) {
    ++n_;
    const double inv = 1.0 / static_cast<double>(n_);
    for (std::size_t i = 0; i < mean_.size(); ++i) {
      const double delta = v[i] - mean_[i];
      mean_[i] += delta * inv;
      m2_[i] += delta * (v[i] - mean_[i]);
    }
  }
  void add(double v) { add(std::span<const double>(&v, 1)); }

  std::size_t count() const { return n_; }
  const Vector& mean() const { return mean_; }
  Vector variance() const {
    Vector v(mean_.size(), 0.0);
    if (n_ > 1)
      for (std::size_t i = 0; i < v.size(); ++i) v[i] = m2_[i] / static_cast<double>(n_ - 1);
    return v;
  }
  Vector std_error() const {
    Vector v = variance();
    for (double& e : v) e = std::sqrt(e / static_cast<double>(std::max<std::size_t>(n_, 1)));
    return v;
  }
  MeanEstimate result() const { return {mean_, std_error(), n_}; }

 private:
  std::size_t n_ = 0;
  Vector mean_;
  Vector m2_;
};

/// Monte-Carlo estimate of g(x) = E[phi(x, xi)] from n fresh draws.
template <CompositeModel M>
MeanEstimate estimate_g(const M& model, std::span<const double> x, std::size_t n, Stream& rng) {
  if (n == 0) throw ArgumentError("estimate_g requires n >= 1");
  require_same_size(model.domain().dim(), x.size(), "estimate_g x");
  Accumulator acc(x.size());
  for (std::size_t j = 0; j < n; ++j) {
    const Vector xi = model.sample_xi(rng);
    acc.add(phi_eval(model.phi(), x, xi));
  }
  return acc.result();
}

/// Monte-Carlo estimate of F(x) = E[f(phi(x, xi))] and its standard error.
/// The stream is taken by value so repeated calls with the same stream reuse
/// the same draws (common random numbers).
template <CompositeModel M>
std::pair<double, double> estimate_objective(const M& model, std::span<const double> x, std::size_t n, Stream rng) {
  if (n == 0) throw ArgumentError("estimate_objective requires n >= 1");
  Accumulator acc(1);
  for (std::size_t j = 0; j < n; ++j) {
    const Vector xi = model.sample_xi(rng);
    acc.add(model.outer_value(phi_eval(model.phi(), x, xi), rng));
  }
  return {acc.mean()[0], acc.std_error()[0]};
}

/// Result of the empirical check of the declared strong-monotonicity constant.
struct MuGCheck {
  double declared = 0.0;
  double min_estimate = std::numeric_limits<double>::infinity();
  Vector argmin;
  bool violated = false;  // some estimate falls below declared by more than 4 s.e.
};

/// Estimates the diagonal of grad g on a uniform grid of `points_per_axis`
/// points along each coordinate axis (other coordinates at the box centre)
/// and flags points where it falls below the declared mu_g.
template <CompositeModel M>
MuGCheck verify_mu_g(const M& model, double declared, std::size_t points_per_axis, std::size_t n, Stream& rng) {
  const auto& dom = model.domain();
  MuGCheck out;
  out.declared = declared;
  Vector centre(dom.dim());
  for (std::size_t i = 0; i < dom.dim(); ++i) centre[i] = 0.5 * (dom.lower()[i] + dom.upper()[i]);
  for (std::size_t i = 0; i < dom.dim(); ++i) {
    for (std::size_t p = 0; p < points_per_axis; ++p) {
      Vector x = centre;
      const double frac = points_per_axis == 1 ? 0.5 : static_cast<double>(p) / static_cast<double>(points_per_axis - 1);
      x[i] = dom.lower()[i] + frac * (dom.upper()[i] - dom.lower()[i]);
      Accumulator acc(1);
      for (std::size_t j = 0; j < n; ++j) {
        const Vector xi = model.sample_xi(rng);
        acc.add(model.phi().derivative(x[i], xi[i]));
      }
      const double est = acc.mean()[0];
      if (est < out.min_estimate) {
        out.min_estimate = est;
        out.argmin = x;
      }
      if (est + 4.0 * acc.std_error()[0] < declared) out.violated = true;
    }
  }
  return out;
}

}  // namespace hcopt
