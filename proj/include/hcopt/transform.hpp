#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "hcopt/problem.hpp"

namespace hcopt {

/// The empirical transformation  g_hat(x) = (1/n) sum_j phi(x, xi^j)  over a
/// frozen sample set, with its image box U_hat and coordinate-wise inverse.
class EmpiricalTransform {
 public:
  EmpiricalTransform(PhiFamily phi, BoxDomain domain, std::vector<Vector> samples)
      : phi_(phi), domain_(std::move(domain)), samples_(std::move(samples)) {
    if (samples_.empty()) throw ArgumentError("empirical transform needs at least one sample");
    const std::size_t d = domain_.dim();
    for (const auto& s : samples_) require_same_size(d, s.size(), "frozen sample");
    if (phi_.kind == PhiKind::TruncMin) {
      sorted_.assign(d, Vector(samples_.size()));
      prefix_.assign(d, Vector(samples_.size() + 1, 0.0));
      for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < samples_.size(); ++j) sorted_[i][j] = samples_[j][i];
        std::sort(sorted_[i].begin(), sorted_[i].end());
        for (std::size_t j = 0; j < samples_.size(); ++j) prefix_[i][j + 1] = prefix_[i][j] + sorted_[i][j];
      }
    }
    lower_.resize(d);
    upper_.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
      lower_[i] = value(i, domain_.lower()[i]);
      upper_[i] = value(i, domain_.upper()[i]);
    }
  }

  /// Draws and freezes n samples from the model's xi law.
  template <CompositeModel M>
  static EmpiricalTransform sample(const M& model, std::size_t n, Stream& rng) {
    if (n == 0) throw ArgumentError("sample count n must be >= 1");
    std::vector<Vector> s;
    s.reserve(n);
    for (std::size_t j = 0; j < n; ++j) s.push_back(model.sample_xi(rng));
    return EmpiricalTransform(model.phi(), model.domain(), std::move(s));
  }

  std::size_t n() const { return samples_.size(); }
  std::size_t dim() const { return domain_.dim(); }
  const PhiFamily& phi() const { return phi_; }
  const BoxDomain& domain() const { return domain_; }
  const std::vector<Vector>& samples() const { return samples_; }

  double value(std::size_t i, double x) const {
    const double n = static_cast<double>(samples_.size());
    if (!sorted_.empty()) {
      const auto& s = sorted_[i];
      const auto k = static_cast<std::size_t>(std::upper_bound(s.begin(), s.end(), x) - s.begin());
      return (prefix_[i][k] + x * static_cast<double>(s.size() - k)) / n;
    }
    double acc = 0.0;
    for (const auto& xi : samples_) acc += phi_.value(x, xi[i]);
    return acc / n;
  }

  Vector value(std::span<const double> x) const {
    require_same_size(dim(), x.size(), "empirical_g x");
    Vector out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = value(i, x[i]);
    return out;
  }

  /// d g_hat_i / d x_i with the zero-at-kink convention.
  double derivative(std::size_t i, double x) const {
    const double n = static_cast<double>(samples_.size());
    if (!sorted_.empty()) {
      const auto& s = sorted_[i];
      const auto above = static_cast<std::size_t>(s.end() - std::upper_bound(s.begin(), s.end(), x));
      return static_cast<double>(above) / n;
    }
    double acc = 0.0;
    for (const auto& xi : samples_) acc += phi_.derivative(x, xi[i]);
    return acc / n;
  }

  Vector gradient(std::span<const double> x) const {
    require_same_size(dim(), x.size(), "empirical gradient x");
    Vector out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = derivative(i, x[i]);
    return out;
  }

  /// Lower and upper corners of U_hat = g_hat(X).
  const Vector& image_lower() const { return lower_; }
  const Vector& image_upper() const { return upper_; }

  /// U_hat shrunk by delta on every side.
  BoxDomain image_box(double delta = 0.0) const {
    Vector lo(lower_), hi(upper_);
    for (std::size_t i = 0; i < lo.size(); ++i) {
      lo[i] += delta;
      hi[i] -= delta;
      if (lo[i] > hi[i]) throw DomainError("shrunken image box is empty", i);
    }
    return BoxDomain(std::move(lo), std::move(hi));
  }

  /// Half of the narrowest image interval: the largest admissible shrink.
  double max_shrink() const {
    double w = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < dim(); ++i) w = std::min(w, upper_[i] - lower_[i]);
    return 0.5 * w;
  }

  /// g_hat_i^{-1}(u) = inf{x in [lo_i, hi_i] : g_hat_i(x) >= u}, by bisection.
  double inverse(std::size_t i, double u) const {
    constexpr double kSlack = 1e-12;
    if (!(u >= lower_[i] - kSlack && u <= upper_[i] + kSlack) || !std::isfinite(u))
      throw DomainError("u lies outside the empirical image box", i);
    double lo = domain_.lower()[i];
    double hi = domain_.upper()[i];
    if (u <= lower_[i]) return lo;
    if (u > upper_[i]) return hi;
    const double width_tol = 1e-14 * std::max(1.0, hi - lo);
    // invariant: value(lo) < u <= value(hi)
    for (int it = 0; it < 200 && hi - lo > width_tol; ++it) {
      const double mid = lo + 0.5 * (hi - lo);
      if (value(i, mid) >= u)
        hi = mid;
      else
        lo = mid;
    }
    return hi;
  }

  Vector inverse(std::span<const double> u) const {
    require_same_size(dim(), u.size(), "empirical_g_inverse u");
    Vector out(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = inverse(i, u[i]);
    return out;
  }

 private:
  PhiFamily phi_;
  BoxDomain domain_;
  std::vector<Vector> samples_;
  std::vector<Vector> sorted_;
  std::vector<Vector> prefix_;
  Vector lower_;
  Vector upper_;
};

inline Vector empirical_g(const EmpiricalTransform& t, std::span<const double> x) { return t.value(x); }
inline Vector empirical_g_inverse(const EmpiricalTransform& t, std::span<const double> u) { return t.inverse(u); }

}  // namespace hcopt
