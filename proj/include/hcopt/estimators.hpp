#pragma once

// Stochastic gradient and inverse-Jacobian estimators.

#include <cstdint>
#include <span>

#include "hcopt/problem.hpp"
#include "hcopt/transform.hpp"

namespace hcopt {

enum class GradientKind { Plain, Regularized, Mirror, SaaReform, CoordReform };

struct GradientSample {
  Vector vector;
  GradientKind kind = GradientKind::Plain;
  std::size_t samples_used = 0;
};

/// Randomized truncated-Neumann estimate of the (diagonal) inverse Jacobian of g.
struct InverseEstimate {
  Vector diagonal;
  std::size_t index_k = 0;
  std::size_t samples_used = 0;
};

/// Stream tags used when an iteration stream is split between the random
/// objects of one gradient evaluation.
namespace stream_tag {
inline constexpr std::uint64_t kXi = 1;
inline constexpr std::uint64_t kInverseA = 2;
inline constexpr std::uint64_t kInverseB = 3;
}  // namespace stream_tag

/// grad phi(x, xi)^T grad f(phi(x, xi)) for a given xi. Skips the outer
/// gradient when every coordinate of grad phi vanishes.
template <CompositeModel M>
Vector chain_rule_term(const M& model, std::span<const double> x, std::span<const double> xi, Stream& rng) {
  const Vector dphi = phi_grad(model.phi(), x, xi);
  bool any = false;
  for (double v : dphi) any = any || v != 0.0;
  if (!any) return Vector(x.size(), 0.0);
  const Vector y = phi_eval(model.phi(), x, xi);
  Vector g = model.outer_gradient(y, rng);
  require_same_size(x.size(), g.size(), "outer gradient");
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = dphi[i] == 0.0 ? 0.0 : dphi[i] * g[i];
  return g;
}

/// v(x) = grad phi(x, xi)^T grad f(phi(x, xi)) with one fresh xi; unbiased for grad F(x).
template <CompositeModel M>
GradientSample grad_estimate_plain(const M& model, std::span<const double> x, Stream& rng) {
  require_same_size(model.domain().dim(), x.size(), "gradient x");
  const Vector xi = model.sample_xi(rng);
  return {chain_rule_term(model, x, xi, rng), GradientKind::Plain, 1};
}

/// v_lambda(x) = v(x) + lambda x.
template <CompositeModel M>
GradientSample grad_estimate_regularized(const M& model, std::span<const double> x, double lambda, Stream& rng) {
  if (!(lambda >= 0.0)) throw ArgumentError("regularization lambda must be >= 0");
  GradientSample s = grad_estimate_plain(model, x, rng);
  for (std::size_t i = 0; i < x.size(); ++i) s.vector[i] += lambda * x[i];
  s.kind = GradientKind::Regularized;
  return s;
}

/// Neumann estimate for a fixed truncation index k:
///   (K / (c L)) prod_{i=1..k} (I - grad phi(x, xi^i) / (c L)).
template <CompositeModel M>
InverseEstimate neumann_inverse_with_index(const M& model, std::span<const double> x, std::size_t K, double c,
                                           std::size_t k, Stream& rng) {
  if (K < 1) throw ArgumentError("Neumann truncation K must be >= 1");
  if (!(c > 1.0)) throw ArgumentError("Neumann scaling c must exceed 1");
  const double scale = c * model.phi().lipschitz;
  InverseEstimate est;
  est.diagonal.assign(x.size(), static_cast<double>(K) / scale);
  est.index_k = k;
  for (std::size_t s = 0; s < k; ++s) {
    const Vector xi = model.sample_xi(rng);
    for (std::size_t i = 0; i < x.size(); ++i) est.diagonal[i] *= 1.0 - model.phi().derivative(x[i], xi[i]) / scale;
  }
  est.samples_used = k;
  return est;
}

/// Draws k uniformly from {0, ..., K-1} and returns the Neumann estimate of [grad g(x)]^{-1}.
template <CompositeModel M>
InverseEstimate neumann_inverse(const M& model, std::span<const double> x, std::size_t K, double c, Stream& rng) {
  if (K < 1) throw ArgumentError("Neumann truncation K must be >= 1");
  const auto k = static_cast<std::size_t>(rng.below(K));
  return neumann_inverse_with_index(model, x, K, c, k, rng);
}

/// Mirror estimator with its three random objects on caller-chosen streams:
///   v_F(x) = A^{-T} B^{-T} grad phi^T grad f + lambda x,   c = 2.
template <CompositeModel M>
GradientSample grad_estimate_mirror(const M& model, std::span<const double> x, std::size_t K, double lambda,
                                    Stream& stream_a, Stream& stream_b, Stream& stream_xi) {
  if (!(lambda >= 0.0)) throw ArgumentError("regularization lambda must be >= 0");
  const InverseEstimate a = neumann_inverse(model, x, K, 2.0, stream_a);
  const InverseEstimate b = neumann_inverse(model, x, K, 2.0, stream_b);
  GradientSample s = grad_estimate_plain(model, x, stream_xi);
  for (std::size_t i = 0; i < x.size(); ++i) s.vector[i] = a.diagonal[i] * (b.diagonal[i] * s.vector[i]) + lambda * x[i];
  s.kind = GradientKind::Mirror;
  s.samples_used = a.samples_used + b.samples_used + 1;
  return s;
}

/// Mirror estimator on three substreams split off `rng`.
template <CompositeModel M>
GradientSample grad_estimate_mirror(const M& model, std::span<const double> x, std::size_t K, double lambda,
                                    Stream& rng) {
  Stream a = rng.split();
  Stream b = rng.split();
  Stream xi = rng.split();
  return grad_estimate_mirror(model, x, K, lambda, a, b, xi);
}

/// SAA+SG gradient at a known x = g_hat^{-1}(u) for a given frozen sample xi'.
template <CompositeModel M>
Vector saa_reform_term(const EmpiricalTransform& t, const M& model, std::span<const double> x,
                       std::span<const double> xi_prime, Stream& rng) {
  const Vector dg = t.gradient(x);
  for (std::size_t i = 0; i < dg.size(); ++i)
    if (!(dg[i] > 0.0))
      throw SingularTransformError("empirical transform has zero slope; shrink the image box", i);
  Vector v = chain_rule_term(model, x, xi_prime, rng);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] /= dg[i];
  return v;
}

/// v(u) = grad g_hat(x)^{-T} grad phi(x, xi')^T grad f(phi(x, xi')),  x = g_hat^{-1}(u),
/// with xi' drawn uniformly from the frozen sample set.
template <CompositeModel M>
GradientSample grad_estimate_saa_reform(const EmpiricalTransform& t, const M& model, std::span<const double> u,
                                        Stream& rng) {
  const Vector x = t.inverse(u);
  const Vector& xi_prime = t.samples()[static_cast<std::size_t>(rng.below(t.n()))];
  return {saa_reform_term(t, model, x, xi_prime, rng), GradientKind::SaaReform, 1};
}

/// [v~]_i = [grad f(x_i, x_{-i} ^ xi'_{-i})]_i for a given xi' (TruncMin only).
template <CompositeModel M>
Vector coord_reform_term(const M& model, std::span<const double> x, std::span<const double> xi_prime, Stream& rng) {
  if (model.phi().kind != PhiKind::TruncMin)
    throw UnsupportedError("coordinate reformulation estimator requires the TruncMin family");
  require_same_size(x.size(), xi_prime.size(), "coordinate estimator xi'");
  Vector truncated(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) truncated[j] = std::min(x[j], xi_prime[j]);
  Vector v(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    Vector y = truncated;
    y[i] = x[i];
    v[i] = model.outer_gradient(y, rng)[i];
  }
  return v;
}

/// Low-variance gradient of the empirical reformulation for TruncMin. Each
/// coordinate of xi' is drawn independently from its frozen marginal, so the
/// estimator is unbiased for the reformulation under the product of the
/// empirical marginals (equal to the joint one whenever f is separable).
template <CompositeModel M>
GradientSample grad_estimate_coord_reform(const EmpiricalTransform& t, const M& model, std::span<const double> u,
                                          Stream& rng) {
  if (model.phi().kind != PhiKind::TruncMin)
    throw UnsupportedError("coordinate reformulation estimator requires the TruncMin family");
  const Vector x = t.inverse(u);
  Vector xi_prime(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) xi_prime[j] = t.samples()[static_cast<std::size_t>(rng.below(t.n()))][j];
  return {coord_reform_term(model, x, xi_prime, rng), GradientKind::CoordReform, 1};
}

}  // namespace hcopt
