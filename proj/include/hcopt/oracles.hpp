#pragma once

// Brute-force and analytic reference values for small problems.

#include <cmath>
#include <optional>
#include <string>

#include "hcopt/distributions.hpp"
#include "hcopt/problem.hpp"

namespace hcopt {

enum class OracleMethod { GridSearch, ClosedForm, Enumeration };

inline std::string to_string(OracleMethod m) {
  switch (m) {
    case OracleMethod::GridSearch: return "grid_search";
    case OracleMethod::ClosedForm: return "closed_form";
    case OracleMethod::Enumeration: return "enumeration";
  }
  return "?";
}

struct OracleResult {
  double value = 0.0;
  double std_error = 0.0;
  std::optional<Vector> argmin;
  OracleMethod method = OracleMethod::GridSearch;
  double resolution = 0.0;
  std::size_t evaluations = 0;
};

struct FiniteDiffOptions {
  bool allow_one_sided = true;
};

struct FiniteDiffResult {
  Vector gradient;
  Vector std_error;
  std::vector<bool> one_sided;  // true where a forward/backward difference was used
};

/// Central differences of the Monte-Carlo objective. Both evaluations of a
/// pair share every random draw, so the noise largely cancels.
template <CompositeModel M>
FiniteDiffResult finite_diff_grad(const M& model, std::span<const double> x, double h, std::size_t n_mc,
                                  std::uint64_t seed, FiniteDiffOptions opt = {}) {
  const BoxDomain& dom = model.domain();
  require_same_size(dom.dim(), x.size(), "finite-difference x");
  if (!(h > 0.0)) throw ArgumentError("finite-difference step h must be positive");
  if (n_mc == 0) throw ArgumentError("n_mc must be >= 1");
  if (!dom.contains(x)) throw ArgumentError("finite-difference point lies outside X");
  const std::size_t d = x.size();
  FiniteDiffResult res;
  res.gradient.assign(d, 0.0);
  res.std_error.assign(d, 0.0);
  res.one_sided.assign(d, false);
  const Stream root = Stream(seed).substream(0x7000);
  for (std::size_t i = 0; i < d; ++i) {
    Vector hi(x.begin(), x.end()), lo(x.begin(), x.end());
    const bool up_ok = x[i] + h <= dom.upper()[i];
    const bool down_ok = x[i] - h >= dom.lower()[i];
    double width = 2.0 * h;
    if (up_ok && down_ok) {
      hi[i] += h;
      lo[i] -= h;
    } else if (!opt.allow_one_sided) {
      throw ArgumentError("x is too close to the boundary of X for step h (coordinate " + std::to_string(i) + ")");
    } else if (up_ok) {
      hi[i] += h;
      width = h;
      res.one_sided[i] = true;
    } else if (down_ok) {
      lo[i] -= h;
      width = h;
      res.one_sided[i] = true;
    } else {
      throw ArgumentError("step h exceeds the width of X (coordinate " + std::to_string(i) + ")");
    }
    Accumulator acc(1);
    for (std::size_t j = 0; j < n_mc; ++j) {
      Stream a = root.substream(j);
      Stream b = a;
      const Vector xa = model.sample_xi(a);
      const double fa = model.outer_value(phi_eval(model.phi(), hi, xa), a);
      const Vector xb = model.sample_xi(b);
      const double fb = model.outer_value(phi_eval(model.phi(), lo, xb), b);
      acc.add((fa - fb) / width);
    }
    res.gradient[i] = acc.mean()[0];
    res.std_error[i] = acc.std_error()[0];
  }
  return res;
}

/// Exhaustive MC evaluation on a grid over X with one shared sample stream.
template <CompositeModel M>
OracleResult grid_global_min(const M& model, double grid_step, std::size_t n_mc, std::uint64_t seed) {
  const BoxDomain& dom = model.domain();
  const std::size_t d = dom.dim();
  if (d > 3) throw ArgumentError("grid oracle cost guard: dimension must be <= 3");
  if (!(grid_step > 0.0)) throw ArgumentError("grid_step must be positive");
  std::vector<Vector> axes(d);
  for (std::size_t i = 0; i < d; ++i) {
    const double lo = dom.lower()[i], hi = dom.upper()[i];
    const auto k = static_cast<std::size_t>(std::floor((hi - lo) / grid_step + 1e-9));
    for (std::size_t s = 0; s <= k; ++s) axes[i].push_back(std::min(hi, lo + static_cast<double>(s) * grid_step));
    if (hi - axes[i].back() > 1e-12) axes[i].push_back(hi);
  }
  double total = 1.0;
  for (const auto& a : axes) total *= static_cast<double>(a.size());
  if (total * static_cast<double>(n_mc) > 2e9) throw ArgumentError("grid oracle cost guard: too many evaluations");
  const Stream eval = Stream(seed).substream(0x7100);
  OracleResult best;
  best.method = OracleMethod::GridSearch;
  best.resolution = grid_step;
  best.value = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> idx(d, 0);
  Vector x(d);
  for (;;) {
    for (std::size_t i = 0; i < d; ++i) x[i] = axes[i][idx[i]];
    const auto [v, se] = estimate_objective(model, x, n_mc, eval);
    ++best.evaluations;
    if (v < best.value) {
      best.value = v;
      best.std_error = se;
      best.argmin = x;
    }
    std::size_t i = 0;
    while (i < d && ++idx[i] == axes[i].size()) idx[i++] = 0;
    if (i == d) break;
  }
  return best;
}

struct ClosedFormG {
  double value = 0.0;       // g(x) = E[min(x, xi)]
  double derivative = 0.0;  // 1 - H(x) = P(xi > x)
};

/// Exact g and g' for the TruncMin family.
inline ClosedFormG closed_form_g(const Distribution& dist, double x) {
  ClosedFormG out;
  if (const auto* u = std::get_if<UniformDist>(&dist.law())) {
    const double a = u->a, b = u->b;
    if (x <= a) {
      out.value = x;
      out.derivative = 1.0;
    } else if (x >= b) {
      out.value = 0.5 * (a + b);
      out.derivative = 0.0;
    } else {
      out.value = (0.5 * (x * x - a * a) + x * (b - x)) / (b - a);
      out.derivative = (b - x) / (b - a);
    }
    return out;
  }
  if (const auto* t = std::get_if<TruncNormalDist>(&dist.law())) {
    if (x <= 0.0) {
      out.value = x;
      out.derivative = 1.0;
      return out;
    }
    const double z = 1.0 - normal_cdf(-t->mu / t->sigma);
    const double alpha = -t->mu / t->sigma, beta = (x - t->mu) / t->sigma;
    auto pdf = [](double s) { return std::exp(-0.5 * s * s) / std::sqrt(2.0 * std::numbers::pi); };
    const double below = (t->mu * (normal_cdf(beta) - normal_cdf(alpha)) - t->sigma * (pdf(beta) - pdf(alpha))) / z;
    const double tail = (1.0 - normal_cdf(beta)) / z;
    out.value = below + x * tail;
    out.derivative = tail;
    return out;
  }
  if (const auto* d = std::get_if<DiscreteDist>(&dist.law())) {
    for (std::size_t k = 0; k < d->support.size(); ++k) {
      out.value += d->weights[k] * std::min(x, d->support[k]);
      if (d->support[k] > x) out.derivative += d->weights[k];
    }
    return out;
  }
  throw UnsupportedError("closed-form g is available for uniform, truncated-normal and discrete laws only");
}

/// Per-coordinate closed-form g for a TruncMin problem.
inline Vector closed_form_g(const Problem& p, std::span<const double> x) {
  if (p.phi().kind != PhiKind::TruncMin) throw UnsupportedError("closed-form g requires the TruncMin family");
  require_same_size(p.dim(), x.size(), "closed-form g x");
  Vector g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) g[i] = closed_form_g(p.sampler()[i], x[i]).value;
  return g;
}

}  // namespace hcopt
