#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <boost/math/special_functions/erf.hpp>

#include "hcopt/error.hpp"
#include "hcopt/rng.hpp"

namespace hcopt {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ArgumentError("normal_quantile requires p in (0, 1)");
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

struct UniformDist {
  double a = 0.0;
  double b = 1.0;
};

/// Normal(mu, sigma) conditioned on [0, inf).
struct TruncNormalDist {
  double mu = 0.0;
  double sigma = 1.0;
};

struct DiscreteDist {
  std::vector<double> support;
  std::vector<double> weights;  // normalized on construction
};

struct PoissonDist {
  double mean = 0.0;
};

struct BinomialDist {
  std::uint64_t trials = 0;
  double p = 0.0;
};

/// A univariate law on the real line. Value type; immutable once built.
class Distribution {
 public:
  using Law = std::variant<UniformDist, TruncNormalDist, DiscreteDist, PoissonDist, BinomialDist>;

  Distribution() : law_(UniformDist{}) {}

  static Distribution uniform(double a, double b) {
    if (!(a < b) || !std::isfinite(a) || !std::isfinite(b)) throw ArgumentError("uniform(a, b) requires a < b");
    return Distribution(UniformDist{a, b});
  }

  static Distribution trunc_normal(double mu, double sigma) {
    if (!std::isfinite(mu) || !(sigma >= 0.0)) throw ArgumentError("trunc_normal requires finite mu and sigma >= 0");
    if (sigma == 0.0) {
      if (mu < 0.0) throw ArgumentError("trunc_normal with sigma = 0 requires mu >= 0");
      return point_mass(mu);
    }
    if (normal_cdf(mu / sigma) < 1e-12) throw ArgumentError("trunc_normal has negligible mass on [0, inf)");
    return Distribution(TruncNormalDist{mu, sigma});
  }

  static Distribution discrete(std::vector<double> support, std::vector<double> weights) {
    if (support.empty() || support.size() != weights.size())
      throw ArgumentError("discrete distribution needs matching non-empty support and weights");
    double total = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) throw ArgumentError("discrete weights must be non-negative");
      total += w;
    }
    if (!(total > 0.0)) throw ArgumentError("discrete weights must not all be zero");
    std::vector<std::size_t> order(support.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return support[i] < support[j]; });
    DiscreteDist d;
    for (auto i : order) {
      d.support.push_back(support[i]);
      d.weights.push_back(weights[i] / total);
    }
    return Distribution(std::move(d));
  }

  static Distribution point_mass(double value) { return discrete({value}, {1.0}); }

  static Distribution poisson(double mean) {
    if (!(mean >= 0.0) || !std::isfinite(mean)) throw ArgumentError("poisson mean must be finite and >= 0");
    return Distribution(PoissonDist{mean});
  }

  static Distribution binomial(std::uint64_t trials, double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw ArgumentError("binomial p must lie in [0, 1]");
    return Distribution(BinomialDist{trials, p});
  }

  const Law& law() const { return law_; }

  template <class T>
  bool is() const {
    return std::holds_alternative<T>(law_);
  }

  double sample(Stream& rng) const {
    return std::visit(
        [&](const auto& d) -> double {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, UniformDist>) {
            return rng.uniform(d.a, d.b);
          } else if constexpr (std::is_same_v<T, TruncNormalDist>) {
            if (normal_cdf(d.mu / d.sigma) >= 0.05) {
              for (;;) {
                const double v = rng.normal(d.mu, d.sigma);
                if (v >= 0.0) return v;
              }
            }
            return quantile_trunc_normal(d, rng.uniform_open());
          } else if constexpr (std::is_same_v<T, DiscreteDist>) {
            return d.support[rng.discrete(d.weights)];
          } else if constexpr (std::is_same_v<T, PoissonDist>) {
            return rng.poisson(d.mean);
          } else {
            return rng.binomial(d.trials, d.p);
          }
        },
        law_);
  }

  /// Inverse CDF; continuous laws only (used by the Gaussian copula).
  double quantile(double p) const {
    if (const auto* u = std::get_if<UniformDist>(&law_)) return u->a + p * (u->b - u->a);
    if (const auto* t = std::get_if<TruncNormalDist>(&law_)) return quantile_trunc_normal(*t, p);
    if (const auto* d = std::get_if<DiscreteDist>(&law_)) {
      double acc = 0.0;
      for (std::size_t i = 0; i < d->support.size(); ++i) {
        acc += d->weights[i];
        if (p < acc) return d->support[i];
      }
      return d->support.back();
    }
    throw UnsupportedError("quantile is not implemented for count distributions");
  }

  /// P(xi <= x).
  double cdf(double x) const {
    return std::visit(
        [&](const auto& d) -> double {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, UniformDist>) {
            return std::clamp((x - d.a) / (d.b - d.a), 0.0, 1.0);
          } else if constexpr (std::is_same_v<T, TruncNormalDist>) {
            if (x < 0.0) return 0.0;
            const double lo = normal_cdf(-d.mu / d.sigma);
            return (normal_cdf((x - d.mu) / d.sigma) - lo) / (1.0 - lo);
          } else if constexpr (std::is_same_v<T, DiscreteDist>) {
            double acc = 0.0;
            for (std::size_t i = 0; i < d.support.size() && d.support[i] <= x; ++i) acc += d.weights[i];
            return std::min(acc, 1.0);
          } else if constexpr (std::is_same_v<T, PoissonDist>) {
            if (x < 0.0) return 0.0;
            double p = std::exp(-d.mean), acc = 0.0;
            for (double k = 0.0; k <= std::floor(x); k += 1.0) {
              acc += p;
              p *= d.mean / (k + 1.0);
            }
            return std::min(acc, 1.0);
          } else {
            if (x < 0.0) return 0.0;
            double acc = 0.0;
            const auto n = static_cast<double>(d.trials);
            for (double k = 0.0; k <= std::min(std::floor(x), n); k += 1.0)
              acc += std::exp(std::lgamma(n + 1) - std::lgamma(k + 1) - std::lgamma(n - k + 1) +
                              (d.p > 0 ? k * std::log(d.p) : (k == 0 ? 0.0 : -INFINITY)) +
                              (d.p < 1 ? (n - k) * std::log1p(-d.p) : (n - k == 0 ? 0.0 : -INFINITY)));
            return std::min(acc, 1.0);
          }
        },
        law_);
  }

  double mean() const {
    return std::visit(
        [](const auto& d) -> double {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, UniformDist>) {
            return 0.5 * (d.a + d.b);
          } else if constexpr (std::is_same_v<T, TruncNormalDist>) {
            const double alpha = -d.mu / d.sigma;
            const double pdf = std::exp(-0.5 * alpha * alpha) / std::sqrt(2.0 * std::numbers::pi);
            return d.mu + d.sigma * pdf / (1.0 - normal_cdf(alpha));
          } else if constexpr (std::is_same_v<T, DiscreteDist>) {
            double m = 0.0;
            for (std::size_t i = 0; i < d.support.size(); ++i) m += d.support[i] * d.weights[i];
            return m;
          } else if constexpr (std::is_same_v<T, PoissonDist>) {
            return d.mean;
          } else {
            return static_cast<double>(d.trials) * d.p;
          }
        },
        law_);
  }

  /// Lower end of the support.
  double ess_inf() const {
    if (const auto* u = std::get_if<UniformDist>(&law_)) return u->a;
    if (const auto* d = std::get_if<DiscreteDist>(&law_)) return d->support.front();
    return 0.0;
  }

  /// Upper end of the support (may be +inf).
  double ess_sup() const {
    if (const auto* u = std::get_if<UniformDist>(&law_)) return u->b;
    if (const auto* d = std::get_if<DiscreteDist>(&law_)) {
      for (std::size_t i = d->support.size(); i-- > 0;)
        if (d->weights[i] > 0.0) return d->support[i];
    }
    if (const auto* b = std::get_if<BinomialDist>(&law_)) return static_cast<double>(b->trials);
    return std::numeric_limits<double>::infinity();
  }

  /// Canonical text, parseable back into the same law.
  std::string describe() const {
    auto num = [](double v) {
      char buf[32];
      return std::string(buf, std::to_chars(buf, buf + sizeof buf, v).ptr);
    };
    std::string out;
    std::visit(
        [&](const auto& d) {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, UniformDist>) {
            out = "uniform(" + num(d.a) + ", " + num(d.b) + ")";
          } else if constexpr (std::is_same_v<T, TruncNormalDist>) {
            out = "truncnormal(" + num(d.mu) + ", " + num(d.sigma) + ")";
          } else if constexpr (std::is_same_v<T, DiscreteDist>) {
            out = "discrete(";
            for (std::size_t i = 0; i < d.support.size(); ++i)
              out += (i ? ", " : "") + num(d.support[i]) + ":" + num(d.weights[i]);
            out += ")";
          } else if constexpr (std::is_same_v<T, PoissonDist>) {
            out = "poisson(" + num(d.mean) + ")";
          } else {
            out = "binomial(" + std::to_string(d.trials) + ", " + num(d.p) + ")";
          }
        },
        law_);
    return out;
  }

 private:
  explicit Distribution(Law law) : law_(std::move(law)) {}

  static double quantile_trunc_normal(const TruncNormalDist& d, double p) {
    const double lo = normal_cdf(-d.mu / d.sigma);
    const double q = lo + p * (1.0 - lo);
    if (q <= 0.0) return 0.0;
    if (q >= 1.0) return std::numeric_limits<double>::infinity();
    return std::max(0.0, d.mu + d.sigma * normal_quantile(q));
  }

  Law law_;
};

}  // namespace hcopt
