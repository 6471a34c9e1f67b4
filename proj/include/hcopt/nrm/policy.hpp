#pragma once

// DLP baseline, frozen-scenario policy evaluation, paired comparison and
// exhaustive integer-policy enumeration.

#include <boost/math/distributions/students_t.hpp>
#include <cstdint>
#include <unordered_map>

#include "hcopt/nrm/gamma.hpp"
#include "hcopt/nrm/instance.hpp"

namespace hcopt::nrm {

struct DlpResult {
  Vector limits;     // x
  Vector served;     // w
  Vector bid_prices; // duals of the capacity rows (weight rows for air-cargo)
  double objective = 0.0;
};

/// max r^T x - l^T (p x - w)  s.t.  A w <= E[c],  x <= E[D],  w <= p x.
inline DlpResult dlp_booking_limits(const NrmInstance& inst) {
  inst.validate();
  const std::size_t d = inst.num_classes, m = inst.num_legs;
  Vector er(d), el(d);
  std::size_t ny = 0;
  std::vector<std::size_t> offsets;
  if (inst.mode == NetworkMode::Passenger) {
    er = inst.revenue;
    el = inst.penalty;
  } else {
    for (std::size_t i = 0; i < d; ++i) {
      er[i] = inst.tariff[i] * std::max(inst.weight[i].mean(), inst.volume[i].mean() / inst.theta2);
      el[i] = inst.penalty_multiplier * er[i];
      offsets.push_back(ny);
      ny += inst.routes[i].size();
    }
  }
  // variables: [x (d) | w (d) | y (ny, air-cargo)]
  const std::size_t n = 2 * d + ny;
  Vector cost(n, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    cost[i] = er[i] - el[i] * inst.show_prob[i];
    cost[d + i] = el[i];
  }
  LpProblem lp(Sense::Maximize, cost);
  Vector row(n, 0.0);
  if (inst.mode == NetworkMode::Passenger) {
    for (std::size_t j = 0; j < m; ++j) {
      std::fill(row.begin(), row.end(), 0.0);
      for (std::size_t i = 0; i < d; ++i) row[d + i] = inst.consumption[j][i];
      lp.add_row(row, RowType::LessEqual, inst.capacity[j].mean());
    }
  } else {
    for (int dim = 0; dim < 2; ++dim)
      for (std::size_t j = 0; j < m; ++j) {
        std::fill(row.begin(), row.end(), 0.0);
        for (std::size_t i = 0; i < d; ++i) {
          const double use = dim == 0 ? inst.weight[i].mean() : inst.volume[i].mean();
          for (std::size_t k = 0; k < inst.routes[i].size(); ++k)
            for (std::size_t leg : inst.routes[i][k])
              if (leg == j) row[2 * d + offsets[i] + k] += use;
        }
        lp.add_row(row, RowType::LessEqual, dim == 0 ? inst.capacity[j].mean() : inst.capacity_volume[j].mean());
      }
    for (std::size_t i = 0; i < d; ++i) {
      std::fill(row.begin(), row.end(), 0.0);
      row[d + i] = 1.0;
      for (std::size_t k = 0; k < inst.routes[i].size(); ++k) row[2 * d + offsets[i] + k] = -1.0;
      lp.add_row(row, RowType::Equal, 0.0);
    }
  }
  for (std::size_t i = 0; i < d; ++i) {
    std::fill(row.begin(), row.end(), 0.0);
    row[i] = 1.0;
    lp.add_row(row, RowType::LessEqual, inst.demand[i].mean());
  }
  for (std::size_t i = 0; i < d; ++i) {
    std::fill(row.begin(), row.end(), 0.0);
    row[d + i] = 1.0;
    row[i] = -inst.show_prob[i];
    lp.add_row(row, RowType::LessEqual, 0.0);
  }
  const LpSolution s = solve_lp(lp);
  if (!s.optimal()) throw InternalError("DLP solve failed: " + to_string(s.status));
  DlpResult out;
  out.limits.assign(s.primal.begin(), s.primal.begin() + static_cast<std::ptrdiff_t>(d));
  out.served.assign(s.primal.begin() + static_cast<std::ptrdiff_t>(d), s.primal.begin() + static_cast<std::ptrdiff_t>(2 * d));
  out.bid_prices.assign(s.dual.begin(), s.dual.begin() + static_cast<std::ptrdiff_t>(m));
  for (double& v : out.bid_prices) v = v == 0.0 ? 0.0 : v;
  out.objective = s.objective;
  return out;
}

/// A frozen set of service scenarios with their show-up streams.
struct ScenarioSet {
  std::vector<ServiceScenario> scenarios;
  std::vector<Stream> show_streams;
  std::uint64_t seed = 0;

  std::size_t size() const { return scenarios.size(); }
};

inline constexpr std::uint64_t kEvaluationTag = 0x5000;

inline ScenarioSet freeze_scenarios(const NrmInstance& inst, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ArgumentError("n_scenarios must be >= 1");
  inst.validate();
  ScenarioSet set;
  set.seed = seed;
  set.scenarios.reserve(n);
  set.show_streams.reserve(n);
  const Stream root = Stream(seed).substream(kEvaluationTag);
  for (std::size_t s = 0; s < n; ++s) {
    const Stream st = root.substream(s);
    set.scenarios.push_back(sample_scenario(inst, st));
    set.show_streams.push_back(st.substream(stream_tag::kShowUp));
  }
  return set;
}

/// Booking limits rounded to the nearest nonnegative integer.
inline Vector round_limits(std::span<const double> x) {
  Vector r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r[i] = std::max(0.0, std::round(x[i]));
  return r;
}

/// Revenue of one scenario given already-rounded limits.
inline double scenario_revenue_value(const NrmInstance& inst, GammaEvaluator& gamma, const ServiceScenario& sc,
                                     const Stream& show, std::span<const double> limits) {
  Vector acc(limits.size());
  bool any = false;
  for (std::size_t i = 0; i < acc.size(); ++i) {
    acc[i] = std::min(limits[i], sc.demand[i]);
    any = any || acc[i] > 0.0;
  }
  if (!any) return 0.0;
  const Vector z = sample_show_ups(inst, acc, show);
  const Vector r = scenario_revenue(inst, sc);
  const Vector l = scenario_penalty(inst, sc);
  double rev = 0.0;
  for (std::size_t i = 0; i < acc.size(); ++i) rev += r[i] * acc[i];
  return rev - gamma(z, sc, l).penalty;
}

struct PolicyEvaluation {
  Vector limits;    // rounded
  double mean = 0.0;
  double std_error = 0.0;
  Vector revenues;  // per scenario, in scenario order
};

inline PolicyEvaluation evaluate_policy(const NrmInstance& inst, std::span<const double> x, const ScenarioSet& set) {
  require_same_size(inst.num_classes, x.size(), "booking limits");
  PolicyEvaluation ev;
  ev.limits = round_limits(x);
  GammaEvaluator gamma(inst);
  Accumulator acc(1);
  ev.revenues.reserve(set.size());
  for (std::size_t s = 0; s < set.size(); ++s) {
    const double v = scenario_revenue_value(inst, gamma, set.scenarios[s], set.show_streams[s], ev.limits);
    ev.revenues.push_back(v);
    acc.add(std::span<const double>(&v, 1));
  }
  ev.mean = acc.mean()[0];
  ev.std_error = acc.std_error()[0];
  return ev;
}

inline PolicyEvaluation evaluate_policy(const NrmInstance& inst, std::span<const double> x, std::size_t n_scenarios,
                                        std::uint64_t seed) {
  return evaluate_policy(inst, x, freeze_scenarios(inst, n_scenarios, seed));
}

struct PairedComparison {
  double mean_difference = 0.0;  // a - b
  double std_error = 0.0;
  double t_statistic = 0.0;
  double relative_improvement = 0.0;  // (mean_a - mean_b) / |mean_b|
  bool significant = false;           // two-sided paired t at the given level
};

/// Paired t-test on scenario-wise revenues of two policies on the same scenarios.
inline PairedComparison paired_compare(std::span<const double> a, std::span<const double> b, double level = 0.95) {
  require_same_size(a.size(), b.size(), "paired revenues");
  if (a.size() < 2) throw ArgumentError("paired comparison needs at least two scenarios");
  Accumulator diff(1), base(1);
  for (std::size_t s = 0; s < a.size(); ++s) {
    const double dv = a[s] - b[s];
    diff.add(std::span<const double>(&dv, 1));
    base.add(std::span<const double>(&b[s], 1));
  }
  PairedComparison c;
  c.mean_difference = diff.mean()[0];
  c.std_error = diff.std_error()[0];
  const double mb = base.mean()[0];
  c.relative_improvement = mb != 0.0 ? c.mean_difference / std::abs(mb) : 0.0;
  if (c.std_error > 0.0) {
    c.t_statistic = c.mean_difference / c.std_error;
    const boost::math::students_t dist(static_cast<double>(a.size() - 1));
    const double crit = boost::math::quantile(dist, 0.5 + 0.5 * level);
    c.significant = std::abs(c.t_statistic) > crit;
  } else {
    c.t_statistic = 0.0;
    c.significant = c.mean_difference != 0.0;
  }
  return c;
}

struct EnumerationResult {
  Vector best_limits;
  double best_mean = 0.0;
  std::size_t policies = 0;
  std::size_t lp_solves = 0;
};

/// Exhaustive search over integer limits {0..max_limit}^d on a frozen scenario set.
/// Revenue in a scenario depends on the limits only through min(x, D), so
/// each scenario caches its values by accepted vector.
inline EnumerationResult enumerate_best_policy(const NrmInstance& inst, const ScenarioSet& set,
                                               std::uint32_t max_limit) {
  const std::size_t d = inst.num_classes;
  if (max_limit > 255 || d > 8) throw ArgumentError("enumeration supports d <= 8 and limits <= 255");
  double count = 1.0;
  for (std::size_t i = 0; i < d; ++i) count *= static_cast<double>(max_limit + 1);
  if (count > 5e6) throw ArgumentError("enumeration cost guard: too many integer policies");
  const auto np = static_cast<std::size_t>(count);
  std::vector<double> sums(np, 0.0);
  GammaEvaluator gamma(inst);
  EnumerationResult res;
  res.policies = np;
  std::unordered_map<std::uint64_t, double> cache;
  Vector limits(d), acc(d);
  for (std::size_t s = 0; s < set.size(); ++s) {
    const ServiceScenario& sc = set.scenarios[s];
    cache.clear();
    for (std::size_t p = 0; p < np; ++p) {
      std::size_t rem = p;
      std::uint64_t key = 0;
      for (std::size_t i = d; i-- > 0;) {
        limits[i] = static_cast<double>(rem % (max_limit + 1));
        rem /= (max_limit + 1);
      }
      for (std::size_t i = 0; i < d; ++i) {
        acc[i] = std::min(limits[i], sc.demand[i]);
        if (acc[i] != std::floor(acc[i])) throw ArgumentError("enumeration requires integer-valued demand");
        key = (key << 8) | static_cast<std::uint64_t>(acc[i]);
      }
      auto it = cache.find(key);
      if (it == cache.end()) {
        it = cache.emplace(key, scenario_revenue_value(inst, gamma, sc, set.show_streams[s], acc)).first;
        ++res.lp_solves;
      }
      sums[p] += it->second;
    }
  }
  std::size_t best = 0;
  for (std::size_t p = 1; p < np; ++p)
    if (sums[p] > sums[best]) best = p;
  res.best_limits.assign(d, 0.0);
  std::size_t rem = best;
  for (std::size_t i = d; i-- > 0;) {
    res.best_limits[i] = static_cast<double>(rem % (max_limit + 1));
    rem /= (max_limit + 1);
  }
  res.best_mean = sums[best] / static_cast<double>(set.size());
  return res;
}

}  // namespace hcopt::nrm
