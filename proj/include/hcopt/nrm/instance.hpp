#pragma once

// Network revenue management instances and scenario sampling.

#include <cmath>
#include <string>
#include <tuple>
#include <vector>

#include "hcopt/distributions.hpp"
#include "hcopt/problem.hpp"

namespace hcopt::nrm {

enum class NetworkMode { Passenger, AirCargo };
enum class ShowUpModel { AllShowUp, Poisson, Binomial };

inline std::string to_string(ShowUpModel s) {
  switch (s) {
    case ShowUpModel::AllShowUp: return "all";
    case ShowUpModel::Poisson: return "poisson";
    case ShowUpModel::Binomial: return "binomial";
  }
  return "?";
}

using Route = std::vector<std::size_t>;  // 0-based leg indices

struct NrmInstance {
  std::string label;
  NetworkMode mode = NetworkMode::Passenger;
  std::size_t num_classes = 0;
  std::size_t num_legs = 0;

  // Passenger: consumption[j][i] = units of leg j used by class i.
  std::vector<Vector> consumption;
  Vector revenue;
  Vector penalty;

  // Air-cargo: per class, the list of admissible routes.
  std::vector<std::vector<Route>> routes;
  Vector tariff;  // theta_1 per class
  double theta2 = 0.6;
  double penalty_multiplier = 2.4;
  std::vector<Distribution> weight;
  std::vector<Distribution> volume;
  double consumption_corr = 0.8;
  std::vector<Distribution> capacity_volume;
  double capacity_corr = 0.8;

  std::vector<Distribution> demand;
  std::vector<Distribution> capacity;  // passenger seats or air-cargo weight capacity
  ShowUpModel show_up = ShowUpModel::AllShowUp;
  Vector show_prob;
  double x_upper = 100.0;

  void validate() const {
    const std::size_t d = num_classes, m = num_legs;
    if (d == 0 || m == 0) throw InstanceError("instance needs at least one class and one leg");
    if (demand.size() != d) throw InstanceError("demand distributions must be given per class");
    if (capacity.size() != m) throw InstanceError("capacity distributions must be given per leg");
    if (show_prob.size() != d) throw InstanceError("show-up probabilities must be given per class");
    for (double p : show_prob)
      if (!(p > 0.0 && p <= 1.0)) throw InstanceError("show-up probabilities must lie in (0, 1]");
    if (!(x_upper > 0.0)) throw InstanceError("booking-limit upper bound must be positive");
    if (mode == NetworkMode::Passenger) {
      if (consumption.size() != m) throw InstanceError("consumption matrix needs one row per leg");
      for (const auto& row : consumption) {
        if (row.size() != d) throw InstanceError("consumption matrix needs one column per class");
        for (double a : row)
          if (!(a >= 0.0) || a != std::floor(a)) throw InstanceError("consumption entries must be nonnegative integers");
      }
      if (revenue.size() != d || penalty.size() != d) throw InstanceError("revenue and penalty must be given per class");
    } else {
      if (routes.size() != d || tariff.size() != d || weight.size() != d || volume.size() != d)
        throw InstanceError("air-cargo routes, tariffs, weights and volumes must be given per class");
      for (const auto& rs : routes) {
        if (rs.empty()) throw InstanceError("every air-cargo class needs at least one route");
        for (const auto& r : rs)
          for (std::size_t j : r)
            if (j >= m) throw InstanceError("route references an unknown leg");
      }
      if (capacity_volume.size() != m) throw InstanceError("volume capacities must be given per leg");
      if (!(theta2 > 0.0)) throw InstanceError("theta2 must be positive");
      if (!(std::abs(consumption_corr) <= 1.0) || !(std::abs(capacity_corr) <= 1.0))
        throw InstanceError("correlations must lie in [-1, 1]");
    }
  }
};

/// Everything random about one service stage except the show-ups.
struct ServiceScenario {
  Vector demand;
  Vector capacity;
  Vector capacity_volume;
  Vector weight;
  Vector volume;
};

namespace stream_tag {
inline constexpr std::uint64_t kDemand = 11;
inline constexpr std::uint64_t kCapacity = 12;
inline constexpr std::uint64_t kConsumption = 13;
inline constexpr std::uint64_t kShowUp = 14;
}  // namespace stream_tag

/// Two marginals joined by a Gaussian copula with correlation rho.
inline std::pair<double, double> sample_copula_pair(const Distribution& a, const Distribution& b, double rho,
                                                    Stream& rng) {
  const double z1 = rng.normal();
  const double z2 = rho * z1 + std::sqrt(std::max(0.0, 1.0 - rho * rho)) * rng.normal();
  auto to_u = [](double z) { return std::clamp(normal_cdf(z), 1e-16, 1.0 - 1e-16); };
  return {a.quantile(to_u(z1)), b.quantile(to_u(z2))};
}

inline Vector sample_demand(const NrmInstance& inst, Stream& rng) {
  Vector d(inst.num_classes);
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = inst.demand[i].sample(rng);
  return d;
}

/// Capacities and consumptions; the demand is drawn separately.
inline void sample_environment(const NrmInstance& inst, ServiceScenario& sc, Stream& rng) {
  const std::size_t m = inst.num_legs, d = inst.num_classes;
  Stream cap = rng.substream(stream_tag::kCapacity);
  sc.capacity.assign(m, 0.0);
  if (inst.mode == NetworkMode::Passenger) {
    for (std::size_t j = 0; j < m; ++j) sc.capacity[j] = inst.capacity[j].sample(cap);
    return;
  }
  sc.capacity_volume.assign(m, 0.0);
  for (std::size_t j = 0; j < m; ++j)
    std::tie(sc.capacity[j], sc.capacity_volume[j]) =
        sample_copula_pair(inst.capacity[j], inst.capacity_volume[j], inst.capacity_corr, cap);
  Stream cons = rng.substream(stream_tag::kConsumption);
  sc.weight.assign(d, 0.0);
  sc.volume.assign(d, 0.0);
  for (std::size_t i = 0; i < d; ++i)
    std::tie(sc.weight[i], sc.volume[i]) =
        sample_copula_pair(inst.weight[i], inst.volume[i], inst.consumption_corr, cons);
}

/// Full scenario on one stream: demand, capacities, consumptions.
inline ServiceScenario sample_scenario(const NrmInstance& inst, const Stream& rng) {
  ServiceScenario sc;
  Stream dem = rng.substream(stream_tag::kDemand);
  sc.demand = sample_demand(inst, dem);
  Stream env = rng;
  sample_environment(inst, sc, env);
  return sc;
}

/// Show-ups for possibly fractional accepted counts. Class i draws from
/// substream i, so the draw of one class does not depend on the others.
inline Vector sample_show_ups(ShowUpModel model, std::span<const double> p, std::span<const double> accepted,
                              const Stream& rng) {
  require_same_size(p.size(), accepted.size(), "show-up probabilities");
  Vector z(accepted.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (!(accepted[i] >= 0.0)) throw ArgumentError("accepted reservations must be nonnegative");
    Stream s = rng.substream(i);
    switch (model) {
      case ShowUpModel::AllShowUp: z[i] = accepted[i]; break;
      case ShowUpModel::Poisson: z[i] = static_cast<double>(s.poisson(p[i] * accepted[i])); break;
      case ShowUpModel::Binomial: {
        const double fl = std::floor(accepted[i]);
        const double frac = accepted[i] - fl;
        // trials = floor(a) w.p. floor(a)+1-a, else floor(a)+1
        const double u = s.uniform();
        const auto trials = static_cast<std::uint64_t>(fl) + (u < frac ? 1u : 0u);
        Stream trials_stream = s.substream(1);
        z[i] = static_cast<double>(trials_stream.binomial(trials, p[i]));
        break;
      }
    }
  }
  return z;
}

inline Vector sample_show_ups(const NrmInstance& inst, std::span<const double> accepted, const Stream& rng) {
  return sample_show_ups(inst.show_up, inst.show_prob, accepted, rng);
}

/// Per-unit revenue in a scenario.
inline Vector scenario_revenue(const NrmInstance& inst, const ServiceScenario& sc) {
  if (inst.mode == NetworkMode::Passenger) return inst.revenue;
  Vector r(inst.num_classes);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = inst.tariff[i] * std::max(sc.weight[i], sc.volume[i] / inst.theta2);
  return r;
}

/// Per-unit rejection penalty in a scenario.
inline Vector scenario_penalty(const NrmInstance& inst, const ServiceScenario& sc) {
  if (inst.mode == NetworkMode::Passenger) return inst.penalty;
  Vector l = scenario_revenue(inst, sc);
  for (double& v : l) v *= inst.penalty_multiplier;
  return l;
}

/// Largest possible per-unit revenue and penalty (used for Lipschitz bounds).
inline std::pair<double, double> revenue_penalty_bounds(const NrmInstance& inst) {
  double rmax = 0.0, lmax = 0.0;
  if (inst.mode == NetworkMode::Passenger) {
    for (double r : inst.revenue) rmax = std::max(rmax, r);
    for (double l : inst.penalty) lmax = std::max(lmax, l);
  } else {
    for (std::size_t i = 0; i < inst.num_classes; ++i) {
      // a high quantile stands in for the unbounded truncated-normal support
      const double w = inst.weight[i].quantile(1.0 - 1e-6), v = inst.volume[i].quantile(1.0 - 1e-6);
      rmax = std::max(rmax, inst.tariff[i] * std::max(w, v / inst.theta2));
    }
    lmax = inst.penalty_multiplier * rmax;
  }
  return {rmax, lmax};
}

}  // namespace hcopt::nrm
