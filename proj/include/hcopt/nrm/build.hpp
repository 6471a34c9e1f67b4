#pragma once

// Instance generators: passenger hub-and-spoke networks, air-cargo networks
// from a class table, and small explicit instances.

#include <fstream>
#include <sstream>

#include "hcopt/nrm/instance.hpp"

namespace hcopt::nrm {

enum class DemandLaw { Poisson, Binomial };

/// Passenger hub-and-spoke label (N, kappa, delta, sigma, p, rho, gamma) plus
/// the quantities the label leaves open.
struct HubSpokeSpec {
  std::size_t spokes = 4;          // N
  double kappa = 4.0;              // high / low fare ratio
  double delta = 1.0;              // l_i = delta r_i + sigma max r
  double sigma = 1.0;
  double show_prob = 0.9;          // p
  double load_factor = 1.2;        // rho
  double capacity_cv = 0.1;        // gamma
  double leg_capacity = 100.0;     // expected seats per leg
  double base_fare = 100.0;        // low fare of a one-leg itinerary before variation
  double high_fare_share = 0.25;   // fraction of OD demand on the high fare
  std::size_t periods = 240;       // horizon used by binomial demand totals
  DemandLaw demand_law = DemandLaw::Poisson;
  ShowUpModel show_up = ShowUpModel::Binomial;
  std::uint64_t seed = 2024;       // fixes fare and OD-weight variation
  double x_upper = 100.0;
};

inline Distribution demand_total(DemandLaw law, double mean, std::size_t periods) {
  if (law == DemandLaw::Poisson) return Distribution::poisson(mean);
  if (periods == 0) throw InstanceError("binomial demand totals need periods >= 1");
  const double p = mean / static_cast<double>(periods);
  if (p > 1.0) throw InstanceError("binomial demand total exceeds one arrival per period");
  return Distribution::binomial(periods, p);
}

inline Distribution capacity_law(double mean, double cv) {
  if (!(mean >= 0.0) || !(cv >= 0.0)) throw InstanceError("capacity mean and CV must be nonnegative");
  if (mean == 0.0) return Distribution::point_mass(0.0);
  return Distribution::trunc_normal(mean, cv * mean);
}

/// Nodes 0..N-1 are spokes, N is the hub. Leg j < N flies spoke j -> hub,
/// leg N + j flies hub -> spoke j. Every ordered node pair is an OD with a
/// low and a high fare (classes 2*od and 2*od+1).
inline NrmInstance build_hub_spoke(const HubSpokeSpec& s) {
  std::vector<std::string> bad;
  if (s.spokes < 1) bad.push_back("spokes");
  if (!(s.kappa >= 1.0)) bad.push_back("kappa");
  if (!(s.delta >= 0.0)) bad.push_back("delta");
  if (!(s.sigma >= 0.0)) bad.push_back("sigma");
  if (!(s.show_prob > 0.0 && s.show_prob <= 1.0)) bad.push_back("p");
  if (!(s.load_factor > 0.0)) bad.push_back("rho");
  if (!(s.capacity_cv >= 0.0)) bad.push_back("gamma");
  if (!(s.leg_capacity > 0.0)) bad.push_back("leg_capacity");
  if (!(s.high_fare_share > 0.0 && s.high_fare_share < 1.0)) bad.push_back("high_fare_share");
  if (!bad.empty()) {
    std::string msg = "invalid hub-spoke spec fields:";
    for (const auto& b : bad) msg += " " + b;
    throw InstanceError(msg);
  }
  const std::size_t n = s.spokes, hub = n, m = 2 * n;
  Stream rng = Stream(s.seed).substream(0x6000);
  NrmInstance inst;
  std::ostringstream label;
  label << "(" << n << "," << s.kappa << "," << s.delta << "," << s.sigma << "," << s.show_prob << ","
        << s.load_factor << "," << s.capacity_cv << ")";
  inst.label = label.str();
  inst.mode = NetworkMode::Passenger;
  inst.num_legs = m;
  inst.consumption.assign(m, Vector{});
  Vector od_weight;
  for (std::size_t o = 0; o <= n; ++o)
    for (std::size_t dst = 0; dst <= n; ++dst) {
      if (o == dst) continue;
      Vector col(m, 0.0);
      double legs = 0.0;
      if (o != hub) {
        col[o] = 1.0;
        legs += 1.0;
      }
      if (dst != hub) {
        col[n + dst] = 1.0;
        legs += 1.0;
      }
      const double low = s.base_fare * legs * rng.uniform(0.8, 1.2);
      const double w = rng.uniform(0.5, 1.5);
      for (int fare = 0; fare < 2; ++fare) {
        for (std::size_t j = 0; j < m; ++j) inst.consumption[j].push_back(col[j]);
        inst.revenue.push_back(fare == 0 ? low : s.kappa * low);
        od_weight.push_back(w * (fare == 0 ? 1.0 - s.high_fare_share : s.high_fare_share));
      }
    }
  const std::size_t d = inst.revenue.size();
  inst.num_classes = d;
  double rmax = 0.0;
  for (double r : inst.revenue) rmax = std::max(rmax, r);
  for (double r : inst.revenue) inst.penalty.push_back(s.delta * r + s.sigma * rmax);
  double wsum = 0.0;
  for (double w : od_weight) wsum += w;
  const double total_demand = s.load_factor * s.leg_capacity * static_cast<double>(m);
  for (std::size_t i = 0; i < d; ++i)
    inst.demand.push_back(demand_total(s.demand_law, total_demand * od_weight[i] / wsum, s.periods));
  for (std::size_t j = 0; j < m; ++j) inst.capacity.push_back(capacity_law(s.leg_capacity, s.capacity_cv));
  inst.show_up = s.show_up;
  inst.show_prob.assign(d, s.show_up == ShowUpModel::AllShowUp ? 1.0 : s.show_prob);
  inst.x_upper = s.x_upper;
  inst.validate();
  return inst;
}

struct CargoClass {
  std::size_t id = 0;
  double mean_weight = 0.0;
  double mean_volume = 0.0;
  std::size_t origin = 0;       // 1-based node, 5 is the hub
  std::size_t destination = 0;
  double per_unit_revenue = 0.0;
};

/// Whitespace-, comma- or '&'-delimited table: class, mean_weight, mean_volume,
/// origin, destination, per_unit_revenue. Lines starting with '#' and a
/// non-numeric header line are skipped.
inline std::vector<CargoClass> parse_cargo_table(std::istream& in, const std::string& source = "<table>") {
  std::vector<CargoClass> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    for (char& ch : line)
      if (ch == ',' || ch == '&' || ch == '\t' || ch == ';') ch = ' ';
    if (auto pos = line.find("\\\\"); pos != std::string::npos) line.erase(pos);
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first) || first[0] == '#') continue;
    if (!std::isdigit(static_cast<unsigned char>(first[0]))) {
      if (out.empty()) continue;  // header
      throw InstanceError(source + ":" + std::to_string(lineno) + ": expected a numeric class row");
    }
    CargoClass c;
    std::istringstream row(line);
    if (!(row >> c.id >> c.mean_weight >> c.mean_volume >> c.origin >> c.destination >> c.per_unit_revenue))
      throw InstanceError(source + ":" + std::to_string(lineno) + ": expected 6 columns");
    if (c.origin < 1 || c.origin > 5 || c.destination < 1 || c.destination > 5 || c.origin == c.destination)
      throw InstanceError(source + ":" + std::to_string(lineno) + ": origin/destination must be distinct nodes 1..5");
    if (!(c.mean_weight >= 0.0) || !(c.mean_volume >= 0.0) || !(c.per_unit_revenue >= 0.0))
      throw InstanceError(source + ":" + std::to_string(lineno) + ": weights, volumes and revenue must be >= 0");
    out.push_back(c);
  }
  if (out.empty()) throw InstanceError(source + ": no class rows found");
  return out;
}

inline std::vector<CargoClass> read_cargo_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InstanceError("cannot open class table: " + path);
  return parse_cargo_table(in, path);
}

/// Legs (0-based): 0..3 spoke k+1 -> hub 5, 4..7 hub 5 -> spoke k+1, 8 is 1 -> 3.
inline Route hub_route(std::size_t origin, std::size_t destination) {
  Route r;
  if (origin != 5) r.push_back(origin - 1);
  if (destination != 5) r.push_back(4 + destination - 1);
  return r;
}

inline std::vector<Route> cargo_routes(std::size_t origin, std::size_t destination, bool flexible) {
  std::vector<Route> rs;
  if (flexible && origin == 1 && destination == 3) rs.push_back({8});
  rs.push_back(hub_route(origin, destination));
  return rs;
}

struct AirCargoSpec {
  std::vector<CargoClass> classes;
  bool routing_flexibility = false;
  double demand_mean = 4.0;        // expected bookings per class
  double consumption_cv = 0.1;     // CV_D
  double capacity_cv = 0.1;        // CV_C
  double load_factor = 1.2;        // expected weight load / expected weight capacity
  double theta2 = 0.6;
  double penalty_multiplier = 2.4;
  double correlation = 0.8;
  std::size_t periods = 240;
  DemandLaw demand_law = DemandLaw::Poisson;
  double x_upper = 100.0;
};

inline NrmInstance build_air_cargo(const AirCargoSpec& s) {
  std::vector<std::string> bad;
  if (s.classes.empty()) bad.push_back("classes");
  if (!(s.demand_mean > 0.0)) bad.push_back("demand_mean");
  if (!(s.consumption_cv >= 0.0)) bad.push_back("consumption_cv");
  if (!(s.capacity_cv >= 0.0)) bad.push_back("capacity_cv");
  if (!(s.load_factor > 0.0)) bad.push_back("load_factor");
  if (!(s.theta2 > 0.0)) bad.push_back("theta2");
  if (!(std::abs(s.correlation) <= 1.0)) bad.push_back("correlation");
  if (!bad.empty()) {
    std::string msg = "invalid air-cargo spec fields:";
    for (const auto& b : bad) msg += " " + b;
    throw InstanceError(msg);
  }
  NrmInstance inst;
  inst.label = std::string("air-cargo(") + (s.routing_flexibility ? "flexible" : "hub") + ")";
  inst.mode = NetworkMode::AirCargo;
  const std::size_t d = s.classes.size();
  const std::size_t m = s.routing_flexibility ? 9 : 8;
  inst.num_classes = d;
  inst.num_legs = m;
  Vector load_w(8, 0.0), load_v(8, 0.0);
  for (const auto& c : s.classes) {
    inst.routes.push_back(cargo_routes(c.origin, c.destination, s.routing_flexibility));
    inst.tariff.push_back(c.per_unit_revenue);
    inst.weight.push_back(capacity_law(c.mean_weight, s.consumption_cv));
    inst.volume.push_back(capacity_law(c.mean_volume, s.consumption_cv));
    inst.demand.push_back(demand_total(s.demand_law, s.demand_mean, s.periods));
    for (std::size_t j : hub_route(c.origin, c.destination)) {
      load_w[j] += s.demand_mean * c.mean_weight;
      load_v[j] += s.demand_mean * c.mean_volume;
    }
  }
  Vector cap_w(m, 0.0), cap_v(m, 0.0);
  const double scale = s.routing_flexibility ? 8.0 / 9.0 : 1.0;
  for (std::size_t j = 0; j < 8; ++j) {
    cap_w[j] = scale * load_w[j] / s.load_factor;
    cap_v[j] = scale * load_v[j] / s.load_factor;
  }
  if (s.routing_flexibility) {
    double tw = 0.0, tv = 0.0;
    for (std::size_t j = 0; j < 8; ++j) {
      tw += load_w[j] / s.load_factor;
      tv += load_v[j] / s.load_factor;
    }
    cap_w[8] = tw / 9.0;
    cap_v[8] = tv / 9.0;
  }
  for (std::size_t j = 0; j < m; ++j) {
    inst.capacity.push_back(capacity_law(cap_w[j], s.capacity_cv));
    inst.capacity_volume.push_back(capacity_law(cap_v[j], s.capacity_cv));
  }
  inst.theta2 = s.theta2;
  inst.penalty_multiplier = s.penalty_multiplier;
  inst.consumption_corr = s.correlation;
  inst.capacity_corr = s.correlation;
  inst.show_up = ShowUpModel::AllShowUp;
  inst.show_prob.assign(d, 1.0);
  inst.x_upper = s.x_upper;
  inst.validate();
  return inst;
}

}  // namespace hcopt::nrm
