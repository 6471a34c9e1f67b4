#pragma once

// Experiment configs, batch runs, policy comparison and the verification suite.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "hcopt/estimators.hpp"
#include "hcopt/harness/config.hpp"
#include "hcopt/nrm/build.hpp"
#include "hcopt/nrm/model.hpp"
#include "hcopt/nrm/policy.hpp"
#include "hcopt/optimizers.hpp"
#include "hcopt/oracles.hpp"

namespace hcopt::harness {

namespace fs = std::filesystem;

struct MethodSpec {
  std::string label;
  RunConfig run;
};

struct OracleSpec {
  double grid_step = 0.01;
  std::size_t grid_samples = 2000;
  double fd_step = 1e-2;
  std::size_t fd_samples = 20000;
  std::size_t grad_samples = 20000;
  std::size_t g_samples = 20000;
  std::size_t lp_checks = 200;
  std::size_t points = 5;
};

struct CompareSpec {
  std::vector<std::string> policies;
  std::optional<std::uint32_t> enumerate_max;
  double level = 0.95;
};

enum class ExperimentKind { Synthetic, Nrm };

struct ExperimentConfig {
  std::string name;
  ExperimentKind kind = ExperimentKind::Synthetic;
  std::uint64_t seed = 1;
  std::size_t repeat = 1;
  std::string output;
  std::optional<Problem> problem;
  std::optional<nrm::NrmInstance> instance;
  nrm::GradientMode gradient = nrm::GradientMode::DualApprox;
  std::vector<MethodSpec> methods;
  std::size_t eval_samples = 100000;
  std::uint64_t eval_seed = 1;
  CompareSpec compare;
  OracleSpec oracle;
  bool timing = false;
  std::size_t threads = 0;  // 0: hardware concurrency
  std::string resolved_text;
  std::string config_hash;
};

namespace detail {

inline double call_number(const Section& s, const std::string& key, const std::string& fn,
                          const std::vector<std::string>& args, std::size_t i) {
  if (i >= args.size()) s.fail(key, "'" + fn + "' is missing argument " + std::to_string(i + 1));
  const auto v = parse_double(args[i]);
  if (!v) s.fail(key, "'" + fn + "' argument '" + args[i] + "' is not a number");
  return *v;
}

inline void call_arity(const Section& s, const std::string& key, const std::string& fn,
                       const std::vector<std::string>& args, std::size_t lo, std::size_t hi) {
  if (args.size() < lo || args.size() > hi)
    s.fail(key, "'" + fn + "' takes " + (lo == hi ? std::to_string(lo) : std::to_string(lo) + "-" + std::to_string(hi)) +
                    " argument(s)");
}

inline Method parse_method(const Section& s, std::optional<std::string> def) {
  const std::string v = s.get_choice("method", {"SG", "RSG", "MSG", "SAA_SG"}, def);
  if (v == "SG") return Method::SG;
  if (v == "RSG") return Method::RSG;
  if (v == "MSG") return Method::MSG;
  return Method::SAA_SG;
}

inline std::string default_method_name(const std::string& label) {
  std::string up;
  for (char c : label) up += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (const char* m : {"SG", "RSG", "MSG", "SAA_SG"})
    if (up == m) return up;
  return "";
}

inline RunConfig theory_defaults(Method m, const BoxDomain& dom, std::size_t T, std::size_t K) {
  return m == Method::MSG ? theory_preset_msg(dom, T, K) : theory_preset_rsg(dom, T);
}

inline MethodSpec parse_method_section(const Section& s, const BoxDomain& dom, std::uint64_t seed) {
  MethodSpec spec;
  spec.label = s.name().substr(std::string("method.").size());
  if (spec.label.empty()) s.fail_section("method sections need a label: [method.<label>]");
  for (char c : spec.label)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'))
      s.fail_section("method label '" + spec.label + "' may only use letters, digits, '_' and '-'");
  const std::string def = default_method_name(spec.label);
  RunConfig& r = spec.run;
  r.method = parse_method(s, def.empty() ? std::nullopt : std::optional<std::string>(def));
  r.max_iters = s.get_uint("iters");
  r.K = s.get_uint("K", 10);
  r.n = s.get_uint("n", 1000);
  const RunConfig theory = theory_defaults(r.method, dom, r.max_iters, r.K);

  std::string fn;
  std::vector<std::string> args;
  const std::string step = s.get_string("step", "inverse_sqrt(0.5)");
  if (!parse_call(step, fn, args)) s.fail("step", "cannot parse step '" + step + "'");
  if (fn == "theory") {
    call_arity(s, "step", fn, args, 0, 0);
    r.step = theory.step;
  } else if (fn == "constant") {
    call_arity(s, "step", fn, args, 1, 1);
    r.step = StepSchedule::constant(call_number(s, "step", fn, args, 0));
  } else if (fn == "inverse_sqrt") {
    call_arity(s, "step", fn, args, 1, 1);
    r.step = StepSchedule::inverse_sqrt(call_number(s, "step", fn, args, 0));
  } else {
    s.fail("step", "step must be theory, constant(g) or inverse_sqrt(a)");
  }

  const bool unregularized = r.method == Method::SG || r.method == Method::SAA_SG;
  const std::string lam = s.get_string("lambda", unregularized ? "zero" : "inverse(1)");
  if (!parse_call(lam, fn, args)) s.fail("lambda", "cannot parse lambda '" + lam + "'");
  if (fn == "theory") {
    call_arity(s, "lambda", fn, args, 0, 0);
    r.lambda = theory.lambda;
  } else if (fn == "zero") {
    call_arity(s, "lambda", fn, args, 0, 0);
    r.lambda = LambdaSchedule::zero();
  } else if (fn == "constant") {
    call_arity(s, "lambda", fn, args, 1, 1);
    r.lambda = LambdaSchedule::constant(call_number(s, "lambda", fn, args, 0));
  } else if (fn == "inverse") {
    call_arity(s, "lambda", fn, args, 0, 1);
    r.lambda = LambdaSchedule::inverse(args.empty() ? 1.0 : call_number(s, "lambda", fn, args, 0));
  } else {
    s.fail("lambda", "lambda must be theory, zero, constant(v) or inverse(scale)");
  }
  if (r.method == Method::SG && r.lambda.kind != LambdaSchedule::Kind::Zero)
    s.fail("lambda", "SG runs without regularization; use lambda = zero or method RSG");

  if (s.has("delta0")) r.delta0 = s.get_double("delta0");

  const std::string out = s.get_string("output", "tail_average(100)");
  if (!parse_call(out, fn, args)) s.fail("output", "cannot parse output '" + out + "'");
  if (fn == "tail_average") {
    call_arity(s, "output", fn, args, 1, 1);
    const double w = call_number(s, "output", fn, args, 0);
    if (!(w >= 1.0) || w != std::floor(w)) s.fail("output", "tail_average window must be a positive integer");
    r.output = OutputRule::tail_average(static_cast<std::size_t>(w));
  } else if (fn == "uniform_random_iterate") {
    call_arity(s, "output", fn, args, 0, 0);
    r.output = OutputRule::uniform_random_iterate();
  } else {
    s.fail("output", "output must be tail_average(window) or uniform_random_iterate");
  }

  const std::string stop = s.get_string("stop", "fixed");
  if (!parse_call(stop, fn, args)) s.fail("stop", "cannot parse stop '" + stop + "'");
  if (fn == "fixed") {
    call_arity(s, "stop", fn, args, 0, 0);
    r.stop = StopRule::fixed();
  } else if (fn == "avg_drift") {
    call_arity(s, "stop", fn, args, 0, 2);
    const double w = args.empty() ? 100.0 : call_number(s, "stop", fn, args, 0);
    const double tol = args.size() < 2 ? 0.5 : call_number(s, "stop", fn, args, 1);
    if (!(w >= 1.0) || w != std::floor(w)) s.fail("stop", "avg_drift window must be a positive integer");
    r.stop = StopRule::avg_drift(static_cast<std::size_t>(w), tol);
  } else {
    s.fail("stop", "stop must be fixed or avg_drift(window, tol)");
  }

  if (s.has("initial")) r.initial = s.get_vector_n("initial", dom.dim());
  r.eval_every = s.get_uint("eval_every", 50);
  r.eval_samples = s.get_uint("eval_samples", 5000);
  r.seed = s.get_uint("seed", seed);
  try {
    r.validate();
  } catch (const Error& e) {
    s.fail_section(e.what());
  }
  return spec;
}

inline Problem parse_problem(const Section& s) {
  const std::size_t d = s.get_uint("dim");
  if (d < 1) s.fail("dim", "dim must be >= 1");
  const Vector lo = s.get_vector_n("lower", d, Vector{0.0});
  const Vector hi = s.get_vector_n("upper", d);
  const std::string phi_name = s.get_choice("phi", {"trunc_min", "product", "saturating", "share"}, "trunc_min");
  PhiFamily phi = PhiFamily::trunc_min();
  try {
    if (phi_name == "product") phi = PhiFamily::product(s.get_double("phi_lipschitz", 1.0));
    if (phi_name == "saturating")
      phi = PhiFamily::saturating(s.get_double("alpha"), s.get_double("kappa"), s.get_double("phi_lipschitz", 1.0));
    if (phi_name == "share") phi = PhiFamily::share(s.get_double("k"), s.get_double("phi_lipschitz", 1.0));
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    s.fail("phi", e.what());
  }
  const auto xi = s.get_distributions("xi", d);
  const std::string outer = s.get_choice("outer", {"quadratic", "linear", "constant"}, "quadratic");
  OuterFunction f = OuterFunction::constant(0.0, d);
  if (outer == "quadratic") {
    const Vector target = s.get_vector_n("target", d);
    const Vector weight = s.get_vector_n("weight", d, Vector{1.0});
    f = OuterFunction::quadratic(target, weight, s.get_double("outer_lipschitz", 1.0));
  } else if (outer == "linear") {
    f = OuterFunction::linear(s.get_vector_n("c", d));
  } else {
    f = OuterFunction::constant(s.get_double("value", 0.0), d);
  }
  try {
    Problem p(BoxDomain(lo, hi), phi, XiSampler(xi), f);
    p.declared_mu_g = s.get_double("mu_g", 0.0);
    return p;
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    s.fail_section(e.what());
  }
}

inline nrm::ShowUpModel parse_show_up(const Section& s, const std::string& def) {
  const std::string v = s.get_choice("show_up", {"all", "poisson", "binomial"}, def);
  if (v == "all") return nrm::ShowUpModel::AllShowUp;
  if (v == "poisson") return nrm::ShowUpModel::Poisson;
  return nrm::ShowUpModel::Binomial;
}

inline nrm::DemandLaw parse_demand_law(const Section& s) {
  return s.get_choice("demand_law", {"poisson", "binomial"}, "poisson") == "poisson" ? nrm::DemandLaw::Poisson
                                                                                     : nrm::DemandLaw::Binomial;
}

inline nrm::NrmInstance parse_instance(const Section& s, const fs::path& base_dir) {
  const std::string type = s.get_choice("type", {"explicit", "hub_spoke", "air_cargo"});
  try {
    if (type == "explicit") {
      nrm::NrmInstance inst;
      inst.label = s.get_string("label", "explicit");
      inst.consumption = s.get_matrix("consumption");
      inst.num_legs = inst.consumption.size();
      inst.num_classes = inst.consumption.front().size();
      const std::size_t d = inst.num_classes, m = inst.num_legs;
      inst.revenue = s.get_vector_n("revenue", d);
      if (s.has("penalty")) {
        inst.penalty = s.get_vector_n("penalty", d);
      } else {
        const double delta = s.get_double("penalty_delta", 0.0), sigma = s.get_double("penalty_sigma", 0.0);
        double rmax = 0.0;
        for (double r : inst.revenue) rmax = std::max(rmax, r);
        for (double r : inst.revenue) inst.penalty.push_back(delta * r + sigma * rmax);
      }
      inst.demand = s.get_distributions("demand", d);
      if (s.has("capacity")) {
        inst.capacity = s.get_distributions("capacity", m);
      } else {
        const Vector mean = s.get_vector_n("capacity_mean", m);
        const double cv = s.get_double("capacity_cv", 0.0);
        for (double c : mean) inst.capacity.push_back(nrm::capacity_law(c, cv));
      }
      inst.show_up = parse_show_up(s, "all");
      inst.show_prob = s.get_vector_n("show_prob", d, Vector{1.0});
      inst.x_upper = s.get_double("x_upper", 100.0);
      inst.validate();
      return inst;
    }
    if (type == "hub_spoke") {
      nrm::HubSpokeSpec h;
      h.spokes = s.get_uint("spokes", h.spokes);
      h.kappa = s.get_double("kappa", h.kappa);
      h.delta = s.get_double("delta", h.delta);
      h.sigma = s.get_double("sigma", h.sigma);
      h.show_prob = s.get_double("p", h.show_prob);
      h.load_factor = s.get_double("rho", h.load_factor);
      h.capacity_cv = s.get_double("gamma", h.capacity_cv);
      h.leg_capacity = s.get_double("leg_capacity", h.leg_capacity);
      h.base_fare = s.get_double("base_fare", h.base_fare);
      h.high_fare_share = s.get_double("high_fare_share", h.high_fare_share);
      h.periods = s.get_uint("periods", h.periods);
      h.demand_law = parse_demand_law(s);
      h.show_up = parse_show_up(s, "binomial");
      h.seed = s.get_uint("seed", h.seed);
      h.x_upper = s.get_double("x_upper", h.x_upper);
      return nrm::build_hub_spoke(h);
    }
    nrm::AirCargoSpec a;
    fs::path table = s.get_string("table");
    if (table.is_relative()) table = base_dir / table;
    a.classes = nrm::read_cargo_table(table.string());
    a.routing_flexibility = s.get_bool("routing_flexibility", false);
    a.demand_mean = s.get_double("demand_mean", a.demand_mean);
    a.consumption_cv = s.get_double("consumption_cv", a.consumption_cv);
    a.capacity_cv = s.get_double("capacity_cv", a.capacity_cv);
    a.load_factor = s.get_double("load_factor", a.load_factor);
    a.theta2 = s.get_double("theta2", a.theta2);
    a.penalty_multiplier = s.get_double("penalty_multiplier", a.penalty_multiplier);
    a.correlation = s.get_double("correlation", a.correlation);
    a.periods = s.get_uint("periods", a.periods);
    a.demand_law = parse_demand_law(s);
    a.x_upper = s.get_double("x_upper", a.x_upper);
    return nrm::build_air_cargo(a);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    s.fail_section(e.what());
  }
}

}  // namespace detail

/// Builds the experiment from a parsed config. Every key must be consumed.
inline ExperimentConfig load_experiment(const Config& cfg, const fs::path& base_dir = ".") {
  ExperimentConfig ex;
  const Section& e = cfg.require("experiment");
  ex.name = e.get_string("name");
  ex.kind = e.get_choice("kind", {"synthetic", "nrm"}) == "nrm" ? ExperimentKind::Nrm : ExperimentKind::Synthetic;
  ex.seed = e.get_uint("seed");
  ex.repeat = e.get_uint("repeat", 1);
  if (ex.repeat < 1) e.fail("repeat", "repeat must be >= 1");
  ex.output = e.get_string("output", ex.name);
  ex.threads = e.get_uint("threads", 0);

  BoxDomain dom = BoxDomain::uniform(1, 0.0, 1.0);
  if (ex.kind == ExperimentKind::Synthetic) {
    ex.problem = detail::parse_problem(cfg.require("problem"));
    dom = ex.problem->domain();
  } else {
    const Section& s = cfg.require("instance");
    ex.instance = detail::parse_instance(s, base_dir);
    ex.gradient = s.get_choice("gradient", {"dual_approx", "exact_diff"}, "dual_approx") == "exact_diff"
                      ? nrm::GradientMode::ExactDiff
                      : nrm::GradientMode::DualApprox;
    dom = BoxDomain::uniform(ex.instance->num_classes, 0.0, ex.instance->x_upper);
  }

  for (const Section* s : cfg.with_prefix("method")) {
    if (s->name() != "method" && s->name().rfind("method.", 0) != 0) continue;
    ex.methods.push_back(detail::parse_method_section(*s, dom, ex.seed));
  }
  for (std::size_t i = 0; i < ex.methods.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (ex.methods[i].label == ex.methods[j].label)
        throw ConfigError(cfg.source(), 0, "duplicate method label '" + ex.methods[i].label + "'");
  // a policy comparison may consist of baselines only
  if (ex.methods.empty() && !(ex.kind == ExperimentKind::Nrm && cfg.find("compare")))
    throw ConfigError(cfg.source(), e.line(), "experiment needs at least one [method.<label>] section");

  if (const Section* s = cfg.find("evaluation")) {
    ex.eval_samples = s->get_uint("samples", ex.kind == ExperimentKind::Nrm ? 5000 : 100000);
    ex.eval_seed = s->get_uint("seed", ex.seed);
    if (ex.eval_samples < 2) s->fail("samples", "evaluation needs at least 2 samples");
  } else {
    ex.eval_samples = ex.kind == ExperimentKind::Nrm ? 5000 : 100000;
    ex.eval_seed = ex.seed;
  }

  if (const Section* s = cfg.find("compare")) {
    if (ex.kind != ExperimentKind::Nrm) s->fail_section("[compare] applies to nrm experiments only");
    std::string def;
    for (const auto& m : ex.methods) def += m.label + "; ";
    def += "dlp";
    for (const auto& p : split(s->get_string("policies", def), ';')) {
      const std::string t = trim(p);
      if (!t.empty()) ex.compare.policies.push_back(t);
    }
    if (s->has("enumerate_max")) {
      const auto v = s->get_uint("enumerate_max");
      if (v > 255) s->fail("enumerate_max", "enumerate_max must be <= 255");
      ex.compare.enumerate_max = static_cast<std::uint32_t>(v);
    }
    ex.compare.level = s->get_double("level", 0.95);
    if (!(ex.compare.level > 0.0 && ex.compare.level < 1.0)) s->fail("level", "level must lie in (0, 1)");
  }

  if (const Section* s = cfg.find("oracle")) {
    OracleSpec& o = ex.oracle;
    o.grid_step = s->get_double("grid_step", o.grid_step);
    o.grid_samples = s->get_uint("grid_samples", o.grid_samples);
    o.fd_step = s->get_double("fd_step", o.fd_step);
    o.fd_samples = s->get_uint("fd_samples", o.fd_samples);
    o.grad_samples = s->get_uint("grad_samples", o.grad_samples);
    o.g_samples = s->get_uint("g_samples", o.g_samples);
    o.lp_checks = s->get_uint("lp_checks", o.lp_checks);
    o.points = s->get_uint("points", o.points);
    if (!(o.grid_step > 0.0)) s->fail("grid_step", "grid_step must be positive");
    if (!(o.fd_step > 0.0)) s->fail("fd_step", "fd_step must be positive");
  }

  if (const Section* s = cfg.find("output")) ex.timing = s->get_bool("timing", false);

  if (ex.kind == ExperimentKind::Synthetic && cfg.find("instance"))
    throw ConfigError(cfg.source(), cfg.find("instance")->line(), "[instance] given for a synthetic experiment");
  if (ex.kind == ExperimentKind::Nrm && cfg.find("problem"))
    throw ConfigError(cfg.source(), cfg.find("problem")->line(), "[problem] given for an nrm experiment");
  cfg.check_all_used({"experiment", "problem", "instance", "method", "evaluation", "compare", "oracle", "output"});
  ex.resolved_text = cfg.resolved_text();
  ex.config_hash = hex64(fnv1a64(ex.resolved_text));
  return ex;
}

inline ExperimentConfig load_experiment_file(const std::string& path) {
  const Config cfg = Config::load(path);
  return load_experiment(cfg, fs::path(path).parent_path());
}

// ---------------------------------------------------------------- output

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c == '\n' ? ' ' : c;
  }
  return q + "\"";
}

inline std::string join_vector(const Vector& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + format_double(v[i]);
  return s;
}

inline std::string provenance_line(const ExperimentConfig& ex, std::uint64_t seed) {
  return "# config_hash=" + ex.config_hash + " seed=" + std::to_string(seed) + "\n";
}

inline fs::path output_root() {
  if (const char* env = std::getenv("HCOPT_OUTPUT_ROOT"); env && *env) return env;
  return "results";
}

inline void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

inline fs::path prepare_output_dir(const ExperimentConfig& ex, const std::optional<fs::path>& root) {
  const fs::path dir = root.value_or(output_root()) / ex.output;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("output directory is not writable: " + dir.string());
  write_file(dir / "resolved_config.ini", provenance_line(ex, ex.seed) + ex.resolved_text);
  return dir;
}

// ---------------------------------------------------------------- runs

struct MethodRun {
  std::string label;
  std::size_t replicate = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string status;
  RunTrace trace;
  double final_value = 0.0;  // objective (synthetic) or mean revenue (nrm)
  double final_stderr = 0.0;
  std::optional<nrm::PolicyEvaluation> policy;  // nrm only
};

/// Runs `jobs` tasks on up to `threads` workers; results stay in job order.
template <class Fn>
void run_parallel(std::size_t jobs, std::size_t threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, jobs);
  if (threads <= 1) {
    for (std::size_t j = 0; j < jobs; ++j) fn(j);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t j; (j = next.fetch_add(1)) < jobs;) fn(j);
    });
  for (auto& th : pool) th.join();
}

namespace detail {

inline MethodRun run_method(const ExperimentConfig& ex, const MethodSpec& m, std::size_t rep,
                            const nrm::ScenarioSet* scenarios) {
  MethodRun out;
  out.label = m.label;
  out.replicate = rep;
  RunConfig rc = m.run;
  rc.seed = m.run.seed + rep;
  out.seed = rc.seed;
  try {
    if (ex.kind == ExperimentKind::Synthetic) {
      out.trace = run(*ex.problem, rc);
      const auto [v, se] =
          estimate_objective(*ex.problem, out.trace.chosen_output, ex.eval_samples, Stream(ex.eval_seed).substream(hcopt::detail::kEvalTag));
      out.final_value = v;
      out.final_stderr = se;
    } else {
      const nrm::NrmModel model(*ex.instance, ex.gradient);
      out.trace = run(model, rc);
      out.policy = nrm::evaluate_policy(*ex.instance, out.trace.chosen_output, *scenarios);
      out.final_value = out.policy->mean;
      out.final_stderr = out.policy->std_error;
    }
    out.ok = true;
    out.status = "ok";
  } catch (const std::exception& e) {
    out.ok = false;
    out.status = std::string("error: ") + e.what();
  }
  return out;
}

inline std::string trace_csv(const ExperimentConfig& ex, const MethodRun& r) {
  std::string s = provenance_line(ex, r.seed);
  s += "iter,samples_consumed,mc_objective,mc_stderr,wall_ms\n";
  const double sign = ex.kind == ExperimentKind::Nrm ? -1.0 : 1.0;  // nrm traces report revenue
  for (const auto& c : r.trace.objective) {
    s += std::to_string(c.iter) + "," + std::to_string(c.samples_consumed) + "," + format_double(sign * c.value + 0.0) +
         "," + format_double(c.std_error) + "," + format_double(ex.timing ? c.wall_ms : 0.0) + "\n";
  }
  return s;
}

inline std::string trace_name(const ExperimentConfig& ex, const MethodRun& r) {
  return "trace_" + r.label + (ex.repeat > 1 ? "_r" + std::to_string(r.replicate) : "") + ".csv";
}

}  // namespace detail

struct ExperimentResult {
  fs::path directory;
  std::vector<MethodRun> runs;
  std::vector<std::string> files;
  bool all_ok() const {
    return std::all_of(runs.begin(), runs.end(), [](const MethodRun& r) { return r.ok; });
  }
};

/// Runs every method `repeat` times, writes traces, the summary and the
/// resolved config. A failing method yields an error row only.
inline ExperimentResult run_methods(const ExperimentConfig& ex, const fs::path& dir, bool write_outputs) {
  std::optional<nrm::ScenarioSet> scenarios;
  if (ex.kind == ExperimentKind::Nrm) scenarios = nrm::freeze_scenarios(*ex.instance, ex.eval_samples, ex.eval_seed);
  ExperimentResult res;
  res.directory = dir;
  const std::size_t jobs = ex.methods.size() * ex.repeat;
  res.runs.resize(jobs);
  run_parallel(jobs, ex.threads, [&](std::size_t j) {
    res.runs[j] = detail::run_method(ex, ex.methods[j / ex.repeat], j % ex.repeat, scenarios ? &*scenarios : nullptr);
  });
  if (!write_outputs) return res;

  std::string summary = provenance_line(ex, ex.seed);
  summary += "method,final_revenue_or_objective,stderr,iters,samples,seconds,seed,status,solution\n";
  for (const auto& r : res.runs) {
    if (r.ok) {
      const std::string name = detail::trace_name(ex, r);
      write_file(dir / name, detail::trace_csv(ex, r));
      res.files.push_back(name);
      const std::size_t samples = r.trace.samples_consumed.empty() ? 0 : r.trace.samples_consumed.back();
      const Vector& sol = r.policy ? r.policy->limits : r.trace.chosen_output;
      summary += csv_field(r.label) + "," + format_double(r.final_value) + "," + format_double(r.final_stderr) + "," +
                 std::to_string(r.trace.iterations) + "," + std::to_string(samples) + "," +
                 format_double(ex.timing ? r.trace.wall_ms / 1000.0 : 0.0) + "," + std::to_string(r.seed) + ",ok," +
                 join_vector(sol) + "\n";
    } else {
      summary += csv_field(r.label) + ",,,0,0,0," + std::to_string(r.seed) + "," + csv_field(r.status) + ",\n";
    }
  }
  write_file(dir / "summary.csv", summary);
  res.files.push_back("summary.csv");
  res.files.push_back("resolved_config.ini");
  return res;
}

inline ExperimentResult run_experiment(const ExperimentConfig& ex, std::optional<fs::path> root = std::nullopt) {
  if (ex.methods.empty()) throw ArgumentError("experiment needs at least one [method.<label>] section");
  const fs::path dir = prepare_output_dir(ex, root);
  return run_methods(ex, dir, true);
}

// ---------------------------------------------------------------- comparison

struct PolicyRow {
  std::string name;
  Vector limits;
  double mean = 0.0;
  double std_error = 0.0;
  std::vector<double> revenues;
};

struct PairRow {
  std::string a, b;
  nrm::PairedComparison cmp;
};

struct ComparisonResult {
  fs::path directory;
  std::vector<PolicyRow> policies;
  std::vector<PairRow> pairs;
  std::optional<nrm::EnumerationResult> enumeration;
  std::vector<MethodRun> runs;
};

/// Exhaustive-search oracle over integer booking limits on a frozen scenario set.
inline OracleResult nrm_enumeration_oracle(const nrm::NrmInstance& inst, const nrm::ScenarioSet& set,
                                           std::uint32_t max_limit) {
  const nrm::EnumerationResult e = nrm::enumerate_best_policy(inst, set, max_limit);
  const nrm::PolicyEvaluation ev = nrm::evaluate_policy(inst, e.best_limits, set);
  OracleResult r;
  r.value = ev.mean;
  r.std_error = ev.std_error;
  r.argmin = e.best_limits;
  r.method = OracleMethod::Enumeration;
  r.resolution = 1.0;
  r.evaluations = e.policies;
  return r;
}

/// Evaluates every listed policy on one frozen scenario set and compares
/// them pairwise. Policy names: a method label, "dlp", "zero", "enumerated"
/// or "limits(a b ...)".
inline ComparisonResult compare_policies(const ExperimentConfig& ex, std::optional<fs::path> root = std::nullopt) {
  if (ex.kind != ExperimentKind::Nrm || !ex.instance) throw ArgumentError("compare needs an nrm experiment");
  const nrm::NrmInstance& inst = *ex.instance;
  ComparisonResult res;
  res.directory = prepare_output_dir(ex, root);
  std::vector<std::string> names = ex.compare.policies;
  if (names.empty()) {
    for (const auto& m : ex.methods) names.push_back(m.label);
    names.push_back("dlp");
  }

  const nrm::ScenarioSet set = nrm::freeze_scenarios(inst, ex.eval_samples, ex.eval_seed);
  ExperimentConfig single = ex;
  single.repeat = 1;
  const ExperimentResult runs = run_methods(single, res.directory, true);
  res.runs = runs.runs;

  auto add = [&](const std::string& name, const Vector& x) {
    const nrm::PolicyEvaluation ev = nrm::evaluate_policy(inst, x, set);
    res.policies.push_back({name, ev.limits, ev.mean, ev.std_error, ev.revenues});
  };
  for (const auto& name : names) {
    std::string fn;
    std::vector<std::string> args;
    if (name == "dlp") {
      add(name, nrm::dlp_booking_limits(inst).limits);
    } else if (name == "zero") {
      add(name, Vector(inst.num_classes, 0.0));
    } else if (name == "enumerated") {
      if (!ex.compare.enumerate_max) throw ArgumentError("policy 'enumerated' needs [compare] enumerate_max");
      res.enumeration = nrm::enumerate_best_policy(inst, set, *ex.compare.enumerate_max);
      add(name, res.enumeration->best_limits);
    } else if (parse_call(name, fn, args) && fn == "limits") {
      std::istringstream is(args.empty() ? std::string() : args[0]);
      Vector x;
      for (double v; is >> v;) x.push_back(v);
      if (x.size() != inst.num_classes) throw ArgumentError("policy '" + name + "' needs one limit per class");
      add(name, x);
    } else {
      const auto it = std::find_if(runs.runs.begin(), runs.runs.end(), [&](const MethodRun& r) { return r.label == name; });
      if (it == runs.runs.end()) throw ArgumentError("unknown policy '" + name + "'");
      if (!it->ok) throw InternalError("policy '" + name + "' failed: " + it->status);
      add(name, it->trace.chosen_output);
    }
  }
  for (std::size_t i = 0; i < res.policies.size(); ++i)
    for (std::size_t j = 0; j < res.policies.size(); ++j)
      if (i != j)
        res.pairs.push_back({res.policies[i].name, res.policies[j].name,
                             nrm::paired_compare(res.policies[i].revenues, res.policies[j].revenues, ex.compare.level)});

  std::string pol = provenance_line(ex, ex.eval_seed);
  pol += "policy,mean_revenue,stderr,scenarios,limits\n";
  for (const auto& p : res.policies)
    pol += csv_field(p.name) + "," + format_double(p.mean) + "," + format_double(p.std_error) + "," +
           std::to_string(p.revenues.size()) + "," + join_vector(p.limits) + "\n";
  write_file(res.directory / "comparison.csv", pol);

  std::string pr = provenance_line(ex, ex.eval_seed);
  pr += "policy_a,policy_b,mean_difference,stderr,relative_improvement,t_statistic,significant\n";
  for (const auto& p : res.pairs)
    pr += csv_field(p.a) + "," + csv_field(p.b) + "," + format_double(p.cmp.mean_difference) + "," +
          format_double(p.cmp.std_error) + "," + format_double(p.cmp.relative_improvement) + "," +
          format_double(p.cmp.t_statistic) + "," + (p.cmp.significant ? "yes" : "no") + "\n";
  write_file(res.directory / "pairwise.csv", pr);
  return res;
}

// ---------------------------------------------------------------- oracle suite

struct OracleCheck {
  std::string check;
  std::string subject;
  double value = 0.0;
  double reference = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct OracleReport {
  fs::path directory;
  std::vector<OracleCheck> checks;
  bool all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const OracleCheck& c) { return c.pass; });
  }
};

namespace detail {

inline std::vector<Vector> interior_points(const BoxDomain& dom, std::size_t k, double margin, bool half_integer = false) {
  std::vector<Vector> pts;
  for (std::size_t p = 0; p < k; ++p) {
    const double frac = (static_cast<double>(p) + 0.5) / static_cast<double>(k);
    Vector x(dom.dim());
    for (std::size_t i = 0; i < x.size(); ++i) {
      // stagger coordinates so points are not all on the diagonal
      const double f = std::fmod(frac + 0.37 * static_cast<double>(i), 1.0);
      const double lo = dom.lower()[i] + margin, hi = dom.upper()[i] - margin;
      x[i] = lo + f * (hi - lo);
      // integer-valued demand makes F piecewise linear between integers
      if (half_integer) x[i] = std::clamp(std::floor(x[i]) + 0.5, std::floor(lo) + 0.5, std::ceil(hi) - 0.5);
    }
    pts.push_back(std::move(x));
  }
  return pts;
}

template <CompositeModel M, class Grad>
void gradient_vs_fd(const M& model, const std::string& name, const OracleSpec& o, std::uint64_t seed, Grad&& grad,
                    std::vector<OracleCheck>& out, bool half_integer = false) {
  const auto pts = interior_points(model.domain(), o.points, o.fd_step, half_integer);
  for (std::size_t p = 0; p < pts.size(); ++p) {
    const FiniteDiffResult fd = finite_diff_grad(model, pts[p], o.fd_step, o.fd_samples, seed + p);
    Accumulator acc(pts[p].size());
    const Stream root = Stream(seed + p).substream(0x7200);
    for (std::size_t j = 0; j < o.grad_samples; ++j) {
      Stream s = root.substream(j);
      acc.add(grad(pts[p], s));
    }
    for (std::size_t i = 0; i < pts[p].size(); ++i) {
      const double se = std::hypot(acc.std_error()[i], fd.std_error[i]);
      const double diff = std::abs(acc.mean()[i] - fd.gradient[i]);
      out.push_back({name, "point " + std::to_string(p) + " coord " + std::to_string(i), acc.mean()[i],
                     fd.gradient[i], 4.0 * se, diff <= 4.0 * se + 1e-12});
    }
  }
}

inline bool integer_demand(const nrm::NrmInstance& inst) {
  return std::all_of(inst.demand.begin(), inst.demand.end(), [](const Distribution& d) {
    if (d.is<PoissonDist>() || d.is<BinomialDist>()) return true;
    if (const auto* p = std::get_if<DiscreteDist>(&d.law()))
      return std::all_of(p->support.begin(), p->support.end(), [](double v) { return v == std::floor(v); });
    return false;
  });
}

}  // namespace detail

/// Verification suite: closed-form g, gradient vs finite differences, grid
/// dominance, LP certificates and the enumeration bound.
inline OracleReport run_oracle_suite(const ExperimentConfig& ex, std::optional<fs::path> root = std::nullopt) {
  OracleReport rep;
  rep.directory = prepare_output_dir(ex, root);
  const OracleSpec& o = ex.oracle;
  auto& out = rep.checks;

  if (ex.kind == ExperimentKind::Synthetic) {
    const Problem& p = *ex.problem;
    const BoxDomain& dom = p.domain();
    bool closed = p.phi().kind == PhiKind::TruncMin;
    for (const auto& dist : p.sampler().coords())
      closed = closed && (dist.is<UniformDist>() || dist.is<TruncNormalDist>() || dist.is<DiscreteDist>());
    if (closed) {
      Stream rng = Stream(ex.seed).substream(0x7300);
      for (std::size_t k = 0; k < o.points; ++k) {
        Vector x(dom.dim());
        for (std::size_t i = 0; i < x.size(); ++i)
          x[i] = dom.lower()[i] + (dom.upper()[i] - dom.lower()[i]) * static_cast<double>(k) /
                                      static_cast<double>(std::max<std::size_t>(1, o.points - 1));
        const MeanEstimate est = estimate_g(p, x, o.g_samples, rng);
        const Vector exact = closed_form_g(p, x);
        for (std::size_t i = 0; i < x.size(); ++i) {
          const double tol = 4.0 * est.std_error[i] + 1e-12;
          out.push_back({"g_closed_form", "point " + std::to_string(k) + " coord " + std::to_string(i), est.mean[i],
                         exact[i], tol, std::abs(est.mean[i] - exact[i]) <= tol});
        }
      }
    }
    detail::gradient_vs_fd(p, "gradient_plain_vs_fd", o, ex.seed,
                           [&](const Vector& x, Stream& s) { return grad_estimate_plain(p, x, s).vector; }, out);

    if (dom.dim() <= 3 && !ex.methods.empty()) {
      const OracleResult grid = grid_global_min(p, o.grid_step, o.grid_samples, ex.seed);
      ExperimentConfig single = ex;
      single.repeat = 1;
      const ExperimentResult runs = run_methods(single, rep.directory, false);
      for (const auto& r : runs.runs) {
        if (!r.ok) {
          out.push_back({"grid_dominance", r.label + " (" + r.status + ")", 0, grid.value, 0, false});
          continue;
        }
        const Stream eval = Stream(ex.seed).substream(0x7100);
        const auto [v, se] = estimate_objective(p, r.trace.chosen_output, o.grid_samples, eval);
        // the grid minimum uses the same draws, so it can only exceed F(x_hat) by the grid resolution error
        const double tol = 4.0 * std::hypot(se, grid.std_error);
        out.push_back({"grid_dominance", r.label, v, grid.value, tol, grid.value <= v + tol});
      }
    }
  } else {
    const nrm::NrmInstance& inst = *ex.instance;
    nrm::GammaEvaluator gamma(inst);
    const Vector x = nrm::dlp_booking_limits(inst).limits;
    const Stream lp_root = Stream(ex.seed).substream(0x7400);
    std::size_t bad = 0;
    double worst = 0.0;
    for (std::size_t k = 0; k < o.lp_checks; ++k) {
      const Stream s = lp_root.substream(k);
      const nrm::ServiceScenario sc = nrm::sample_scenario(inst, s);
      Vector acc(x.size());
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] = std::min(std::round(x[i]), sc.demand[i]);
      const Vector z = nrm::sample_show_ups(inst, acc, s.substream(nrm::stream_tag::kShowUp));
      gamma(z, sc, nrm::scenario_penalty(inst, sc));
      const LpProblem& lp = gamma.last_problem();
      const LpSolution sol = solve_lp(lp);
      const LpCertificate cert = check_certificate(lp, sol);
      worst = std::max({worst, cert.primal_residual, cert.complementarity, cert.duality_gap});
      if (!sol.optimal() || !cert.ok()) ++bad;
    }
    out.push_back({"lp_certificate", std::to_string(o.lp_checks) + " service LPs", worst, 0.0, 1e-6, bad == 0});

    nrm::NrmModel exact(inst, nrm::GradientMode::ExactDiff);
    detail::gradient_vs_fd(exact, "gradient_nrm_exact_vs_fd", o, ex.seed,
                           [&](const Vector& xx, Stream& s) { return grad_estimate_plain(exact, xx, s).vector; }, out,
                           detail::integer_demand(inst));

    if (ex.compare.enumerate_max) {
      const nrm::ScenarioSet set = nrm::freeze_scenarios(inst, ex.eval_samples, ex.eval_seed);
      const OracleResult best = nrm_enumeration_oracle(inst, set, *ex.compare.enumerate_max);
      std::vector<std::pair<std::string, Vector>> cands{{"dlp", x}, {"zero", Vector(inst.num_classes, 0.0)}};
      ExperimentConfig single = ex;
      single.repeat = 1;
      for (const auto& r : run_methods(single, rep.directory, false).runs)
        if (r.ok) cands.emplace_back(r.label, r.trace.chosen_output);
      for (const auto& [name, lim] : cands) {
        const nrm::PolicyEvaluation ev = nrm::evaluate_policy(inst, lim, set);
        const bool in_range = std::all_of(ev.limits.begin(), ev.limits.end(),
                                          [&](double v) { return v <= *ex.compare.enumerate_max; });
        out.push_back({"enumeration_dominance", name + (in_range ? "" : " (outside enumerated range)"), ev.mean,
                       best.value, 1e-9, !in_range || best.value + 1e-9 >= ev.mean});
      }
    }
  }

  std::string csv = provenance_line(ex, ex.seed);
  csv += "check,subject,value,reference,tolerance,pass\n";
  for (const auto& c : out)
    csv += csv_field(c.check) + "," + csv_field(c.subject) + "," + format_double(c.value) + "," +
           format_double(c.reference) + "," + format_double(c.tolerance) + "," + (c.pass ? "yes" : "no") + "\n";
  write_file(rep.directory / "oracle.csv", csv);
  return rep;
}

}  // namespace hcopt::harness
