#pragma once

// SG / RSG / MSG in the original x-space and SAA+SG in the transformed
// u-space, sharing one run configuration and trace format.

#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "hcopt/estimators.hpp"
#include "hcopt/problem.hpp"
#include "hcopt/transform.hpp"

namespace hcopt {

enum class Method { SG, RSG, MSG, SAA_SG };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::SG: return "SG";
    case Method::RSG: return "RSG";
    case Method::MSG: return "MSG";
    case Method::SAA_SG: return "SAA_SG";
  }
  return "?";
}

struct StepSchedule {
  enum class Kind { Constant, InverseSqrt };
  Kind kind = Kind::InverseSqrt;
  double scale = 0.5;

  static StepSchedule constant(double gamma) { return {Kind::Constant, gamma}; }
  static StepSchedule inverse_sqrt(double a) { return {Kind::InverseSqrt, a}; }

  double at(std::size_t t) const {
    return kind == Kind::Constant ? scale : scale / std::sqrt(static_cast<double>(t));
  }
};

struct LambdaSchedule {
  enum class Kind { Zero, Constant, Inverse };
  Kind kind = Kind::Inverse;
  double scale = 1.0;

  static LambdaSchedule zero() { return {Kind::Zero, 0.0}; }
  static LambdaSchedule constant(double lambda) { return {Kind::Constant, lambda}; }
  /// lambda_t = scale / t
  static LambdaSchedule inverse(double scale = 1.0) { return {Kind::Inverse, scale}; }

  double at(std::size_t t) const {
    switch (kind) {
      case Kind::Zero: return 0.0;
      case Kind::Constant: return scale;
      case Kind::Inverse: return scale / static_cast<double>(t);
    }
    return 0.0;
  }
};

struct OutputRule {
  enum class Kind { UniformRandomIterate, TailAverage };
  Kind kind = Kind::TailAverage;
  std::size_t window = 100;

  static OutputRule uniform_random_iterate() { return {Kind::UniformRandomIterate, 0}; }
  static OutputRule tail_average(std::size_t window) { return {Kind::TailAverage, window}; }
};

struct StopRule {
  enum class Kind { FixedT, AvgDrift };
  Kind kind = Kind::FixedT;
  std::size_t window = 100;
  double tol = 0.5;

  static StopRule fixed() { return {Kind::FixedT, 100, 0.5}; }
  static StopRule avg_drift(std::size_t window = 100, double tol = 0.5) { return {Kind::AvgDrift, window, tol}; }
};

struct RunConfig {
  Method method = Method::RSG;
  std::size_t max_iters = 1000;
  StepSchedule step;
  LambdaSchedule lambda;
  std::size_t K = 10;            // MSG truncation level
  std::size_t n = 1000;          // SAA sample count
  std::optional<double> delta0;  // SAA radius cap; default (d T)^{-1/2}
  std::uint64_t seed = 1;
  OutputRule output;
  StopRule stop;
  std::optional<Vector> initial;  // default: projection of the origin
  std::size_t eval_every = 50;    // 0 disables objective checkpoints
  std::size_t eval_samples = 5000;
  bool check_feasibility = true;

  void validate() const {
    if (max_iters < 1) throw ArgumentError("max_iters must be >= 1");
    if (!(step.scale > 0.0)) throw ArgumentError("stepsize must be positive");
    if (!(lambda.scale >= 0.0)) throw ArgumentError("lambda must be >= 0");
    if (K < 1) throw ArgumentError("K must be >= 1");
    if (n < 1) throw ArgumentError("n must be >= 1");
    if (output.kind == OutputRule::Kind::TailAverage && output.window < 1) throw ArgumentError("window must be >= 1");
    if (stop.window < 1) throw ArgumentError("stop window must be >= 1");
    if (eval_every > 0 && eval_samples < 1) throw ArgumentError("eval_samples must be >= 1");
  }
};

/// Step-size presets with the constants from the convergence analysis.
inline RunConfig theory_preset_rsg(const BoxDomain& domain, std::size_t T) {
  RunConfig c;
  c.method = Method::RSG;
  c.max_iters = T;
  c.step = StepSchedule::constant(1.0 / std::sqrt(static_cast<double>(T)));
  const double radius = std::max(domain.radius(), 1e-12);
  c.lambda = LambdaSchedule::constant(1.0 / (radius * std::pow(static_cast<double>(T), 0.25)));
  c.output = OutputRule::uniform_random_iterate();
  return c;
}

inline RunConfig theory_preset_msg(const BoxDomain& domain, std::size_t T, std::size_t K) {
  RunConfig c;
  c.method = Method::MSG;
  c.max_iters = T;
  c.K = K;
  const double radius = std::max(domain.radius(), 1e-12);
  const double gamma = 1.0 / std::sqrt(radius * static_cast<double>(T));
  c.step = StepSchedule::constant(gamma);
  c.lambda = LambdaSchedule::constant(gamma);
  c.output = OutputRule::uniform_random_iterate();
  return c;
}

struct ObjectiveCheckpoint {
  std::size_t iter = 0;
  std::size_t samples_consumed = 0;
  double value = 0.0;
  double std_error = 0.0;
  std::size_t eval_samples = 0;
  double wall_ms = 0.0;
};

struct RunTrace {
  Method method = Method::RSG;
  std::vector<Vector> iterates;                // x^1, ..., x^T (points where gradients were taken)
  std::vector<Vector> u_iterates;              // SAA+SG only
  std::vector<double> grad_norms;              // ||v|| per iteration
  std::vector<std::size_t> samples_consumed;   // cumulative, per iteration
  std::vector<ObjectiveCheckpoint> objective;  // periodic MC evaluations
  Vector final_iterate;                        // x^{T+1}
  Vector chosen_output;                        // x_hat
  Vector chosen_output_u;                      // u_hat (SAA+SG)
  std::size_t iterations = 0;
  double wall_ms = 0.0;
  double delta = 0.0;                          // SAA+SG shrink radius
  bool stopped_early = false;
};

/// Drift between the means of the last two non-overlapping windows.
inline double window_drift(const std::vector<Vector>& iterates, std::size_t window) {
  const std::size_t t = iterates.size();
  if (t < 2 * window) return std::numeric_limits<double>::infinity();
  const std::size_t d = iterates.back().size();
  Vector prev(d, 0.0), last(d, 0.0);
  for (std::size_t s = t - 2 * window; s < t - window; ++s)
    for (std::size_t i = 0; i < d; ++i) prev[i] += iterates[s][i];
  for (std::size_t s = t - window; s < t; ++s)
    for (std::size_t i = 0; i < d; ++i) last[i] += iterates[s][i];
  double dist = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double diff = (last[i] - prev[i]) / static_cast<double>(window);
    dist += diff * diff;
  }
  return std::sqrt(dist);
}

/// True when the run should stop after `t` iterations.
inline bool stop_check(const std::vector<Vector>& iterates, const StopRule& rule, std::size_t t, std::size_t t_max) {
  if (t >= t_max) return true;
  if (rule.kind == StopRule::Kind::FixedT) return false;
  if (t % rule.window != 0) return false;
  return window_drift(iterates, rule.window) < rule.tol;
}

inline bool stop_check(const RunTrace& trace, const StopRule& rule, std::size_t t_max) {
  return stop_check(trace.iterates, rule, trace.iterates.size(), t_max);
}

namespace detail {

inline Vector select_output(const std::vector<Vector>& iterates, const OutputRule& rule, Stream rng) {
  if (iterates.empty()) throw InternalError("no iterates to select from");
  if (rule.kind == OutputRule::Kind::UniformRandomIterate) return iterates[rng.below(iterates.size())];
  const std::size_t w = std::min(rule.window, iterates.size());
  Vector avg(iterates.back().size(), 0.0);
  for (std::size_t s = iterates.size() - w; s < iterates.size(); ++s)
    for (std::size_t i = 0; i < avg.size(); ++i) avg[i] += iterates[s][i];
  for (double& v : avg) v /= static_cast<double>(w);
  return avg;
}

inline double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double e : v) s += e * e;
  return std::sqrt(s);
}

inline constexpr std::uint64_t kIterationTag = 0x1000;
inline constexpr std::uint64_t kEvalTag = 0x2000;
inline constexpr std::uint64_t kOutputTag = 0x3000;
inline constexpr std::uint64_t kSaaSampleTag = 0x4000;

class Clock {
 public:
  double elapsed_ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

template <CompositeModel M>
void maybe_checkpoint(const M& model, const RunConfig& cfg, RunTrace& trace, std::span<const double> x,
                      std::size_t t, std::size_t samples, const Clock& clock) {
  if (cfg.eval_every == 0) return;
  if (t % cfg.eval_every != 0 && t != 1) return;
  const Stream eval = Stream(cfg.seed).substream(kEvalTag);
  const auto [value, se] = estimate_objective(model, x, cfg.eval_samples, eval);
  trace.objective.push_back({t, samples, value, se, cfg.eval_samples, clock.elapsed_ms()});
}

/// Shared x-space loop; `estimate` returns the gradient sample at (x, t, iteration stream).
template <CompositeModel M, class Estimate>
RunTrace run_x_space(const M& model, const RunConfig& cfg, Estimate&& estimate) {
  cfg.validate();
  const BoxDomain& dom = model.domain();
  const Clock clock;
  RunTrace trace;
  trace.method = cfg.method;
  Vector x = dom.project(cfg.initial ? std::span<const double>(*cfg.initial) : std::span<const double>(Vector(dom.dim(), 0.0)));
  const Stream root(cfg.seed);
  std::size_t samples = 0;
  std::size_t t = 1;
  for (; t <= cfg.max_iters; ++t) {
    if (cfg.check_feasibility && !dom.contains(x)) throw InternalError("iterate left the feasible box");
    trace.iterates.push_back(x);
    maybe_checkpoint(model, cfg, trace, x, t, samples, clock);
    Stream it = root.substream(kIterationTag).substream(t);
    const GradientSample g = estimate(x, t, it);
    samples += g.samples_used;
    trace.samples_consumed.push_back(samples);
    trace.grad_norms.push_back(norm2(g.vector));
    const double gamma = cfg.step.at(t);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] -= gamma * g.vector[i];
    x = dom.project(x);
    if (cfg.stop.kind != StopRule::Kind::FixedT && stop_check(trace.iterates, cfg.stop, t, cfg.max_iters)) {
      trace.stopped_early = t < cfg.max_iters;
      break;
    }
  }
  trace.iterations = trace.iterates.size();
  trace.final_iterate = x;
  trace.chosen_output = select_output(trace.iterates, cfg.output, root.substream(kOutputTag));
  trace.wall_ms = clock.elapsed_ms();
  return trace;
}

}  // namespace detail

/// Regularized projected SGD:  x^{t+1} = Pi_X(x^t - gamma_t (v(x^t) + lambda_t x^t)).
template <CompositeModel M>
RunTrace run_rsg(const M& model, RunConfig cfg) {
  return detail::run_x_space(model, cfg, [&](std::span<const double> x, std::size_t t, Stream& it) {
    Stream xi = it.substream(stream_tag::kXi);
    return grad_estimate_regularized(model, x, cfg.lambda.at(t), xi);
  });
}

/// Plain projected SGD: RSG with lambda = 0.
template <CompositeModel M>
RunTrace run_sg(const M& model, RunConfig cfg) {
  cfg.method = Method::SG;
  cfg.lambda = LambdaSchedule::zero();
  return run_rsg(model, cfg);
}

/// Mirror SGD: gradient preconditioned by two independent Neumann inverse estimates.
template <CompositeModel M>
RunTrace run_msg(const M& model, RunConfig cfg) {
  cfg.method = Method::MSG;
  return detail::run_x_space(model, cfg, [&](std::span<const double> x, std::size_t t, Stream& it) {
    Stream a = it.substream(stream_tag::kInverseA);
    Stream b = it.substream(stream_tag::kInverseB);
    Stream xi = it.substream(stream_tag::kXi);
    return grad_estimate_mirror(model, x, cfg.K, cfg.lambda.at(t), a, b, xi);
  });
}

/// SAA+SG: freeze n samples, run projected SGD on the empirical
/// reformulation over the shrunken image box, map the output back.
template <CompositeModel M>
RunTrace run_saa_sg(const M& model, RunConfig cfg) {
  cfg.method = Method::SAA_SG;
  cfg.validate();
  const BoxDomain& dom = model.domain();
  const detail::Clock clock;
  const Stream root(cfg.seed);
  Stream sample_stream = root.substream(detail::kSaaSampleTag);
  const EmpiricalTransform transform = EmpiricalTransform::sample(model, cfg.n, sample_stream);

  const double delta0 =
      cfg.delta0.value_or(1.0 / std::sqrt(static_cast<double>(dom.dim()) * static_cast<double>(cfg.max_iters)));
  const double delta = std::min(delta0, transform.max_shrink());
  if (!(delta > 0.0)) throw InstanceError("degenerate sample set: the empirical image box has zero width");
  const BoxDomain ubox = transform.image_box(delta);

  RunTrace trace;
  trace.method = Method::SAA_SG;
  trace.delta = delta;
  const Vector x1 = dom.project(cfg.initial ? std::span<const double>(*cfg.initial) : std::span<const double>(Vector(dom.dim(), 0.0)));
  Vector u = ubox.project(transform.value(x1));
  std::size_t samples = cfg.n;
  for (std::size_t t = 1; t <= cfg.max_iters; ++t) {
    const Vector x = transform.inverse(u);
    if (cfg.check_feasibility && !dom.contains(x)) throw InternalError("g_hat^{-1}(u) left the feasible box");
    trace.iterates.push_back(x);
    trace.u_iterates.push_back(u);
    detail::maybe_checkpoint(model, cfg, trace, x, t, samples, clock);
    Stream it = root.substream(detail::kIterationTag).substream(t);
    Stream xi_stream = it.substream(stream_tag::kXi);
    const Vector& xi_prime = transform.samples()[static_cast<std::size_t>(xi_stream.below(transform.n()))];
    const Vector v = saa_reform_term(transform, model, x, xi_prime, xi_stream);
    trace.samples_consumed.push_back(samples);
    trace.grad_norms.push_back(detail::norm2(v));
    const double gamma = cfg.step.at(t);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] -= gamma * v[i];
    u = ubox.project(u);
    if (cfg.stop.kind != StopRule::Kind::FixedT && stop_check(trace.iterates, cfg.stop, t, cfg.max_iters)) {
      trace.stopped_early = t < cfg.max_iters;
      break;
    }
  }
  trace.iterations = trace.iterates.size();
  trace.final_iterate = transform.inverse(u);
  trace.chosen_output_u = detail::select_output(trace.u_iterates, cfg.output, root.substream(detail::kOutputTag));
  trace.chosen_output = transform.inverse(trace.chosen_output_u);
  trace.wall_ms = clock.elapsed_ms();
  return trace;
}

/// Dispatches on cfg.method.
template <CompositeModel M>
RunTrace run(const M& model, const RunConfig& cfg) {
  switch (cfg.method) {
    case Method::SG: return run_sg(model, cfg);
    case Method::RSG: return run_rsg(model, cfg);
    case Method::MSG: return run_msg(model, cfg);
    case Method::SAA_SG: return run_saa_sg(model, cfg);
  }
  throw ArgumentError("unknown method");
}

}  // namespace hcopt
