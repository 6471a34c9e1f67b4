#pragma once

// Counter-based random streams.
//
// Every stochastic routine in the library takes a Stream explicitly; there is
// no global generator. A Stream is a (seed, stream id, counter) triple feeding
// Philox4x32-10, so any draw is a pure function of those three values and
// substreams can be derived without touching the parent's position.
//
// The variate transforms below (uniform, normal, Poisson, binomial) are
// written out rather than taken from <random> because the standard library's
// distributions are implementation-defined and would make traces differ
// between toolchains.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>

#include "hcopt/error.hpp"

namespace hcopt {

/// Philox4x32 with 10 rounds (Salmon et al., SC'11).
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr Counter generate(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += 0x9E3779B9u;
        key[1] += 0xBB67AE85u;
      }
      const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }
};

/// SplitMix64 finalizer, used to hash stream ids.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

class Stream {
 public:
  using result_type = std::uint64_t;

  Stream() = default;
  explicit Stream(std::uint64_t seed, std::uint64_t stream_id = 0) : seed_(seed), id_(stream_id) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return next_u64(); }

  std::uint64_t next_u64() {
    if (cursor_ == 2) refill();
    return buffer_[cursor_++];
  }

  /// Deterministic child stream; does not advance this stream.
  Stream substream(std::uint64_t tag) const { return Stream(seed_, mix64(id_ ^ mix64(tag + 0x632BE59BD9B4E019ull))); }

  /// Child stream keyed by the next draw of this stream (advances it).
  Stream split() { return Stream(seed_, mix64(id_ ^ next_u64())); }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t id() const { return id_; }
  std::uint64_t blocks_used() const { return block_; }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform on the open interval (0, 1).
  double uniform_open() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  /// Uniform integer in {0, ..., n-1} by rejection (no modulo bias).
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw ArgumentError("Stream::below requires n >= 1");
    const std::uint64_t limit = max() - max() % n;
    std::uint64_t v;
    do {
      v = next_u64();
    } while (v >= limit);
    return v % n;
  }

  /// Standard normal by Box-Muller (one of the pair is discarded).
  double normal() {
    const double u1 = uniform_open();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  /// Poisson(mean). Inversion for small means so that one uniform is used,
  /// PTRS transformed rejection (Hormann 1993) otherwise.
  double poisson(double mean) {
    if (!(mean >= 0.0) || !std::isfinite(mean)) throw ArgumentError("Poisson mean must be finite and >= 0");
    if (mean == 0.0) return 0.0;
    if (mean < 30.0) {
      const double u = uniform();
      double p = std::exp(-mean);
      double cdf = p;
      double k = 0.0;
      while (u >= cdf) {
        k += 1.0;
        p *= mean / k;
        cdf += p;
        if (p < 1e-300 && k > mean) break;
      }
      return k;
    }
    const double slam = std::sqrt(mean);
    const double loglam = std::log(mean);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
      const double u = uniform() - 0.5;
      const double v = uniform_open();
      const double us = 0.5 - std::fabs(u);
      const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
      if (us >= 0.07 && v <= vr) return k;
      if (k < 0.0 || (us < 0.013 && v > us)) continue;
      if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <= -mean + k * loglam - std::lgamma(k + 1.0))
        return k;
    }
  }

  /// Binomial(n, p) as a count of n Bernoulli trials. Trial j always uses the
  /// j-th uniform, so two calls with n1 <= n2 on copies of one stream are
  /// coupled (the first n1 trials agree).
  double binomial(std::uint64_t n, double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw ArgumentError("binomial p must lie in [0, 1]");
    std::uint64_t hits = 0;
    for (std::uint64_t j = 0; j < n; ++j) hits += uniform() < p ? 1 : 0;
    return static_cast<double>(hits);
  }

  /// Index drawn with probability proportional to weights.
  std::size_t discrete(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    const double u = uniform() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      acc += weights[i];
      if (u < acc) return i;
    }
    return weights.size() - 1;
  }

 private:
  void refill() {
    const Philox4x32::Counter ctr = {static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                                     static_cast<std::uint32_t>(id_), static_cast<std::uint32_t>(id_ >> 32)};
    const Philox4x32::Key key = {static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)};
    const auto out = Philox4x32::generate(ctr, key);
    buffer_[0] = std::uint64_t{out[0]} | (std::uint64_t{out[1]} << 32);
    buffer_[1] = std::uint64_t{out[2]} | (std::uint64_t{out[3]} << 32);
    ++block_;
    cursor_ = 0;
  }

  std::uint64_t seed_ = 0;
  std::uint64_t id_ = 0;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int cursor_ = 2;
};

}  // namespace hcopt
