#include <gtest/gtest.h>

#include "hcopt/distributions.hpp"
#include "hcopt/rng.hpp"

using namespace hcopt;

// Known-answer vectors published with the Random123 reference implementation.
TEST(Philox, KnownAnswerVectors) {
  using P = Philox4x32;
  EXPECT_EQ(P::generate({0, 0, 0, 0}, {0, 0}), (P::Counter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  EXPECT_EQ(P::generate({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}),
            (P::Counter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
  EXPECT_EQ(P::generate({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}),
            (P::Counter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(Stream, SameSeedSameSequence) {
  Stream a(42), b(42);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(Stream, DifferentSeedsDiffer) {
  Stream a(1), b(2);
  int same = 0;
  for (int i = 0; i < 100; ++i) same += a.next_u64() == b.next_u64();
  EXPECT_EQ(same, 0);
}

TEST(Stream, SubstreamDoesNotAdvanceParent) {
  Stream a(7), b(7);
  Stream child = a.substream(3);
  (void)child.next_u64();
  EXPECT_EQ(a.next_u64(), b.next_u64());
  EXPECT_NE(a.substream(1).next_u64(), a.substream(2).next_u64());
}

TEST(Stream, UniformMoments) {
  Stream s(11);
  double sum = 0, sq = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    sq += u * u;
  }
  EXPECT_NEAR(sum / n, 0.5, 4 * std::sqrt(1.0 / 12 / n));
  EXPECT_NEAR(sq / n, 1.0 / 3, 0.005);
}

TEST(Stream, BelowIsUniform) {
  Stream s(5);
  std::array<int, 7> counts{};
  const int n = 70000;
  for (int i = 0; i < n; ++i) ++counts[s.below(7)];
  for (int c : counts) EXPECT_NEAR(c, n / 7.0, 5 * std::sqrt(n / 7.0));
}

TEST(Stream, PoissonMeanSmallAndLarge) {
  for (double mean : {0.0, 0.7, 4.0, 55.0}) {
    Stream s(9);
    double sum = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
      const double k = s.poisson(mean);
      ASSERT_EQ(k, std::floor(k));
      sum += k;
    }
    EXPECT_NEAR(sum / n, mean, 4 * std::sqrt(std::max(mean, 1e-9) / n) + 1e-12) << mean;
  }
}

TEST(Distributions, TruncatedNormalStaysNonnegative) {
  const Distribution d = Distribution::trunc_normal(1.0, 2.0);
  Stream s(3);
  for (int i = 0; i < 10000; ++i) ASSERT_GE(d.sample(s), 0.0);
}

TEST(Distributions, QuantileInvertsCdf) {
  for (const Distribution& d : {Distribution::uniform(0.2, 1.5), Distribution::trunc_normal(0.5, 0.3)}) {
    for (double p : {0.05, 0.3, 0.5, 0.9}) EXPECT_NEAR(d.cdf(d.quantile(p)), p, 1e-9) << d.describe();
  }
}

TEST(Distributions, DiscreteRejectsBadWeights) {
  EXPECT_THROW(Distribution::discrete({1.0, 2.0}, {0.5}), Error);
  EXPECT_THROW(Distribution::discrete({1.0}, {-1.0}), Error);
}
