#include <gtest/gtest.h>

#include "hcopt/oracles.hpp"

using namespace hcopt;

namespace {

Problem square(const Distribution& xi, double upper = 1.0) {
  return Problem(BoxDomain::uniform(1, 0.0, upper), PhiFamily::trunc_min(), XiSampler::iid(1, xi),
                 OuterFunction::quadratic({0.0}, {}, 2.0 * upper));
}

Problem one_dim() {
  return Problem(BoxDomain::uniform(1, 0.0, 0.9), PhiFamily::trunc_min(), XiSampler::iid(1, Distribution::uniform(0, 1)),
                 OuterFunction::quadratic({0.3}, {}, 1.2));
}

// g(x) = integral_0^x P(xi > t) dt by composite Simpson on the cdf.
double integrate_survival(const Distribution& d, double x) {
  const int n = 20000;
  const double h = x / n;
  double s = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double w = (k == 0 || k == n) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    s += w * (1.0 - d.cdf(k * h));
  }
  return s * h / 3.0;
}

}  // namespace

TEST(FiniteDifference, SquareOfTruncMin) {
  const FiniteDiffResult r = finite_diff_grad(square(Distribution::uniform(0, 1)), Vector{0.5}, 1e-3, 1000000, 1);
  EXPECT_NEAR(r.gradient[0], 0.5, 0.01);
  EXPECT_FALSE(r.one_sided[0]);
  EXPECT_LT(r.std_error[0], 0.01);
}

TEST(FiniteDifference, ConstantOuterIsExactlyZero) {
  const Problem p(BoxDomain::uniform(2, 0.0, 1.0), PhiFamily::trunc_min(), XiSampler::iid(2, Distribution::uniform(0, 1)),
                  OuterFunction::constant(4.0, 2));
  const FiniteDiffResult r = finite_diff_grad(p, Vector{0.4, 0.6}, 1e-2, 1000, 2);
  EXPECT_EQ(r.gradient, (Vector{0.0, 0.0}));
}

TEST(FiniteDifference, OneSidedAtBoundary) {
  const Problem p = square(Distribution::uniform(0, 1));
  const FiniteDiffResult r = finite_diff_grad(p, Vector{0.0}, 0.1, 10000, 3);
  EXPECT_TRUE(r.one_sided[0]);
  // forward difference of E[(x ^ xi)^2] between 0 and 0.1 is (0.1^2 - 0.1^3 / 3 ... ) / 0.1
  const double f01 = 0.1 * 0.1 * 0.9 + std::pow(0.1, 3) / 3.0;
  EXPECT_NEAR(r.gradient[0], f01 / 0.1, 4 * r.std_error[0] + 1e-9);
  EXPECT_THROW(finite_diff_grad(p, Vector{0.0}, 0.1, 100, 3, {.allow_one_sided = false}), ArgumentError);
}

TEST(FiniteDifference, RejectsBadArguments) {
  const Problem p = square(Distribution::uniform(0, 1));
  EXPECT_THROW(finite_diff_grad(p, Vector{0.5}, 0.0, 100, 1), ArgumentError);
  EXPECT_THROW(finite_diff_grad(p, Vector{0.5}, 0.1, 0, 1), ArgumentError);
  EXPECT_THROW(finite_diff_grad(p, Vector{1.5}, 0.1, 100, 1), ArgumentError);
  EXPECT_THROW(finite_diff_grad(p, Vector{0.5}, 2.0, 100, 1), ArgumentError);
}

TEST(GridSearch, OneDimensionalTestProblem) {
  const OracleResult r = grid_global_min(one_dim(), 0.01, 20000, 4);
  ASSERT_TRUE(r.argmin);
  EXPECT_NEAR((*r.argmin)[0], 0.3, 0.01 + 1e-12);
  EXPECT_NEAR(r.value, 0.009, 4 * r.std_error + 1e-4);
  EXPECT_EQ(r.method, OracleMethod::GridSearch);
  EXPECT_EQ(r.evaluations, 91u);
}

TEST(GridSearch, SquaredNormMinimizedAtOrigin) {
  const Problem p(BoxDomain::uniform(2, 0.0, 1.0), PhiFamily::trunc_min(), XiSampler::iid(2, Distribution::uniform(0, 1)),
                  OuterFunction::quadratic({0.0, 0.0}, {}, 4.0));
  const OracleResult r = grid_global_min(p, 0.1, 500, 5);
  EXPECT_EQ(*r.argmin, (Vector{0.0, 0.0}));
  EXPECT_EQ(r.value, 0.0);
}

TEST(GridSearch, SeparableArgminStacksOneDimensionalArgmins) {
  const std::vector<Distribution> laws{Distribution::uniform(0, 1), Distribution::uniform(0.2, 1.0)};
  const Vector target{0.3, 0.5};
  const Problem p(BoxDomain::uniform(2, 0.0, 1.0), PhiFamily::trunc_min(), XiSampler(laws), OuterFunction::quadratic(target, {}, 4.0));
  const OracleResult joint = grid_global_min(p, 0.02, 20000, 6);
  for (std::size_t i = 0; i < 2; ++i) {
    const Problem q(BoxDomain::uniform(1, 0.0, 1.0), PhiFamily::trunc_min(), XiSampler({laws[i]}),
                    OuterFunction::quadratic({target[i]}, {}, 2.0));
    const OracleResult single = grid_global_min(q, 0.02, 20000, 6);
    EXPECT_NEAR((*joint.argmin)[i], (*single.argmin)[0], 0.02 + 1e-12) << i;
  }
}

TEST(GridSearch, CostGuard) {
  const Problem p(BoxDomain::uniform(4, 0.0, 1.0), PhiFamily::trunc_min(), XiSampler::iid(4, Distribution::uniform(0, 1)),
                  OuterFunction::quadratic(Vector(4, 0.0), {}, 4.0));
  EXPECT_THROW(grid_global_min(p, 0.1, 10, 1), ArgumentError);
  EXPECT_THROW(grid_global_min(one_dim(), 0.0, 10, 1), ArgumentError);
}

TEST(ClosedFormG, Examples) {
  EXPECT_DOUBLE_EQ(closed_form_g(Distribution::uniform(0, 1), 0.5).value, 0.375);
  EXPECT_DOUBLE_EQ(closed_form_g(Distribution::uniform(0, 1), 1.0).value, 0.5);
  EXPECT_DOUBLE_EQ(closed_form_g(Distribution::uniform(0, 1), 3.0).value, 0.5);
  EXPECT_DOUBLE_EQ(closed_form_g(Distribution::discrete({0.2, 0.8}, {0.5, 0.5}), 0.5).value, 0.35);
  EXPECT_THROW(closed_form_g(Distribution::poisson(3.0), 1.0), UnsupportedError);
}

TEST(ClosedFormG, MatchesNumericIntegrationOfSurvival) {
  for (const Distribution& d : {Distribution::uniform(0.2, 1.3), Distribution::trunc_normal(0.5, 0.3),
                                Distribution::trunc_normal(-0.2, 0.5), Distribution::discrete({0.1, 0.4, 0.9}, {0.2, 0.5, 0.3})}) {
    for (double x : {0.05, 0.3, 0.6, 1.0, 1.7}) {
      const ClosedFormG cf = closed_form_g(d, x);
      // Simpson is only first order across the jumps of a discrete cdf
      const double tol = std::holds_alternative<DiscreteDist>(d.law()) ? 1e-4 : 1e-6;
      EXPECT_NEAR(cf.value, integrate_survival(d, x), tol) << x;
      EXPECT_NEAR(cf.derivative, 1.0 - d.cdf(x), 1e-12) << x;
    }
  }
}

TEST(ClosedFormG, MonteCarloAgreesOnGrid) {
  for (const Distribution& d : {Distribution::uniform(0, 1), Distribution::trunc_normal(0.5, 0.2),
                                Distribution::discrete({0.2, 0.8}, {0.5, 0.5})}) {
    const Problem p = square(d, 1.0);
    Stream s(7);
    for (int k = 0; k < 10; ++k) {
      const double x = 0.05 + 0.1 * k;
      const MeanEstimate e = estimate_g(p, Vector{x}, 20000, s);
      EXPECT_NEAR(e.mean[0], closed_form_g(d, x).value, 4 * e.std_error[0] + 1e-12) << x;
    }
  }
}

TEST(ClosedFormG, ProblemLevelRequiresTruncMin) {
  const Problem p(BoxDomain::uniform(1, 0.0, 1.0), PhiFamily::product(1.0), XiSampler::iid(1, Distribution::uniform(0, 1)),
                  OuterFunction::quadratic({0.0}, {}, 2.0));
  EXPECT_THROW(closed_form_g(p, Vector{0.5}), UnsupportedError);
  EXPECT_EQ(closed_form_g(square(Distribution::uniform(0, 1)), Vector{0.5}), (Vector{0.375}));
}
