#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>

#include "grem/aging.hpp"
#include "grem/analytics.hpp"

using namespace grem;

TEST(Stable, LaplaceTransform) {
  for (double a : {0.3, 0.5, 0.8}) {
    Rng rng(11);
    const int n = 200000;
    double m = 0, m2 = 0;
    for (int k = 0; k < n; ++k) {
      const double v = std::exp(-sample_positive_stable(a, rng));
      m += v;
      m2 += v * v;
    }
    m /= n;
    const double se = std::sqrt((m2 / n - m * m) / n);
    EXPECT_NEAR(m, std::exp(-1.0), 4 * se);
  }
}

TEST(RowSumMoment, MonteCarloOracle) {
  // row sum of PPP(alpha2) is stable with Laplace exponent Gamma(1 - alpha2) l^alpha2
  const double a1 = 2.0 / 9, a2 = 2.0 / 3, p = 0.1;
  const double scale = std::pow(std::tgamma(1 - a2), 1 / a2) / (1 - p);
  Rng rng(12);
  const int n = 400000;
  double m = 0, m2 = 0;
  for (int k = 0; k < n; ++k) {
    const double v = std::pow(scale * sample_positive_stable(a2, rng), a1);
    m += v;
    m2 += v * v;
  }
  m /= n;
  const double se = std::sqrt((m2 / n - m * m) / n);
  EXPECT_NEAR(row_sum_moment(a1, a2, p), m, 4 * se);
}

TEST(AnnealedPool, TotalsMatchLaplaceFunctional) {
  // each state refires Poisson(E) times: E exp(-T) = exp(-int (1 - exp(-E f/(1+f))) C a f^{-1-a} df)
  const double a = 0.5, C = 1.0;
  for (double E : {0.5, 2.0}) {
    auto g = [&](double f) { return -std::expm1(-E * f / (1 + f)) * C * a * std::pow(f, -1 - a); };
    const double I = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(g, 0.0, 1.0, 20, 1e-12) +
                     boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
                         g, 1.0, std::numeric_limits<double>::infinity(), 20, 1e-12);
    const int n = 20000;
    double m = 0;
    for (int k = 0; k < n; ++k) {
      Rng rng = derive_stream(13, "pool", k);
      AnnealedPool pool(a, C, 1e-5, 1.0);
      m += std::exp(-pool.expose_total(E, rng)) / n;
    }
    EXPECT_NEAR(m, std::exp(-I), 0.01) << "E = " << E;
  }
}

TEST(AnnealedPool, ChunkedExposureMatchesSingleShot) {
  const int n = 20000;
  double one = 0, many = 0;
  for (int k = 0; k < n; ++k) {
    Rng r1 = derive_stream(14, "single", k), r2 = derive_stream(14, "chunked", k);
    AnnealedPool p1(0.6, 1.0, 1e-5), p2(0.6, 1.0, 1e-5);
    one += std::exp(-p1.expose_total(2.0, r1)) / n;
    double t = 0;
    for (int c = 0; c < 4; ++c) t += p2.expose_total(0.5, r2);
    many += std::exp(-t) / n;
    EXPECT_NEAR(p2.exposure(), 2.0, 1e-12);
  }
  EXPECT_NEAR(one, many, 0.012);
}

TEST(AnnealedPool, RejectsBadParameters) { EXPECT_THROW(AnnealedPool(1.2, 1, 1e-3), std::invalid_argument); }

TEST(Hill, ParetoIndexRecovered) {
  Rng rng(15);
  std::vector<double> x(100000);
  for (auto& v : x) v = std::pow(rng.uniform(), -1 / 0.5);
  const auto h = hill_estimate(x);
  EXPECT_FALSE(h.degenerate);
  EXPECT_NEAR(h.alpha, 0.5, 0.02);
  EXPECT_TRUE(hill_estimate(std::vector<double>(50, 1.0)).degenerate);
}

TEST(Aging, BelowFtHalfIndex) {
  AnnealedModel m;
  m.regime = Regime::BelowFT;
  m.alpha1 = 0.5;
  m.alpha2 = 2.0 / 3;
  m.p = 0.1;
  m.epsRel1 = 1e-6;
  const auto e = estimate_pi(m, {1e-3, 1.0, 10000}, 21);
  EXPECT_NEAR(e.value, 0.05, 0.02);
  EXPECT_FALSE(e.flagged);
  EXPECT_EQ(e.violations, 0u);
  EXPECT_EQ(e.only2, 0.0);
  EXPECT_EQ(e.both, 0.0);
}

TEST(Aging, AboveFtMatchesArcsine) {
  AnnealedModel m;
  m.regime = Regime::AboveFT;
  Rng g(3);
  m.gamma1 = sample_ppp_decreasing(m.alpha1, 64, g);
  const auto e = estimate_pi(m, {1e-3, 1.0, 10000}, 22);
  EXPECT_NEAR(e.value, arcsine_cdf(2.0 / 3, 0.5), 0.02);
  EXPECT_EQ(e.violations, 0u);
  EXPECT_EQ(e.only1, 0.0);
  EXPECT_EQ(e.only2, 0.0);
}

TEST(Aging, GridIsMonotoneAndBounded) {
  AnnealedModel m;
  m.regime = Regime::AtFT;
  const auto g = estimate_pi_grid(m, 1e-2, {0.25, 0.5, 1, 2, 4, 8}, 2000, 23);
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_GE(g[i].value, 0.0);
    EXPECT_LE(g[i].value, 1.0);
    EXPECT_EQ(g[i].violations, 0u);
    if (i) {
      EXPECT_LE(g[i].value, g[i - 1].value);
    }
  }
}

TEST(Aging, ReplicaOrderInvariance) {
  AnnealedModel m;
  m.regime = Regime::BelowFT;
  const auto a = estimate_pi_grid(m, 1e-2, {1.0}, 500, 9);
  const auto b = estimate_pi_grid(m, 1e-2, {1.0}, 500, 9);
  EXPECT_EQ(a[0].value, b[0].value);
  EXPECT_THROW(estimate_pi_grid(m, 1e-2, {1.0}, 50, 9), std::invalid_argument);
}

TEST(Aging, CurveRejectsIncreasingTw) {
  AnnealedModel m;
  m.regime = Regime::BelowFT;
  EXPECT_THROW(aging_curve(m, m.alpha1, m.alpha2, m.p, {1.0}, {1e-3, 1e-2}, 200, 1), std::invalid_argument);
}

TEST(Scaling, SyntheticControl) {
  ScalingQuery q;
  q.clock = ScalingClock::Synthetic;
  q.syntheticAlpha = 0.5;
  const auto rows = clock_smalltime_scaling(q, {1e-3}, {1.0}, 100000, 31);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_NEAR(rows[0].fit.alpha, 0.5, 0.02);
  EXPECT_EQ(rows[0].quantiles.size(), kScalingLevels.size());
  EXPECT_THROW(clock_smalltime_scaling(q, {1e-3, 1e-2}, {1.0}, 1000, 1), std::invalid_argument);
}

TEST(IntermediateGuard, Window) {
  EXPECT_NEAR(beta_intermediate(0.1, 0.5), 1.0531, 1e-4);
  EXPECT_NO_THROW(check_intermediate_beta(0.1, 0.5, 0.8));
  EXPECT_THROW(check_intermediate_beta(0.1, 0.5, 1.2), std::invalid_argument);
  EXPECT_THROW(check_intermediate_beta(0.1, 0.5, 0.5), std::invalid_argument);
  try {
    check_intermediate_beta(0.1, 0.5, 1.2);
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("beta_int"), std::string::npos);
  }
}
