#include <gtest/gtest.h>

#include <boost/math/special_functions/beta.hpp>
#include <cmath>

#include "grem/analytics.hpp"
#include "grem/rng.hpp"

using namespace grem;

TEST(BIntegral, BetaClosedForms) {
  for (double a : {0.1, 0.7, 2.5}) {
    EXPECT_NEAR(B_integral(1, a, 1), 1 / (a * (a + 1)), 1e-13 / (a * (a + 1)));
    EXPECT_NEAR(B_integral(0, a, 1), (2 * a + 1) / (a * (a + 1)), 1e-13 * (2 * a + 1) / (a * (a + 1)));
  }
}

TEST(Ehrenfest, Anchors) {
  for (double t : {0.1, 0.5, 0.9}) EXPECT_NEAR(ehrenfest_pgf(1, 1, t), t, 1e-14);
  EXPECT_NEAR(ehrenfest_pgf(2, 1, 0.5), 2.0 / 7, 1e-14);
  EXPECT_NEAR(ehrenfest_pgf(3, 1, 0.5), 11.0 / 58, 1e-14);
}

TEST(Ehrenfest, AgreesWithLinearSystemProperty) {
  for (int n2 = 1; n2 <= 10; ++n2)
    for (int i = 0; i <= n2; ++i)
      for (int k = 1; k <= 9; ++k) {
        const double t = k / 10.0;
        EXPECT_NEAR(ehrenfest_pgf(n2, i, t), ehrenfest_pgf_oracle(n2, i, t), 1e-10);
      }
}

TEST(Ehrenfest, MonotoneInDistanceAndT) {
  for (int n2 = 2; n2 <= 12; ++n2)
    for (int i = 1; i < n2; ++i) {
      EXPECT_GE(ehrenfest_pgf(n2, i, 0.6), ehrenfest_pgf(n2, i + 1, 0.6));
      EXPECT_LE(ehrenfest_pgf(n2, i, 0.6), ehrenfest_pgf(n2, i, 0.7));
    }
  EXPECT_THROW(ehrenfest_pgf(3, 4, 0.5), std::invalid_argument);
  EXPECT_THROW(ehrenfest_pgf(3, 1, 1.0), std::invalid_argument);
}

TEST(Pi, AnchorsAndLimits) {
  EXPECT_NEAR(pi_analytic(1, 1), 2.0 / 3, 1e-14);
  EXPECT_NEAR(pi_analytic(2, 1), 3.0 / 7, 1e-14);
  EXPECT_NEAR(pi_analytic(6, 1e-12), 1.0, 1e-9);
  EXPECT_NEAR(pi_hat(2, 1, 3), 9.0 / 7, 1e-14);
}

TEST(Pi, AgreesWithBruteForce) {
  for (int n2 = 1; n2 <= 10; ++n2)
    for (double l : {0.1, 1.0, 10.0}) EXPECT_NEAR(pi_analytic(n2, l), pi_bruteforce(n2, l), 1e-10);
}

TEST(Arcsine, ClosedFormAtHalf) {
  for (double u : {0.05, 0.25, 0.5, 0.8, 0.99})
    EXPECT_NEAR(arcsine_cdf(0.5, u), 2 / M_PI * std::asin(std::sqrt(u)), 1e-11);
  EXPECT_NEAR(arcsine_cdf(0.5, 0.25), 1.0 / 3, 1e-11);
  for (double a : {0.1, 4.0 / 27, 2.0 / 3, 0.9}) EXPECT_EQ(arcsine_cdf(a, 1.0), 1.0);
}

TEST(Arcsine, MonotoneProperty) {
  for (double a : {0.15, 0.4, 0.75}) {
    double prev = 0;
    for (int k = 1; k <= 50; ++k) {
      const double v = arcsine_cdf(a, k / 50.0);
      EXPECT_GE(v, prev);
      prev = v;
    }
  }
}

TEST(Arcsine, RegularizedBetaOracle) {
  // sin(pi a)/pi = 1/B(a, 1-a), so Asl_a(u) = I_u(a, 1-a)
  for (double a : {0.1, 4.0 / 27, 0.2, 0.6, 2.0 / 3, 0.9})
    for (double u : {0.01, 0.2, 0.37, 0.5, 0.75, 0.999}) EXPECT_NEAR(arcsine_cdf(a, u), boost::math::ibeta(a, 1 - a, u), 1e-11);
}

TEST(AgingPrediction, Regimes) {
  const double a1 = 2.0 / 9, a2 = 2.0 / 3;
  EXPECT_NEAR(aging_prediction(Regime::BelowFT, 1, 0.5, a2, 0.1), 0.05, 1e-11);
  EXPECT_NEAR(aging_prediction(Regime::AtFT, 1, a1, a2, 0.1),
              0.1 * arcsine_cdf(4.0 / 27, 0.5) + 0.9 * arcsine_cdf(a2, 0.5), 1e-14);
  // 1 - Asl_a(1/(1+theta)) ~ theta^{1-a}
  double prev = 1;
  for (double th : {1e-3, 1e-6, 1e-9, 1e-12}) {
    const double gap = 1 - aging_prediction(Regime::AboveFT, th, a1, a2, 0.1);
    EXPECT_LT(gap, prev);
    EXPECT_LT(gap, std::pow(th, 1 - a2));
    prev = gap;
  }
  EXPECT_NEAR(aging_prediction(Regime::BelowFT, 1e-12, a1, a2, 0.1), 0.1, 1e-9);
  EXPECT_THROW(aging_prediction(Regime::AtFT, 0, a1, a2, 0.1), std::invalid_argument);
}

TEST(Ks, UniformSampleAccepted) {
  Rng rng(3);
  std::vector<double> x(2000);
  for (auto& v : x) v = rng.uniform();
  const double D = ks_statistic(x, [](double u) { return u; });
  EXPECT_GT(kolmogorov_pvalue(x.size(), D), 0.001);
  for (auto& v : x) v = v * v;
  const double D2 = ks_statistic(x, [](double u) { return u; });
  EXPECT_LT(kolmogorov_pvalue(x.size(), D2), 1e-6);
}

TEST(Ks, GumbelInversionAccepted) {
  Rng rng(4);
  std::vector<double> x(3000);
  for (auto& v : x) v = -std::log(-std::log(rng.uniform()));
  EXPECT_GT(kolmogorov_pvalue(x.size(), ks_statistic(x, gumbel_cdf)), 0.001);
}
