#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "grem/entrance.hpp"
#include "grem/environment.hpp"

using namespace grem;

TEST(Lambda, AsymptoticValuesAndLimits) {
  EXPECT_NEAR(lambda_asymptotic(2, 0.5, 1.0), 0.5, 1e-15);
  EXPECT_NEAR(lambda_asymptotic(3, 1e-12, 2.0), 1.0, 1e-10);
  EXPECT_LT(lambda_asymptotic(3, 1e12, 2.0), 1e-10);
}

TEST(Lambda, ExactDoublingHalvesS) {
  const auto P = derive_params(16, 0.4, 0.6, 1.4);
  const auto env = sample_environment(P, 3);
  for (std::uint32_t w1 : {0u, 5u, 17u}) {
    const double l1 = lambda_exact(env, P, w1, 2), l2 = lambda_exact(env, P, w1, 4);
    EXPECT_NEAR(l2 / (1 - l2), 0.5 * l1 / (1 - l1), 1e-12 * l1 / (1 - l1));
  }
}

TEST(Lambda, ExactTracksAsymptoticForm) {
  auto P = derive_params(16, 0.4, 0.6, 1.0);
  P.beta = beta_from_zeta(P, 0.0);
  const auto env = sample_environment(P, 9);
  const auto w = scaled_weights(env, P);
  const auto top = rank_top(env, P, 2, 2).second;
  for (int x1 = 0; x1 < 2; ++x1) {
    const auto w1 = top.top1[x1];
    const double le = lambda_exact(env, P, w1, 2), la = lambda_asymptotic(2, w.psiN, w.gamma1(w1));
    EXPECT_NEAR(le / la, 1.0, 4.0 / P.N2);
  }
}

TEST(Nu1, SingleBlockAndHotLimit) {
  EntranceParams ep{1, 3, 0.7, {2.0}, {}};
  ASSERT_EQ(nu1(ep).size(), 1u);
  EXPECT_NEAR(nu1(ep)[0], 1.0, 1e-15);
  EntranceParams hot{3, 2, 1e9, {5.0, 1.0, 0.1}, {}};
  for (double v : nu1(hot)) EXPECT_NEAR(v, 1.0 / 3, 1e-6);
}

TEST(LimitNu1, HandValues) {
  const auto a = limit_nu1(Regime::AboveFT, {3.0, 1.0}, 2, 1.0);
  EXPECT_NEAR(a[0], 0.75, 1e-15);
  EXPECT_NEAR(a[1], 0.25, 1e-15);
  const auto t = limit_nu1(Regime::AtFT, {2.0, 1.0}, 2, 1.0);
  EXPECT_NEAR(t[0], 6.0 / 11, 1e-15);
  EXPECT_NEAR(t[1], 5.0 / 11, 1e-15);
  const auto z = limit_nu1(Regime::AtFT, {3.0, 1.0}, 2, 1e-9);
  EXPECT_NEAR(z[0], 0.75, 1e-8);
}

TEST(PredictEntrance, CylinderCaseIsUniform) {
  auto P = derive_params(12, 0.5, 0.6, 1.0);
  P.beta = beta_from_zeta(P, 0.0);
  const auto env = sample_environment(P, 4);
  const auto top = rank_top(env, P, 3, 2).second;
  Rng rng(1);
  for (int k = 0; k < 10; ++k) {
    const auto s = sample_outside_wbar(P, top, rng);
    EXPECT_FALSE(top.cylinder_of(s).has_value());
    EXPECT_NEAR(predict_entrance(env, P, top, {EntranceCaseKind::I4, 1, 0, -1, -1, s}), 1.0 / 3, 1e-15);
  }
}

TEST(PredictEntrance, TotalProbabilityInsideCylinder) {
  auto P = derive_params(12, 0.5, 0.6, 1.0);
  P.beta = beta_from_zeta(P, 0.5);
  const auto env = sample_environment(P, 7);
  const auto top = rank_top(env, P, 3, 2).second;
  // a state in the first cylinder outside the top
  SpinState s{top.top1[0], 0};
  while (top.rank_of(s)) ++s.w2;
  for (auto form : {LambdaForm::Exact, LambdaForm::Asymptotic}) {
    double sum = 0;
    for (int x1 = 0; x1 < 3; ++x1)
      for (int x2 = 0; x2 < 2; ++x2)
        sum += predict_entrance(env, P, top, {x1 == 0 ? EntranceCaseKind::I1 : EntranceCaseKind::I2, x1, x2, -1, -1, s},
                                form);
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
}

TEST(PredictEntrance, CaseMismatchRejected) {
  auto P = derive_params(10, 0.5, 0.6, 1.0);
  const auto env = sample_environment(P, 2);
  const auto top = rank_top(env, P, 2, 2).second;
  const SpinState inTop = top.state(0, 0);
  EXPECT_THROW(predict_entrance(env, P, top, {EntranceCaseKind::I3, 1, 1, -1, -1, inTop}), std::invalid_argument);
}

TEST(Validate, ZeroFieldFlagged) {
  GremEnvironment env;
  env.params = derive_params(8, 0.5, 0.6, 1.0);
  env.xi1.assign(16, 0.0);
  env.xi2.assign(256, 0.0);
  const auto top = rank_top(env, env.params, 2, 2).second;
  EXPECT_FALSE(low_temperature(env, env.params, top));
  const auto rows = validate_entrance(env, env.params, top, standard_entrance_cases(env.params, top, 1, 3), {});
  ASSERT_FALSE(rows.empty());
  for (const auto& r : rows) EXPECT_EQ(r.flag, "outside low-temperature regime");
}

TEST(TrapKernel, WorkedTwoByTwo) {
  const auto K = trap_kernel(2, 2, 1.0, {2.0, 1.0});
  EXPECT_NEAR(K.at(0, 0), 5.0 / 11, 1e-15);
  EXPECT_NEAR(K.at(0, 1), 5.0 / 11, 1e-15);
  EXPECT_NEAR(K.at(0, 2), 1.0 / 22, 1e-15);
  EXPECT_NEAR(K.at(0, 3), 1.0 / 22, 1e-15);
}

TEST(TrapKernel, SingleState) {
  const auto K = trap_kernel(1, 1, 0.3, {4.0});
  EXPECT_EQ(K.size(), 1);
  EXPECT_NEAR(K.at(0, 0), 1.0, 1e-15);
}

TEST(TrapKernel, RowsStochasticProperty) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const int M1 = 1 + static_cast<int>(rng.below(5)), M2 = 1 + static_cast<int>(rng.below(5));
    std::vector<double> g(M1);
    for (auto& v : g) v = std::exp(4 * rng.uniform() - 2);
    const double psi = std::exp(6 * rng.uniform() - 3);
    const auto K = trap_kernel(M1, M2, psi, g);
    for (int i = 0; i < K.size(); ++i) {
      double s = 0;
      for (int j = 0; j < K.size(); ++j) {
        EXPECT_GE(K.at(i, j), 0.0);
        s += K.at(i, j);
      }
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
}

TEST(TrapKernel, PrintedConventionBreaksRows) {
  const auto K = trap_kernel(3, 2, 1.0, {4.0, 1.0, 0.25}, CrossBlockLambda::PrintedArrival);
  double worst = 0;
  for (int i = 0; i < K.size(); ++i) {
    double s = 0;
    for (int j = 0; j < K.size(); ++j) s += K.at(i, j);
    worst = std::max(worst, std::abs(s - 1));
  }
  EXPECT_GT(worst, 1e-3);
}

TEST(TrapKernel, HotLimitFullyMixing) {
  const std::vector<double> g{3.0, 1.0};
  const auto K = trap_kernel(2, 3, 1e-10, g);
  for (int i = 0; i < K.size(); ++i)
    for (int j = 0; j < K.size(); ++j) EXPECT_NEAR(K.at(i, j), g[j / 3] / 4.0 / 3.0, 1e-8);
}

TEST(TrapSimulate, SingleStateIsConstant) {
  const auto K = trap_kernel(1, 1, 1.0, {1.0});
  Rng rng(2);
  const auto path = trap_simulate(K, {{2.0}}, 100.0, rng);
  for (int s : path.states) EXPECT_EQ(s, 0);
}
