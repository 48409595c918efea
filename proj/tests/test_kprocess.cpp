#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "grem/environment.hpp"
#include "grem/kprocess.hpp"

using namespace grem;

namespace {

double tv(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s / 2;
}

}  // namespace

TEST(LimitSpecs, HalfPDoublesGammaTwo) {
  const auto c = sample_limit_cascade(0.3, 0.6, 3, 4, 2);
  const auto s = build_limit_specs(c, 0.5, 1.0, Regime::AboveFT);
  for (int x1 = 0; x1 < 3; ++x1)
    for (int x2 = 0; x2 < 4; ++x2) {
      const auto i = static_cast<std::size_t>(x1 * 4 + x2);
      EXPECT_EQ(s.k.label[i], std::make_pair(x1, x2));
      EXPECT_NEAR(s.k.f[i], 2 * c.gamma2Rows[x1][x2], 1e-15);
      EXPECT_NEAR(s.k.w[i], c.gamma1[x1], 1e-15);
    }
}

TEST(ClockPath, InverseAndStraddle) {
  ClockPath c;
  c.push(0.5, 0, 1.0);
  c.push(1.5, 1, 2.0);
  c.push(2.0, 0, 0.5);
  EXPECT_EQ(clock_inverse(c, 0.0), 0.5);
  EXPECT_EQ(clock_inverse(c, 2.2), 1.5);
  EXPECT_THROW(clock_inverse(c, 10.0), std::out_of_range);
  EXPECT_EQ(c.gamma(1.5), 3.0);
  EXPECT_EQ(c.gamma_minus(1.5), 1.0);
  EXPECT_TRUE(c.straddles(1.2, 1.5));
  EXPECT_FALSE(c.straddles(1.2, 2.0));
  c.push(3.0, 0, 0.0);
  EXPECT_EQ(c.clamped, 1u);
}

TEST(SimulateK, SingleStateExponentialSojourns) {
  KSpec spec{{1.0}, {1.0}, {}, 0};
  Rng rng(3);
  const auto r = simulate_k(spec, 20000, rng);
  double mean = 0;
  for (const auto& e : r.path) {
    EXPECT_EQ(e.x1, 0);
    mean += e.duration;
  }
  mean /= static_cast<double>(r.path.size());
  EXPECT_NEAR(mean, 1.0, 4 / std::sqrt(static_cast<double>(r.path.size())));
}

TEST(SimulateK, OccupationMatchesProductOnFiftyStates) {
  KSpec spec;
  Rng g(4);
  for (int x = 0; x < 50; ++x) {
    spec.f.push_back(std::exp(2 * g.uniform() - 1));
    spec.w.push_back(std::exp(2 * g.uniform() - 1));
  }
  std::vector<double> target(50);
  for (int x = 0; x < 50; ++x) target[x] = spec.f[x] * spec.w[x];
  const double z = std::accumulate(target.begin(), target.end(), 0.0);
  for (auto& v : target) v /= z;
  Rng rng(5);
  const auto r = simulate_k(spec, 1e4, rng);
  EXPECT_LT(tv(occupation(r.path, 50, 1), target), 0.02);
}

TEST(SimulateK2, JointOccupationMatchesProduct) {
  K2Spec spec;
  Rng g(6);
  for (int x = 0; x < 10; ++x) {
    spec.f.push_back(std::exp(g.uniform() - 0.5));
    spec.fprime.emplace_back();
    for (int y = 0; y < 10; ++y) spec.fprime.back().push_back(std::exp(2 * g.uniform() - 1));
  }
  std::vector<double> target(100);
  for (int x = 0; x < 10; ++x)
    for (int y = 0; y < 10; ++y) target[x * 10 + y] = spec.f[x] * spec.fprime[x][y];
  const double z = std::accumulate(target.begin(), target.end(), 0.0);
  for (auto& v : target) v /= z;
  Rng rng(7);
  const auto r = simulate_k2(spec, 1e4, rng);
  EXPECT_LT(tv(occupation(r.path, 10, 10), target), 0.02);
  // Gamma_1 increments are the level-2 masses accumulated within each level-1 interval
  EXPECT_NEAR(r.gamma1.total(), r.gammaPrime.total(), 1e-9 * r.gammaPrime.total());
}

TEST(ProductLimit, ConditionalLawAndFreshDraws) {
  ProductSpec spec{{1.0, 0.5}, {{3.0, 1.0}, {1.0, 1.0}}};
  const int reps = 10000;
  std::vector<int> cnt(4, 0);
  double sa = 0, sb = 0, sab = 0;
  int same = 0;
  for (int r = 0; r < reps; ++r) {
    Rng rng = derive_stream(8, "product", r);
    ClockPath clk;
    const auto s = simulate_product_limit(spec, {1.0, 1.0 + 1e-12}, rng, &clk);
    ++cnt[s[0].x1 * 2 + s[0].x2];
    if (s[0].x1 != s[1].x1 || s[0].x1 != 0) continue;
    ++same;
    const double a = s[0].x2 == 0, b = s[1].x2 == 0;
    sa += a;
    sb += b;
    sab += a * b;
  }
  ASSERT_GT(same, 1000);
  const double ma = sa / same, mb = sb / same, cov = sab / same - ma * mb;
  EXPECT_LT(std::abs(cov), 4 * ma * (1 - ma) / std::sqrt(static_cast<double>(same)));
  // X2 | X1 = 0 ~ (3/4, 1/4): chi-square with one degree of freedom
  const double n0 = cnt[0] + cnt[1];
  const double chi = std::pow(cnt[0] - 0.75 * n0, 2) / (0.75 * n0) + std::pow(cnt[1] - 0.25 * n0, 2) / (0.25 * n0);
  EXPECT_LT(chi, 6.63);
}

TEST(Restricted, SingleCellIsIdentity) {
  KPath path;
  for (int k = 0; k < 50; ++k) path.push_back({static_cast<double>(k), k % 3 == 0 ? 0 : 1, 0, 1.0});
  const auto r = restricted_transitions(path, 1, 1, 10);
  EXPECT_EQ(r.p(0, 0), 1.0);
  EXPECT_THROW(restricted_transitions(path, 1, 1, 1000), std::runtime_error);
}
