#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>

#include "grem/dynamics.hpp"
#include "grem/environment.hpp"
#include "grem/rng.hpp"

using namespace grem;

namespace {

GremEnvironment zero_field(int N, double p, double a, double beta) {
  GremEnvironment env;
  env.params = derive_params(N, p, a, beta);
  env.xi1.assign(std::size_t{1} << env.params.N1, 0.0);
  env.xi2.assign(std::size_t{1} << N, 0.0);
  return env;
}

// embedded jump chain from the per-neighbor rates, dense
Eigen::MatrixXd jump_matrix(const GremEnvironment& env) {
  const auto& P = env.params;
  const int n = 1 << P.N;
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const auto s = state_of(P, i);
    const auto r = jump_rates(env, P, s);
    for (int b = 0; b < P.N1; ++b) K(i, state_index(P, {s.w1 ^ (1u << b), s.w2})) += r.level1 / r.total;
    for (int b = 0; b < P.N2; ++b) K(i, state_index(P, {s.w1, s.w2 ^ (1u << b)})) += r.level2 / r.total;
  }
  return K;
}

}  // namespace

TEST(JumpRates, ZeroFieldIsUniform) {
  const auto env = zero_field(8, 0.25, 0.5, 1.3);
  const auto r = jump_rates(env, env.params, {1, 5});
  EXPECT_NEAR(r.level1, 1.0 / 8, 1e-15);
  EXPECT_NEAR(r.level2, 1.0 / 8, 1e-15);
  EXPECT_NEAR(r.total, 1.0, 1e-14);
}

TEST(JumpRates, DetailedBalanceAgainstBoltzmannProperty) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const auto P = derive_params(8, 0.25, 0.5, 0.7 + 0.3 * static_cast<double>(seed));
    const auto env = sample_environment(P, seed);
    Rng rng(seed);
    for (int k = 0; k < 200; ++k) {
      const auto s = state_of(P, rng.below(1u << P.N));
      const bool lvl1 = rng.below(2) == 0;
      const int bit = static_cast<int>(rng.below(lvl1 ? P.N1 : P.N2));
      const SpinState t = lvl1 ? SpinState{s.w1 ^ (1u << bit), s.w2} : SpinState{s.w1, s.w2 ^ (1u << bit)};
      const auto rs = jump_rates(env, P, s), rt = jump_rates(env, P, t);
      const double ls = -P.beta * hamiltonian(env, P, s).H + (lvl1 ? rs.logLevel1 : rs.logLevel2);
      const double lt = -P.beta * hamiltonian(env, P, t).H + (lvl1 ? rt.logLevel1 : rt.logLevel2);
      EXPECT_NEAR(ls, lt, 1e-12 * std::max(1.0, std::abs(ls)));
    }
  }
}

TEST(DetailedBalance, ReportWithinTolerance) {
  for (int N = 4; N <= 10; ++N) {
    const auto P = derive_params(N, 0.4, 0.6, 1.2);
    const auto rep = detailed_balance_check(sample_environment(P, N), P);
    EXPECT_LE(rep.maxLogDefect, 1e-12);
    EXPECT_LE(rep.maxRowDefect, 1e-12);
    EXPECT_GT(rep.edges, 0u);
  }
}

TEST(QStar, SymmetricAndColdLimits) {
  const auto env = zero_field(8, 0.5, 0.6, 1.0);
  EXPECT_NEAR(q_star(env, env.params, 3), 0.5, 1e-15);
  auto hot = env;
  std::fill(hot.xi1.begin(), hot.xi1.end(), 1.0);
  hot.params.beta = 200;
  EXPECT_LT(q_star(hot, hot.params, 0), 1e-100);
}

TEST(JumpChain, LevelOneFrequencyMatchesQStar) {
  const auto P = derive_params(10, 0.4, 0.6, 0.8);
  const auto env = sample_environment(P, 4);
  const SpinState s{2, 7};
  const double q = q_star(env, P, s.w1);
  Rng rng(8);
  const int n = 100000;
  int lvl1 = 0;
  for (int k = 0; k < n; ++k) lvl1 += jump_chain_step(env, P, s, rng).w1 != s.w1;
  const double se = std::sqrt(q * (1 - q) / n);
  EXPECT_NEAR(static_cast<double>(lvl1) / n, q, 3 * se + 1e-12);
}

TEST(Gibbs, NormalizedAndUniformAtZeroField) {
  const auto env = zero_field(8, 0.25, 0.5, 2.0);
  const auto g = gibbs_measures(env, env.params);
  for (double v : g.G) EXPECT_NEAR(v, 1.0 / 256, 1e-15);
  for (double v : g.Gstar) EXPECT_NEAR(v, 1.0 / 256, 1e-15);
  const auto P = derive_params(10, 0.3, 0.5, 1.5);
  const auto h = gibbs_measures(sample_environment(P, 2), P);
  double s = 0;
  for (double v : h.G) s += v;
  EXPECT_NEAR(s, 1.0, 1e-12);
}

TEST(SimulateRhd, ZeroFieldHoldingMeanIsOne) {
  const auto env = zero_field(8, 0.25, 0.5, 1.0);
  Rng rng(1);
  StopCondition stop;
  stop.horizon = 50000;
  const auto tr = simulate_rhd(env, env.params, {0, 0}, stop, rng);
  double mean = 0;
  for (std::size_t k = 0; k + 1 < tr.holding.size(); ++k) mean += tr.holding[k];
  mean /= static_cast<double>(tr.holding.size() - 1);
  EXPECT_NEAR(mean, 1.0, 4 / std::sqrt(static_cast<double>(tr.holding.size())));
}

TEST(SimulateRhd, OccupationMatchesGibbs) {
  const auto P = derive_params(8, 0.25, 0.5, 0.3);
  const auto env = sample_environment(P, 3);
  const auto g = gibbs_measures(env, P);
  Rng rng(2);
  StopCondition stop;
  stop.horizon = 2e6;
  stop.stepBudget = 100'000'000;
  const auto tr = simulate_rhd(env, P, {0, 0}, stop, rng);
  std::vector<double> occ(g.G.size(), 0.0);
  double T = 0;
  for (std::size_t k = 0; k < tr.states.size(); ++k) {
    occ[state_index(P, tr.states[k])] += tr.holding[k];
    T += tr.holding[k];
  }
  double tv = 0;
  for (std::size_t i = 0; i < occ.size(); ++i) tv += std::abs(occ[i] / T - g.G[i]) / 2;
  EXPECT_LT(tv, 0.01);
}

TEST(SimulateRhd, NeedsStopRule) {
  const auto env = zero_field(6, 0.5, 0.6, 1.0);
  Rng rng(1);
  EXPECT_THROW(simulate_rhd(env, env.params, {0, 0}, StopCondition{}, rng), std::invalid_argument);
}

TEST(Hitting, DenseEnumerationOracleAtN3) {
  const auto P = derive_params(3, 0.34, 0.5, 1.4);
  const auto env = sample_environment(P, 12);
  const std::vector<SpinState> A{{1, 3}}, B{{0, 1}};
  const auto sol = solve_hitting(env, P, A, B);
  const Eigen::MatrixXd K = jump_matrix(env);
  const int n = 8;
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  const auto ia = state_index(P, A[0]), ib = state_index(P, B[0]);
  for (int i = 0; i < n; ++i) {
    if (i == static_cast<int>(ia)) {
      b(i) = 1;
      continue;
    }
    if (i == static_cast<int>(ib)) continue;
    M.row(i) -= K.row(i);
  }
  const Eigen::VectorXd h = M.partialPivLu().solve(b);
  for (int i = 0; i < n; ++i) EXPECT_NEAR(sol.h[i], h(i), 1e-12);
}

TEST(Hitting, DenseAndIterativeAgree) {
  const auto P = derive_params(10, 0.4, 0.6, 1.1);
  const auto env = sample_environment(P, 5);
  const std::vector<SpinState> A{{3, 4}, {1, 1}}, B{{0, 0}, {2, 9}};
  SolverOptions d, it;
  d.method = SolverMethod::Dense;
  it.method = SolverMethod::Iterative;
  const auto hd = solve_hitting(env, P, A, B, d), hi = solve_hitting(env, P, A, B, it);
  for (std::size_t i = 0; i < hd.h.size(); ++i) EXPECT_NEAR(hd.h[i], hi.h[i], 1e-9);
  EXPECT_LE(hi.residual, 1e-12);
}

TEST(Hitting, BoundaryValues) {
  const auto P = derive_params(8, 0.25, 0.5, 1.0);
  const auto env = sample_environment(P, 1);
  HittingQuery q{{{1, 2}}, {{0, 0}}, {1, 2}};
  EXPECT_EQ(exact_hitting_probability(env, P, q), 1.0);
  q.start = {0, 0};
  EXPECT_EQ(exact_hitting_probability(env, P, q), 0.0);
}

TEST(Hitting, MonteCarloWithinBand) {
  const auto P = derive_params(8, 0.25, 0.5, 0.9);
  const auto env = sample_environment(P, 6);
  HittingQuery q{{{1, 5}, {2, 17}}, {{3, 40}}, {0, 0}};
  const double exact = exact_hitting_probability(env, P, q);
  const auto mc = mc_hitting_probability(env, P, q, 4000, 77);
  EXPECT_EQ(mc.censored, 0u);
  EXPECT_NEAR(mc.estimate, exact, 4 * mc.stdError + 1e-9);
}

TEST(Hitting, CertainAfterOneStep) {
  const auto P = derive_params(6, 0.5, 0.6, 1.0);
  const auto env = sample_environment(P, 2);
  HittingQuery q;
  q.start = {0, 0};
  for (int b = 0; b < P.N1; ++b) q.targetA.push_back({1u << b, 0});
  for (int b = 0; b < P.N2; ++b) q.targetA.push_back({0, 1u << b});
  const auto mc = mc_hitting_probability(env, P, q, 200, 1);
  EXPECT_EQ(mc.estimate, 1.0);
  EXPECT_THROW(mc_hitting_probability(env, P, q, 0, 1), std::invalid_argument);
}

TEST(Lump, SingleAllOnesWord) {
  const auto lp = lump_partition({0b1111u}, 4);
  EXPECT_EQ(lp.classes[1].size(), 4u);
  EXPECT_EQ(lp.emptyClasses, 1);
  const auto m = lp.lump(0b0011u);
  EXPECT_NEAR(m[1], 0.0, 1e-15);
}

TEST(Lump, ComplementaryPairSplitsByAgreement) {
  const std::uint32_t eta = 0b0101u, bar = ~eta & 0b1111u;
  const auto lp = lump_partition({eta, bar}, 4);
  EXPECT_EQ(lp.classes[0b01].size(), 2u);
  EXPECT_EQ(lp.classes[0b10].size(), 2u);
  EXPECT_EQ(lp.emptyClasses, 2);
}

TEST(Ehrenfest, ProjectionDownMoveFrequency) {
  const int n = 12;
  Rng rng(9);
  std::vector<std::uint32_t> walk{0};
  for (int k = 0; k < 200000; ++k) walk.push_back(walk.back() ^ (1u << rng.below(n)));
  const auto d = distance_chain_projection(walk, 0);
  EXPECT_EQ(d[0], 0);
  EXPECT_EQ(d[1], 1);
  const int j = 6;
  int at = 0, down = 0;
  for (std::size_t k = 0; k + 1 < d.size(); ++k)
    if (d[k] == j) {
      ++at;
      down += d[k + 1] == j - 1;
    }
  const double pj = static_cast<double>(j) / n;
  EXPECT_NEAR(static_cast<double>(down) / at, pj, 3 * std::sqrt(pj * (1 - pj) / at));
}
