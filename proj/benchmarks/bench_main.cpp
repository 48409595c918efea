#include <benchmark/benchmark.h>

#include "grem/aging.hpp"
#include "grem/analytics.hpp"
#include "grem/dynamics.hpp"
#include "grem/entrance.hpp"
#include "grem/environment.hpp"
#include "grem/kprocess.hpp"

using namespace grem;

static void BM_SampleEnvironment(benchmark::State& st) {
  const auto P = derive_params(static_cast<int>(st.range(0)), 0.4, 0.6, 1.2);
  std::uint64_t seed = 0;
  for (auto _ : st) benchmark::DoNotOptimize(sample_environment(P, ++seed).xi2.data());
  st.SetItemsProcessed(st.iterations() * (std::int64_t{1} << P.N));
}
BENCHMARK(BM_SampleEnvironment)->Arg(12)->Arg(16)->Arg(20)->Unit(benchmark::kMillisecond);

static void BM_JumpChainStep(benchmark::State& st) {
  const auto P = derive_params(16, 0.4, 0.6, 1.2);
  const auto env = sample_environment(P, 1);
  RhdChain chain(env);
  Rng rng(2);
  std::uint64_t idx = 0;
  for (auto _ : st) benchmark::DoNotOptimize(idx = chain.step(idx, rng));
}
BENCHMARK(BM_JumpChainStep);

static void BM_SolveHitting(benchmark::State& st) {
  auto P = derive_params(static_cast<int>(st.range(0)), 0.4, 0.6, 1.0);
  P.beta = beta_from_zeta(P, 0.0);
  const auto env = sample_environment(P, 3);
  const auto top = rank_top(env, P, 2, 2).second;
  for (auto _ : st) {
    const auto sol = solve_hitting(env, P, {top.state(0, 0)}, {top.state(0, 1), top.state(1, 0), top.state(1, 1)});
    benchmark::DoNotOptimize(sol.h.data());
  }
}
BENCHMARK(BM_SolveHitting)->Arg(10)->Arg(14)->Arg(16)->Unit(benchmark::kMillisecond);

static void BM_TrapKernel(benchmark::State& st) {
  Rng rng(4);
  const auto g = sample_ppp_decreasing(0.5, static_cast<int>(st.range(0)), rng);
  for (auto _ : st) benchmark::DoNotOptimize(trap_kernel(static_cast<int>(st.range(0)), 8, 1.0, g).transition.data());
}
BENCHMARK(BM_TrapKernel)->Arg(2)->Arg(8)->Arg(32);

static void BM_SimulateK2(benchmark::State& st) {
  auto c = sample_limit_cascade(2.0 / 9, 2.0 / 3, 10, 10, 5);
  double z = 0;
  for (double v : c.gamma1) z += v;
  for (auto& v : c.gamma1) v /= z;
  const auto spec = build_limit_specs(c, 0.1, 1.0, Regime::AtFT).k2;
  Rng rng(6);
  for (auto _ : st) benchmark::DoNotOptimize(simulate_k2(spec, 1000, rng).path.size());
}
BENCHMARK(BM_SimulateK2)->Unit(benchmark::kMillisecond);

static void BM_EhrenfestPgf(benchmark::State& st) {
  const int n2 = static_cast<int>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(ehrenfest_pgf(n2, n2 / 2, 0.7));
}
BENCHMARK(BM_EhrenfestPgf)->Arg(10)->Arg(100)->Arg(1000);

static void BM_ArcsineCdf(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(arcsine_cdf(4.0 / 27, 0.5));
}
BENCHMARK(BM_ArcsineCdf);

static void BM_AgingReplicas(benchmark::State& st) {
  AnnealedModel m;
  m.regime = static_cast<Regime>(st.range(0));
  Rng g(7);
  m.gamma1 = sample_ppp_decreasing(m.alpha1, 64, g);
  std::uint64_t seed = 0;
  for (auto _ : st) benchmark::DoNotOptimize(estimate_pi_grid(m, 1e-2, {0.5, 1, 2}, 200, ++seed).size());
  st.SetItemsProcessed(st.iterations() * 200);
}
BENCHMARK(BM_AgingReplicas)
    ->Arg(static_cast<int>(Regime::AboveFT))
    ->Arg(static_cast<int>(Regime::AtFT))
    ->Arg(static_cast<int>(Regime::BelowFT))
    ->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
