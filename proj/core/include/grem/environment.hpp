#pragma once
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace grem {

double beta_star();  // sqrt(2 ln 2)
double kappa();      // (ln ln 2 + ln 4 pi) / 2

struct ModelParams {
  int N = 0;
  double p = 0;
  double a = 0;
  int N1 = 0;
  int N2 = 0;
  double beta = 0;
  std::optional<double> betaBar;
  // c_i^N with +kappa as typeset in the scaling constants; default is the
  // sign that makes gamma_i^N = exp(u^{-1}(Xi)/alpha_i^N) exact
  bool printedKappa = false;
};

ModelParams derive_params(int N, double p, double a, double beta);

struct CriticalBetas {
  double beta1cr;
  double beta2cr;
  double betaFT;
  bool regimesSplit;
};

CriticalBetas critical_betas(double p, double a);

// exact solve of c1^N 2^{N2} = exp(zeta + kappa / alpha1^N); beta in params is ignored
double beta_from_zeta(const ModelParams& params, double zeta);
double zeta_of(const ModelParams& params);

enum class Regime { AboveFT, AtFT, BelowFT, Intermediate };
const char* regime_name(Regime r);
Regime parse_regime(const std::string& s);

// zeta_N = constant + powerCoeff * N2^powerExp + logCoeff * ln N
struct ZetaDescriptor {
  double constant = 0;
  double powerCoeff = 0;
  double powerExp = 0;
  double logCoeff = 0;

  double at(int N, int N2) const;
};

Regime classify_regime(const ZetaDescriptor& d);

struct SpinState {
  std::uint32_t w1 = 0;
  std::uint32_t w2 = 0;

  friend bool operator==(const SpinState&, const SpinState&) = default;
};

inline std::uint64_t state_index(const ModelParams& P, SpinState s) {
  return (static_cast<std::uint64_t>(s.w1) << P.N2) | s.w2;
}
inline SpinState state_of(const ModelParams& P, std::uint64_t idx) {
  return {static_cast<std::uint32_t>(idx >> P.N2),
          static_cast<std::uint32_t>(idx & ((std::uint64_t{1} << P.N2) - 1))};
}

struct GremEnvironment {
  ModelParams params;
  std::uint64_t seed = 0;
  std::vector<double> xi1;  // 2^N1
  std::vector<double> xi2;  // 2^N, flat by state_index

  double xi2_at(SpinState s) const { return xi2[state_index(params, s)]; }
};

inline constexpr int kDefaultEnvCap = 24;

GremEnvironment sample_environment(const ModelParams& params, std::uint64_t seed,
                                   int cap = kDefaultEnvCap);

struct Energy {
  double H, H1, H2;
};
Energy hamiltonian(const GremEnvironment& env, const ModelParams& params, SpinState s);

struct RankedMap {
  std::vector<std::uint32_t> level1;               // all 2^N1 words, by rank
  std::vector<std::vector<std::uint32_t>> level2;  // per level-1 rank (first M1 ranks)
};

struct TopSpec {
  int M1 = 0;
  int M2 = 0;
  int N1 = 0;
  int N2 = 0;
  std::vector<std::uint32_t> top1;               // xi_1^{x1}, x1 = 1..M1
  std::vector<std::vector<std::uint32_t>> top2;  // xi_2^{x1 x2}

  SpinState state(int x1, int x2) const { return {top1[x1], top2[x1][x2]}; }
  // zero-based (x1, x2) if in T
  std::optional<std::pair<int, int>> rank_of(SpinState s) const;
  // zero-based x1 if the cylinder is in W-bar
  std::optional<int> cylinder_of(SpinState s) const;
};

std::vector<std::uint32_t> rank_level1(const GremEnvironment& env);
std::vector<std::uint32_t> rank_level2(const GremEnvironment& env, std::uint32_t w1);
std::pair<RankedMap, TopSpec> rank_top(const GremEnvironment& env, const ModelParams& params,
                                       int M1, int M2);

double u_n(int n, double x);
double u_n_inv(int n, double y);

struct ScaledWeights {
  double alpha1N = 0, alpha2N = 0;
  double c1N = 0, c2N = 0;
  double logC1N = 0, logC2N = 0;
  double kappa = 0;
  double psiN = 0, logPsiN = 0;
  double cBarN = 0, logCBarN = 0;
  double cTildeN = 0, logCTildeN = 0;
  double b1 = 0;  // beta sqrt(aN)
  double b2 = 0;  // beta sqrt((1-a)N)
  std::vector<double> logGamma1N;  // by level-1 word

  double gamma1(std::uint32_t w1) const;
  double log_gamma2(const GremEnvironment& env, std::uint64_t idx) const {
    return logC2N + b2 * env.xi2[idx];
  }
  double gamma2(const GremEnvironment& env, std::uint64_t idx) const;
};

struct AlphaPair {
  double alpha1, alpha2;
};
AlphaPair alpha_n(const ModelParams& params);
// fine-tuning limits 2p/(1-p), 2 sqrt(ap/((1-a)(1-p)))
AlphaPair alpha_ft(double p, double a);

ScaledWeights scaled_weights(const GremEnvironment& env, const ModelParams& params);

struct LimitCascade {
  double alpha1 = 0, alpha2 = 0;
  int K1 = 0, K2 = 0;
  std::vector<double> gamma1;
  std::vector<std::vector<double>> gamma2Rows;

  // E[sum_{k>K} gamma(k) | gamma(K)]
  double tail_mass1() const;
  double tail_mass2(int x1) const;
};

LimitCascade sample_limit_cascade(double alpha1, double alpha2, int K1, int K2, std::uint64_t seed);
std::vector<double> sample_ppp_decreasing(double alpha, int K, class Rng& rng);

struct PairDistance {
  int level;  // 1 or 2
  int block;  // x1 for level 2, -1 for level 1
  int i, j;
  int dist;
  double relDev;
};

struct DistanceReport {
  std::vector<PairDistance> pairs;
  double maxRelDev1 = 0, maxRelDev2 = 0;
  double delta1 = 0, delta2 = 0;
  int zeroDistancePairs = 0;
  bool within1 = true, within2 = true;
};

DistanceReport top_distance_diagnostic(const TopSpec& top, const ModelParams& params);

// snapshot: params, seed, generator name, version tag
void save_snapshot(const GremEnvironment& env, const std::string& path);
GremEnvironment load_snapshot(const std::string& path, int cap = kDefaultEnvCap);

}  // namespace grem
