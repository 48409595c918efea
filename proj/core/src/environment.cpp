#include "grem/environment.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "grem/rng.hpp"
#include "grem/version.hpp"

namespace grem {

double beta_star() { return std::sqrt(2.0 * std::log(2.0)); }

double kappa() { return 0.5 * (std::log(std::log(2.0)) + std::log(4.0 * M_PI)); }

ModelParams derive_params(int N, double p, double a, double beta) {
  if (N < 2) throw std::invalid_argument("derive_params: N must be >= 2");
  if (!(p > 0 && p < 1) || !(a > 0 && a < 1))
    throw std::invalid_argument("derive_params: p and a must lie in (0,1)");
  if (p >= a) throw std::invalid_argument("derive_params: non-cascading (p >= a)");
  if (!(beta > 0)) throw std::invalid_argument("derive_params: beta must be positive");
  ModelParams P;
  P.N = N;
  P.p = p;
  P.a = a;
  P.N1 = static_cast<int>(std::floor(p * N + 1e-9));
  if (P.N1 < 1) throw std::invalid_argument("derive_params: floor(pN) = 0");
  P.N2 = N - P.N1;
  if (P.N2 < 1) throw std::invalid_argument("derive_params: N2 = 0");
  P.beta = beta;
  return P;
}

CriticalBetas critical_betas(double p, double a) {
  if (!(0 < p && p < a && a < 1)) throw std::invalid_argument("critical_betas: need 0 < p < a < 1");
  const double bs = beta_star();
  CriticalBetas c;
  c.beta1cr = bs * std::sqrt(p / a);
  c.beta2cr = bs * std::sqrt((1 - p) / (1 - a));
  c.betaFT = bs * (1 - p) / (2 * std::sqrt(p * a));
  c.regimesSplit = c.betaFT > c.beta2cr;
  return c;
}

namespace {

double kappa_sign(const ModelParams& P) { return P.printedKappa ? 1.0 : -1.0; }

// zeta = N2 ln 2 - beta * D
double zeta_slope(const ModelParams& P) {
  const double bs = beta_star();
  const double inner = bs * bs * P.N1 - 0.5 * std::log(P.N1) + (1.0 + kappa_sign(P)) * kappa();
  return std::sqrt(static_cast<double>(P.N) * P.a / P.N1) / bs * inner;
}

}  // namespace

double beta_from_zeta(const ModelParams& P, double zeta) {
  const double bs = beta_star();
  if (!(zeta < P.N2 * bs * bs / 2)) throw std::invalid_argument("beta_from_zeta: zeta >= N2 beta*^2 / 2");
  const double beta = (P.N2 * std::log(2.0) - zeta) / zeta_slope(P);
  if (!(beta > 0)) throw std::invalid_argument("beta_from_zeta: beta <= 0");
  return beta;
}

double zeta_of(const ModelParams& P) {
  const AlphaPair al = alpha_n(P);
  const double bs = beta_star();
  const double logc1 = -(bs * bs * P.N1 - 0.5 * std::log(P.N1) + kappa_sign(P) * kappa()) / al.alpha1;
  return logc1 + P.N2 * std::log(2.0) - kappa() / al.alpha1;
}

const char* regime_name(Regime r) {
  switch (r) {
    case Regime::AboveFT: return "AboveFT";
    case Regime::AtFT: return "AtFT";
    case Regime::BelowFT: return "BelowFT";
    case Regime::Intermediate: return "Intermediate";
  }
  return "?";
}

Regime parse_regime(const std::string& s) {
  if (s == "AboveFT" || s == "above") return Regime::AboveFT;
  if (s == "AtFT" || s == "at") return Regime::AtFT;
  if (s == "BelowFT" || s == "below") return Regime::BelowFT;
  if (s == "Intermediate" || s == "intermediate") return Regime::Intermediate;
  throw std::invalid_argument("unknown regime: " + s);
}

double ZetaDescriptor::at(int N, int N2) const {
  double z = constant + logCoeff * std::log(static_cast<double>(N));
  if (powerCoeff != 0) z += powerCoeff * std::pow(static_cast<double>(N2), powerExp);
  return z;
}

Regime classify_regime(const ZetaDescriptor& d) {
  const double bs2 = beta_star() * beta_star();
  if (d.powerCoeff != 0 && d.powerExp > 0) {
    if (d.powerExp > 1 || (d.powerExp == 1 && d.powerCoeff >= bs2 / 2))
      throw std::invalid_argument("classify_regime: zeta_N exceeds (1-delta) N2 beta*^2 / 2");
    return d.powerCoeff > 0 ? Regime::AboveFT : Regime::BelowFT;
  }
  if (d.logCoeff != 0) return d.logCoeff > 0 ? Regime::AboveFT : Regime::BelowFT;
  return Regime::AtFT;
}

GremEnvironment sample_environment(const ModelParams& P, std::uint64_t seed, int cap) {
  if (P.N > cap) throw std::invalid_argument("sample_environment: N exceeds cap " + std::to_string(cap));
  if (P.N1 + P.N2 != P.N || P.N1 < 1 || P.N2 < 1) throw std::invalid_argument("sample_environment: bad params");
  GremEnvironment env;
  env.params = P;
  env.seed = seed;
  const std::size_t n1 = std::size_t{1} << P.N1;
  const std::size_t n2 = std::size_t{1} << P.N2;
  env.xi1.resize(n1);
  Rng r1 = derive_stream(seed, "xi1", 0);
  for (auto& x : env.xi1) x = r1.normal();
  env.xi2.resize(n1 * n2);
  for (std::size_t w1 = 0; w1 < n1; ++w1) {
    Rng r2 = derive_stream(seed, "xi2", w1);
    double* row = env.xi2.data() + w1 * n2;
    for (std::size_t j = 0; j < n2; ++j) row[j] = r2.normal();
  }
  return env;
}

Energy hamiltonian(const GremEnvironment& env, const ModelParams& P, SpinState s) {
  Energy e;
  e.H1 = -std::sqrt(P.a * P.N) * env.xi1[s.w1];
  e.H2 = -std::sqrt((1 - P.a) * P.N) * env.xi2[state_index(P, s)];
  e.H = e.H1 + e.H2;
  return e;
}

namespace {

std::vector<std::uint32_t> rank_desc(const double* v, std::size_t n) {
  std::vector<std::uint32_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0u);
  std::sort(idx.begin(), idx.end(), [v](std::uint32_t i, std::uint32_t j) {
    if (v[i] != v[j]) return v[i] > v[j];
    return i < j;
  });
  return idx;
}

}  // namespace

std::vector<std::uint32_t> rank_level1(const GremEnvironment& env) {
  return rank_desc(env.xi1.data(), env.xi1.size());
}

std::vector<std::uint32_t> rank_level2(const GremEnvironment& env, std::uint32_t w1) {
  const std::size_t n2 = std::size_t{1} << env.params.N2;
  return rank_desc(env.xi2.data() + w1 * n2, n2);
}

std::optional<std::pair<int, int>> TopSpec::rank_of(SpinState s) const {
  for (int x1 = 0; x1 < M1; ++x1) {
    if (top1[x1] != s.w1) continue;
    for (int x2 = 0; x2 < M2; ++x2)
      if (top2[x1][x2] == s.w2) return std::make_pair(x1, x2);
    return std::nullopt;
  }
  return std::nullopt;
}

std::optional<int> TopSpec::cylinder_of(SpinState s) const {
  for (int x1 = 0; x1 < M1; ++x1)
    if (top1[x1] == s.w1) return x1;
  return std::nullopt;
}

std::pair<RankedMap, TopSpec> rank_top(const GremEnvironment& env, const ModelParams& P, int M1, int M2) {
  if (M1 < 1 || M2 < 1 || M1 > (1 << P.N1) || M2 > (1 << P.N2))
    throw std::invalid_argument("rank_top: M1/M2 out of range");
  RankedMap rm;
  rm.level1 = rank_level1(env);
  TopSpec top;
  top.M1 = M1;
  top.M2 = M2;
  top.N1 = P.N1;
  top.N2 = P.N2;
  for (int x1 = 0; x1 < M1; ++x1) {
    rm.level2.push_back(rank_level2(env, rm.level1[x1]));
    top.top1.push_back(rm.level1[x1]);
    top.top2.emplace_back(rm.level2.back().begin(), rm.level2.back().begin() + M2);
  }
  return {std::move(rm), std::move(top)};
}

double u_n(int n, double x) {
  const double b = beta_star() * std::sqrt(static_cast<double>(n));
  return b + (x - (std::log(n * std::log(2.0)) + std::log(4 * M_PI)) / 2) / b;
}

double u_n_inv(int n, double y) {
  const double b = beta_star() * std::sqrt(static_cast<double>(n));
  return (y - b) * b + (std::log(n * std::log(2.0)) + std::log(4 * M_PI)) / 2;
}

AlphaPair alpha_n(const ModelParams& P) {
  const double r = beta_star() / P.beta;
  return {r * std::sqrt(static_cast<double>(P.N1) / (P.N * P.a)),
          r * std::sqrt(static_cast<double>(P.N2) / (P.N * (1 - P.a)))};
}

AlphaPair alpha_ft(double p, double a) {
  return {2 * p / (1 - p), 2 * std::sqrt(a / (1 - a) * p / (1 - p))};
}

double ScaledWeights::gamma1(std::uint32_t w1) const { return std::exp(logGamma1N[w1]); }

double ScaledWeights::gamma2(const GremEnvironment& env, std::uint64_t idx) const {
  return std::exp(log_gamma2(env, idx));
}

ScaledWeights scaled_weights(const GremEnvironment& env, const ModelParams& P) {
  ScaledWeights w;
  const AlphaPair al = alpha_n(P);
  const double bs = beta_star();
  const double ks = kappa_sign(P);
  w.alpha1N = al.alpha1;
  w.alpha2N = al.alpha2;
  w.kappa = kappa();
  w.logC1N = -(bs * bs * P.N1 - 0.5 * std::log(P.N1) + ks * w.kappa) / al.alpha1;
  w.logC2N = -(bs * bs * P.N2 - 0.5 * std::log(P.N2) + ks * w.kappa) / al.alpha2;
  w.c1N = std::exp(w.logC1N);
  w.c2N = std::exp(w.logC2N);
  // psi^{-1} = (N1/N2) c1 2^{N2}
  w.logPsiN = std::log(static_cast<double>(P.N2) / P.N1) - w.logC1N - P.N2 * std::log(2.0);
  w.psiN = std::exp(w.logPsiN);
  w.logCBarN = w.logC1N + P.N2 * std::log(2.0) + w.logC2N;
  w.cBarN = std::exp(w.logCBarN);
  w.logCTildeN = w.logC1N - P.beta * P.beta * P.N * (1 - P.a) / 2;
  w.cTildeN = std::exp(w.logCTildeN);
  w.b1 = P.beta * std::sqrt(P.a * P.N);
  w.b2 = P.beta * std::sqrt((1 - P.a) * P.N);
  w.logGamma1N.resize(env.xi1.size());
  for (std::size_t i = 0; i < env.xi1.size(); ++i) w.logGamma1N[i] = w.logC1N + w.b1 * env.xi1[i];
  return w;
}

std::vector<double> sample_ppp_decreasing(double alpha, int K, Rng& rng) {
  std::vector<double> g(K);
  double s = 0;
  for (int k = 0; k < K; ++k) {
    s += rng.exponential();
    g[k] = std::pow(s, -1.0 / alpha);
  }
  return g;
}

double LimitCascade::tail_mass1() const {
  return alpha1 / (1 - alpha1) * std::pow(gamma1.back(), 1 - alpha1);
}

double LimitCascade::tail_mass2(int x1) const {
  return alpha2 / (1 - alpha2) * std::pow(gamma2Rows[x1].back(), 1 - alpha2);
}

LimitCascade sample_limit_cascade(double alpha1, double alpha2, int K1, int K2, std::uint64_t seed) {
  if (!(0 < alpha1 && alpha1 < alpha2 && alpha2 < 1))
    throw std::invalid_argument("sample_limit_cascade: need 0 < alpha1 < alpha2 < 1");
  if (K1 < 1 || K2 < 1) throw std::invalid_argument("sample_limit_cascade: K1, K2 >= 1");
  LimitCascade c;
  c.alpha1 = alpha1;
  c.alpha2 = alpha2;
  c.K1 = K1;
  c.K2 = K2;
  Rng r1 = derive_stream(seed, "cascade1", 0);
  c.gamma1 = sample_ppp_decreasing(alpha1, K1, r1);
  for (int x1 = 0; x1 < K1; ++x1) {
    Rng r2 = derive_stream(seed, "cascade2", x1);
    c.gamma2Rows.push_back(sample_ppp_decreasing(alpha2, K2, r2));
  }
  return c;
}

DistanceReport top_distance_diagnostic(const TopSpec& top, const ModelParams& P) {
  DistanceReport rep;
  rep.delta1 = 2 * std::sqrt(std::ldexp(1.0, top.M1) / P.N1) * std::log(P.N1);
  rep.delta2 = 2 * std::sqrt(std::ldexp(1.0, top.M2) / P.N2) * std::log(P.N2);
  auto scan = [&](const std::vector<std::uint32_t>& words, int level, int block, int n, double& maxDev) {
    for (std::size_t i = 0; i < words.size(); ++i)
      for (std::size_t j = i + 1; j < words.size(); ++j) {
        const int d = std::popcount(words[i] ^ words[j]);
        const double dev = std::abs(d - n / 2.0) / (n / 2.0);
        rep.pairs.push_back({level, block, static_cast<int>(i), static_cast<int>(j), d, dev});
        maxDev = std::max(maxDev, dev);
        if (d == 0) ++rep.zeroDistancePairs;
      }
  };
  scan(top.top1, 1, -1, P.N1, rep.maxRelDev1);
  for (int x1 = 0; x1 < top.M1; ++x1) scan(top.top2[x1], 2, x1, P.N2, rep.maxRelDev2);
  rep.within1 = rep.maxRelDev1 <= rep.delta1 && rep.zeroDistancePairs == 0;
  rep.within2 = rep.maxRelDev2 <= rep.delta2 && rep.zeroDistancePairs == 0;
  return rep;
}

namespace {

std::uint64_t table_checksum(const GremEnvironment& env) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const std::vector<double>& v) {
    for (double x : v) {
      h ^= std::bit_cast<std::uint64_t>(x);
      h *= 0x100000001b3ULL;
    }
  };
  mix(env.xi1);
  mix(env.xi2);
  return h;
}

std::string hexfloat(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", x);
  return buf;
}

}  // namespace

void save_snapshot(const GremEnvironment& env, const std::string& path) {
  const ModelParams& P = env.params;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_snapshot: cannot open " + path);
  out << "grem-snapshot " << kSnapshotFormat << "\n"
      << "version " << kVersion << "\n"
      << "generator " << kGeneratorName << "\n"
      << "seed " << env.seed << "\n"
      << "N " << P.N << "\n"
      << "p " << hexfloat(P.p) << "\n"
      << "a " << hexfloat(P.a) << "\n"
      << "beta " << hexfloat(P.beta) << "\n"
      << "printedKappa " << (P.printedKappa ? 1 : 0) << "\n"
      << "checksum " << table_checksum(env) << "\n";
}

GremEnvironment load_snapshot(const std::string& path, int cap) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_snapshot: cannot open " + path);
  std::string line, key, generator;
  int N = 0, fmt = 0, pk = 0;
  double p = 0, a = 0, beta = 0;
  std::uint64_t seed = 0, checksum = 0;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    ls >> key;
    std::string val;
    std::getline(ls >> std::ws, val);
    if (key == "grem-snapshot") fmt = std::stoi(val);
    else if (key == "generator") generator = val;
    else if (key == "seed") seed = std::stoull(val);
    else if (key == "N") N = std::stoi(val);
    else if (key == "p") p = std::strtod(val.c_str(), nullptr);
    else if (key == "a") a = std::strtod(val.c_str(), nullptr);
    else if (key == "beta") beta = std::strtod(val.c_str(), nullptr);
    else if (key == "printedKappa") pk = std::stoi(val);
    else if (key == "checksum") checksum = std::stoull(val);
  }
  if (fmt != kSnapshotFormat) throw std::runtime_error("load_snapshot: unsupported format");
  if (generator != kGeneratorName) throw std::runtime_error("load_snapshot: generator mismatch: " + generator);
  ModelParams P = derive_params(N, p, a, beta);
  P.printedKappa = pk != 0;
  GremEnvironment env = sample_environment(P, seed, cap);
  if (table_checksum(env) != checksum) throw std::runtime_error("load_snapshot: checksum mismatch");
  return env;
}

}  // namespace grem
