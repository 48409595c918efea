#include "grem/dynamics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace grem {

namespace {

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }
double sigmoid(double z) {
  if (z >= 0) return 1 / (1 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1 + e);
}

double scale_factor(const GremEnvironment& env, TimeScale ts) {
  if (ts == TimeScale::None) return 1;
  const ScaledWeights w = scaled_weights(env, env.params);
  switch (ts) {
    case TimeScale::C2: return w.c2N;
    case TimeScale::CBar: return w.cBarN;
    case TimeScale::CTilde: return w.cTildeN;
    default: return 1;
  }
}

}  // namespace

RhdChain::RhdChain(const GremEnvironment& env) : env_(&env) {
  const ModelParams& P = env.params;
  const double b1 = P.beta * std::sqrt(P.a * P.N);
  const double base = std::log(static_cast<double>(P.N2) / P.N1);
  logR_.resize(env.xi1.size());
  q_.resize(env.xi1.size());
  for (std::size_t i = 0; i < env.xi1.size(); ++i) {
    logR_[i] = base + b1 * env.xi1[i];
    q_[i] = sigmoid(-logR_[i]);
  }
  logN_ = std::log(static_cast<double>(P.N));
}

double RhdChain::log_total_rate(SpinState s) const {
  const ModelParams& P = params();
  const double b2 = P.beta * std::sqrt((1 - P.a) * P.N);
  return -b2 * env_->xi2[state_index(P, s)] + std::log(static_cast<double>(P.N2)) + softplus(-logR_[s.w1]) - logN_;
}

std::uint64_t RhdChain::step(std::uint64_t idx, Rng& rng) const {
  const ModelParams& P = params();
  const auto w1 = static_cast<std::uint32_t>(idx >> P.N2);
  if (rng.uniform() < q_[w1]) return idx ^ (std::uint64_t{1} << (P.N2 + rng.below(P.N1)));
  return idx ^ (std::uint64_t{1} << rng.below(P.N2));
}

double RhdChain::holding(std::uint64_t idx, Rng& rng) const {
  const double lw = log_total_rate(state_of(params(), idx));
  return std::exp(std::log(-std::log(rng.uniform())) - lw);
}

double q_star(const GremEnvironment& env, const ModelParams& P, std::uint32_t w1) {
  const double logR = std::log(static_cast<double>(P.N2) / P.N1) + P.beta * std::sqrt(P.a * P.N) * env.xi1[w1];
  return sigmoid(-logR);
}

JumpRates jump_rates(const GremEnvironment& env, const ModelParams& P, SpinState s) {
  const Energy e = hamiltonian(env, P, s);
  const double logN = std::log(static_cast<double>(P.N));
  JumpRates r;
  r.logLevel1 = P.beta * e.H - logN;
  r.logLevel2 = P.beta * e.H2 - logN;
  const double a = std::log(static_cast<double>(P.N1)) + r.logLevel1;
  const double b = std::log(static_cast<double>(P.N2)) + r.logLevel2;
  r.logTotal = std::max(a, b) + std::log1p(std::exp(-std::abs(a - b)));
  r.level1 = std::exp(r.logLevel1);
  r.level2 = std::exp(r.logLevel2);
  r.total = std::exp(r.logTotal);
  if (r.total == 0) throw std::runtime_error("jump_rates: total rate underflows");
  return r;
}

SpinState jump_chain_step(const GremEnvironment& env, const ModelParams& P, SpinState s, Rng& rng) {
  const double q = q_star(env, P, s.w1);
  if (rng.uniform() < q) return {s.w1 ^ (1u << rng.below(P.N1)), s.w2};
  return {s.w1, s.w2 ^ (1u << rng.below(P.N2))};
}

std::size_t StateSet::size() const { return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1)); }

Trajectory simulate_rhd(const GremEnvironment& env, const ModelParams& P, SpinState start,
                        const StopCondition& stop, Rng& rng) {
  if (stop.horizon < 0 && stop.hitting == nullptr)
    throw std::invalid_argument("simulate_rhd: need a horizon or a hitting set");
  RhdChain chain(env);
  Trajectory tr;
  tr.timeScale = scale_factor(env, stop.scale);
  std::uint64_t idx = state_index(P, start);
  double t = 0;
  for (std::uint64_t n = 0;; ++n) {
    if (n >= stop.stepBudget) {
      tr.truncated = true;
      break;
    }
    double h = chain.holding(idx, rng) * tr.timeScale;
    const bool inTarget = stop.hitting && stop.hitting->contains_index(idx);
    if (stop.horizon >= 0 && t + h >= stop.horizon) h = stop.horizon - t;
    tr.states.push_back(state_of(P, idx));
    tr.holding.push_back(h);
    t += h;
    if (inTarget) {
      tr.hit = true;
      break;
    }
    if (stop.horizon >= 0 && t >= stop.horizon) break;
    idx = chain.step(idx, rng);
  }
  return tr;
}

void write_trajectory_csv(const Trajectory& tr, const ModelParams& P, std::ostream& os) {
  os << "# schema-version: 1\n";
  os << "step,time,w1,w2,holding\n";
  double t = 0;
  char buf[160];
  for (std::size_t i = 0; i < tr.states.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%0*x,%0*x,%.17g\n", i, t, (P.N1 + 3) / 4, tr.states[i].w1,
                  (P.N2 + 3) / 4, tr.states[i].w2, tr.holding[i]);
    os << buf;
    t += tr.holding[i];
  }
}

GibbsMeasures gibbs_measures(const GremEnvironment& env, const ModelParams& P, int cap) {
  if (P.N > cap) throw std::invalid_argument("gibbs_measures: N exceeds cap");
  const std::size_t n = std::size_t{1} << P.N;
  RhdChain chain(env);
  GibbsMeasures g;
  g.G.resize(n);
  g.Gstar.resize(n);
  double m = -INFINITY, ms = -INFINITY;
  for (std::size_t i = 0; i < n; ++i) {
    const SpinState s = state_of(P, i);
    g.G[i] = -P.beta * hamiltonian(env, P, s).H;
    g.Gstar[i] = softplus(chain.log_r(s.w1));
    m = std::max(m, g.G[i]);
    ms = std::max(ms, g.Gstar[i]);
  }
  double z = 0, zs = 0;
  for (std::size_t i = 0; i < n; ++i) {
    g.G[i] = std::exp(g.G[i] - m);
    g.Gstar[i] = std::exp(g.Gstar[i] - ms);
    z += g.G[i];
    zs += g.Gstar[i];
  }
  for (std::size_t i = 0; i < n; ++i) {
    g.G[i] /= z;
    g.Gstar[i] /= zs;
  }
  return g;
}

BalanceReport detailed_balance_check(const GremEnvironment& env, const ModelParams& P) {
  const std::size_t n = std::size_t{1} << P.N;
  std::vector<double> logG(n);
  std::vector<JumpRates> rates(n);
  for (std::size_t i = 0; i < n; ++i) {
    const SpinState s = state_of(P, i);
    logG[i] = -P.beta * hamiltonian(env, P, s).H;
    rates[i] = jump_rates(env, P, s);
  }
  BalanceReport rep;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0;
    for (int k = 0; k < P.N; ++k) {
      const std::size_t j = i ^ (std::size_t{1} << k);
      const bool level2 = k < P.N2;
      const double lij = level2 ? rates[i].logLevel2 : rates[i].logLevel1;
      const double lji = level2 ? rates[j].logLevel2 : rates[j].logLevel1;
      rep.maxLogDefect = std::max(rep.maxLogDefect, std::abs((logG[i] + lij) - (logG[j] + lji)));
      row += std::exp(lij - rates[i].logTotal);
      ++rep.edges;
    }
    rep.maxRowDefect = std::max(rep.maxRowDefect, std::abs(row - 1));
  }
  return rep;
}

namespace {

enum : std::uint8_t { kInterior = 0, kInA = 1, kInB = 2 };

struct HittingSystem {
  const ModelParams& P;
  std::vector<std::uint8_t> label;
  std::vector<double> r;  // per cylinder
  std::vector<double> b;
  std::vector<char> cylinderActive;

  // y = L x on interior rows (x is zero on the boundary)
  void apply(const std::vector<double>& x, std::vector<double>& y) const {
    const std::size_t n = x.size();
    const double inv1 = 1.0 / P.N1;
    for (std::size_t i = 0; i < n; ++i) {
      if (label[i] != kInterior) {
        y[i] = 0;
        continue;
      }
      const double rc = r[i >> P.N2];
      double s1 = 0, s2 = 0;
      for (int k = 0; k < P.N2; ++k) s2 += x[i ^ (std::size_t{1} << k)];
      for (int k = 0; k < P.N1; ++k) s1 += x[i ^ (std::size_t{1} << (P.N2 + k))];
      y[i] = (1 + rc) * x[i] - inv1 * s1 - rc / P.N2 * s2;
    }
  }

  // z = R B^{-1} R^T res, B the cylinder block (1+r) I - (r/N2) Adj on the whole N2-cube
  void precondition(const std::vector<double>& res, std::vector<double>& z) const {
    const std::size_t n2 = std::size_t{1} << P.N2;
    const std::size_t ncyl = r.size();
    for (std::size_t c = 0; c < ncyl; ++c) {
      double* zc = z.data() + c * n2;
      if (!cylinderActive[c]) {
        std::fill(zc, zc + n2, 0.0);
        continue;
      }
      const double* rc = res.data() + c * n2;
      for (std::size_t j = 0; j < n2; ++j) zc[j] = label[c * n2 + j] == kInterior ? rc[j] : 0.0;
      fwht(zc, n2);
      const double s = 2 * r[c] / P.N2;
      for (std::size_t k = 0; k < n2; ++k) zc[k] /= (1 + s * std::popcount(k)) * static_cast<double>(n2);
      fwht(zc, n2);
      for (std::size_t j = 0; j < n2; ++j)
        if (label[c * n2 + j] != kInterior) zc[j] = 0;
    }
  }

  static void fwht(double* v, std::size_t n) {
    for (std::size_t h = 1; h < n; h <<= 1)
      for (std::size_t i = 0; i < n; i += h << 1)
        for (std::size_t j = i; j < i + h; ++j) {
          const double x = v[j], y = v[j + h];
          v[j] = x + y;
          v[j + h] = x - y;
        }
  }

  double scaled_residual(const std::vector<double>& res) const {
    double m = 0;
    for (std::size_t i = 0; i < res.size(); ++i)
      if (label[i] == kInterior) m = std::max(m, std::abs(res[i]) / (1 + r[i >> P.N2]));
    return m;
  }
};

HittingSystem build_system(const GremEnvironment& env, const ModelParams& P, const std::vector<SpinState>& A,
                           const std::vector<SpinState>& B) {
  const std::size_t n = std::size_t{1} << P.N;
  HittingSystem sys{P, std::vector<std::uint8_t>(n, kInterior), {}, std::vector<double>(n, 0.0), {}};
  for (const auto& s : A) sys.label[state_index(P, s)] = kInA;
  for (const auto& s : B) {
    const auto i = state_index(P, s);
    if (sys.label[i] == kInA) throw std::invalid_argument("solve_hitting: A and B intersect");
    sys.label[i] = kInB;
  }
  RhdChain chain(env);
  const std::size_t ncyl = std::size_t{1} << P.N1;
  sys.r.resize(ncyl);
  sys.cylinderActive.assign(ncyl, 0);
  for (std::size_t c = 0; c < ncyl; ++c) {
    const double lr = chain.log_r(static_cast<std::uint32_t>(c));
    if (lr > 700) throw std::runtime_error("solve_hitting: level-2 weight overflows");
    sys.r[c] = std::exp(lr);
  }
  const double inv1 = 1.0 / P.N1;
  for (std::size_t i = 0; i < n; ++i) {
    if (sys.label[i] != kInterior) continue;
    sys.cylinderActive[i >> P.N2] = 1;
    const double rc = sys.r[i >> P.N2];
    double bi = 0;
    for (int k = 0; k < P.N2; ++k)
      if (sys.label[i ^ (std::size_t{1} << k)] == kInA) bi += rc / P.N2;
    for (int k = 0; k < P.N1; ++k)
      if (sys.label[i ^ (std::size_t{1} << (P.N2 + k))] == kInA) bi += inv1;
    sys.b[i] = bi;
  }
  return sys;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void solve_pcg(const HittingSystem& sys, const SolverOptions& opt, HittingSolution& sol) {
  const std::size_t n = sys.b.size();
  std::vector<double> x(n, 0.0), res = sys.b, z(n), p(n), Ap(n);
  sys.precondition(res, z);
  p = z;
  double rz = dot(res, z);
  int it = 0;
  double rho = sys.scaled_residual(res);
  while (rho > opt.tolerance && it < opt.maxIterations) {
    sys.apply(p, Ap);
    const double pAp = dot(p, Ap);
    if (!(pAp > 0)) break;
    const double alpha = rz / pAp;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      res[i] -= alpha * Ap[i];
    }
    ++it;
    if (it % 50 == 0) {
      sys.apply(x, Ap);
      for (std::size_t i = 0; i < n; ++i) res[i] = sys.b[i] - Ap[i];
    }
    rho = sys.scaled_residual(res);
    if (rho <= opt.tolerance) {
      sys.apply(x, Ap);
      for (std::size_t i = 0; i < n; ++i) res[i] = sys.b[i] - Ap[i];
      rho = sys.scaled_residual(res);
      if (rho <= opt.tolerance) break;
    }
    sys.precondition(res, z);
    const double rzNew = dot(res, z);
    const double beta = rzNew / rz;
    rz = rzNew;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  sol.iterations = it;
  sol.residual = rho;
  sol.h = std::move(x);
  sol.method = "pcg-walsh-block";
  if (rho > opt.tolerance) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "solve_hitting: no convergence after %d iterations, residual %.3e", it, rho);
    throw std::runtime_error(buf);
  }
}

void solve_dense(const HittingSystem& sys, HittingSolution& sol) {
  const ModelParams& P = sys.P;
  const std::size_t n = sys.b.size();
  std::vector<std::int64_t> pos(n, -1);
  std::vector<std::size_t> interior;
  for (std::size_t i = 0; i < n; ++i)
    if (sys.label[i] == kInterior) {
      pos[i] = static_cast<std::int64_t>(interior.size());
      interior.push_back(i);
    }
  const auto m = static_cast<Eigen::Index>(interior.size());
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd b(m);
  for (Eigen::Index a = 0; a < m; ++a) {
    const std::size_t i = interior[a];
    const double rc = sys.r[i >> P.N2];
    L(a, a) = 1 + rc;
    b(a) = sys.b[i];
    for (int k = 0; k < P.N; ++k) {
      const std::size_t j = i ^ (std::size_t{1} << k);
      if (pos[j] < 0) continue;
      L(a, pos[j]) -= k < P.N2 ? rc / P.N2 : 1.0 / P.N1;
    }
  }
  Eigen::VectorXd x = L.llt().solve(b);
  sol.h.assign(n, 0.0);
  for (Eigen::Index a = 0; a < m; ++a) sol.h[interior[a]] = x(a);
  std::vector<double> y(n), res(n);
  sys.apply(sol.h, y);
  for (std::size_t i = 0; i < n; ++i) res[i] = sys.b[i] - y[i];
  sol.residual = sys.scaled_residual(res);
  sol.iterations = 0;
  sol.method = "dense-llt";
}

}  // namespace

HittingSolution solve_hitting(const GremEnvironment& env, const ModelParams& P, const std::vector<SpinState>& A,
                              const std::vector<SpinState>& B, const SolverOptions& opt) {
  if (P.N > opt.cap) throw std::invalid_argument("solve_hitting: N exceeds solver cap");
  if (A.empty()) throw std::invalid_argument("solve_hitting: empty target set");
  HittingSystem sys = build_system(env, P, A, B);
  HittingSolution sol;
  const bool dense = opt.method == SolverMethod::Dense || (opt.method == SolverMethod::Auto && P.N <= opt.autoDenseMax);
  if (dense) {
    if (P.N > opt.denseCap) throw std::invalid_argument("solve_hitting: dense path limited to N <= denseCap");
    solve_dense(sys, sol);
  } else {
    solve_pcg(sys, opt, sol);
  }
  for (std::size_t i = 0; i < sol.h.size(); ++i)
    if (sys.label[i] == kInA) sol.h[i] = 1;
  return sol;
}

double exact_hitting_probability(const GremEnvironment& env, const ModelParams& P, const HittingQuery& q,
                                 const SolverOptions& opt) {
  for (const auto& s : q.targetA)
    if (s == q.start) return 1;
  for (const auto& s : q.avoidB)
    if (s == q.start) return 0;
  return solve_hitting(env, P, q.targetA, q.avoidB, opt).h[state_index(P, q.start)];
}

McEstimate mc_hitting_probability(const GremEnvironment& env, const ModelParams& P, const HittingQuery& q,
                                  std::uint64_t replicas, std::uint64_t seed, std::uint64_t stepBudget) {
  if (replicas == 0) throw std::invalid_argument("mc_hitting_probability: zero replicas");
  StateSet A(P), B(P);
  for (const auto& s : q.targetA) A.insert(s);
  for (const auto& s : q.avoidB) B.insert(s);
  RhdChain chain(env);
  const std::uint64_t start = state_index(P, q.start);
  std::uint64_t hits = 0, censored = 0;
  for (std::uint64_t rep = 0; rep < replicas; ++rep) {
    Rng rng = derive_stream(seed, "mc-hit", rep);
    std::uint64_t idx = start;
    bool done = false;
    for (std::uint64_t n = 0; n < stepBudget; ++n) {
      if (A.contains_index(idx)) {
        ++hits;
        done = true;
        break;
      }
      if (B.contains_index(idx)) {
        done = true;
        break;
      }
      idx = chain.step(idx, rng);
    }
    if (!done) ++censored;
  }
  McEstimate e;
  e.replicas = replicas;
  e.censored = censored;
  const double n = static_cast<double>(replicas - censored);
  if (n > 0) {
    e.estimate = hits / n;
    e.stdError = std::sqrt(std::max(e.estimate * (1 - e.estimate), 0.0) / n);
  }
  return e;
}

std::vector<double> LumpPartition::lump(std::uint32_t word) const {
  std::vector<double> m(classes.size(), 0.0);
  for (std::size_t k = 0; k < classes.size(); ++k) {
    if (classes[k].empty()) continue;
    double s = 0;
    for (int j : classes[k]) s += ((word >> j) & 1u) ? 1.0 : -1.0;
    m[k] = s / static_cast<double>(classes[k].size());
  }
  return m;
}

LumpPartition lump_partition(const std::vector<std::uint32_t>& K, int n) {
  if (K.empty() || K.size() > 20) throw std::invalid_argument("lump_partition: need 1 <= |K| <= 20");
  LumpPartition lp;
  lp.n = n;
  lp.classOf.resize(n);
  lp.classes.resize(std::size_t{1} << K.size());
  for (int j = 0; j < n; ++j) {
    int label = 0;
    for (std::size_t x = 0; x < K.size(); ++x) label |= static_cast<int>((K[x] >> j) & 1u) << x;
    lp.classOf[j] = label;
    lp.classes[label].push_back(j);
  }
  for (const auto& c : lp.classes) lp.emptyClasses += c.empty();
  return lp;
}

std::vector<int> distance_chain_projection(const std::vector<std::uint32_t>& walk, std::uint32_t target) {
  std::vector<int> d;
  d.reserve(walk.size());
  for (auto w : walk) d.push_back(std::popcount(w ^ target));
  return d;
}

}  // namespace grem
