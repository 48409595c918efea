#include "grem/entrance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace grem {

double lambda_asymptotic(int sizeA, double psiN, double gamma1x) {
  if (sizeA < 1) throw std::invalid_argument("lambda_asymptotic: |A| >= 1");
  if (std::isinf(psiN)) return 0.0;
  return 1.0 / (1.0 + sizeA * psiN * gamma1x);
}

double lambda_exact(const GremEnvironment& env, const ModelParams& P, std::uint32_t w1, int sizeA) {
  if (sizeA < 1) throw std::invalid_argument("lambda_exact: |A| >= 1");
  RhdChain chain(env);
  if (chain.q_star(w1) >= 1.0) throw std::domain_error("lambda_exact: q* = 1");
  // |log(1 - q*)| = log(1 + 1/r)
  const double lr = chain.log_r(w1);
  const double u = lr > 0 ? std::log1p(std::exp(-lr)) : -lr + std::log1p(std::exp(lr));
  const double s = u * std::ldexp(1.0, P.N2) / sizeA * (1.0 + 1.0 / P.N2);
  return s / (1 + s);
}

std::vector<double> nu1_from_lambdas(const std::vector<double>& lambdaT) {
  std::vector<double> nu(lambdaT.size());
  double z = 0;
  for (std::size_t i = 0; i < lambdaT.size(); ++i) z += nu[i] = 1 - lambdaT[i];
  if (!(z > 0)) throw std::domain_error("nu1: all lambda = 1");
  for (double& v : nu) v /= z;
  return nu;
}

std::vector<double> nu1(const EntranceParams& ep) {
  if (static_cast<int>(ep.gamma1Top.size()) != ep.M1) throw std::invalid_argument("nu1: gamma1Top size != M1");
  std::vector<double> lam(ep.M1);
  for (int x1 = 0; x1 < ep.M1; ++x1) {
    const int sizeA = ep.excluded && ep.excluded->first == x1 ? ep.M2 - 1 : ep.M2;
    lam[x1] = sizeA == 0 ? 1.0 : lambda_asymptotic(sizeA, ep.psiN, ep.gamma1Top[x1]);
  }
  return nu1_from_lambdas(lam);
}

std::vector<double> limit_nu1(Regime regime, const std::vector<double>& gamma1, int M2, double psi) {
  std::vector<double> m(gamma1.size());
  switch (regime) {
    case Regime::AboveFT:
      m = gamma1;
      break;
    case Regime::AtFT:
      for (std::size_t i = 0; i < m.size(); ++i) m[i] = gamma1[i] / (1 + M2 * psi * gamma1[i]);
      break;
    case Regime::BelowFT:
    case Regime::Intermediate:
      std::fill(m.begin(), m.end(), 1.0);
      break;
  }
  const double z = std::accumulate(m.begin(), m.end(), 0.0);
  for (double& v : m) v /= z;
  return m;
}

const char* entrance_case_name(EntranceCaseKind k) {
  switch (k) {
    case EntranceCaseKind::I1: return "i-1";
    case EntranceCaseKind::I2: return "i-2";
    case EntranceCaseKind::I3: return "i-3";
    case EntranceCaseKind::I4: return "i-4";
    case EntranceCaseKind::II: return "ii";
    case EntranceCaseKind::III: return "iii";
  }
  return "?";
}

namespace {

struct LambdaTable {
  std::vector<double> full;  // |A| = M2
  std::vector<double> less;  // |A| = M2 - 1
};

LambdaTable lambdas(const GremEnvironment& env, const ModelParams& P, const TopSpec& top, LambdaForm form) {
  LambdaTable t;
  const ScaledWeights w = form == LambdaForm::Asymptotic ? scaled_weights(env, P) : ScaledWeights{};
  for (int x1 = 0; x1 < top.M1; ++x1) {
    auto lam = [&](int sizeA) {
      if (sizeA == 0) return 1.0;
      if (form == LambdaForm::Exact) return lambda_exact(env, P, top.top1[x1], sizeA);
      return lambda_asymptotic(sizeA, w.psiN, w.gamma1(top.top1[x1]));
    };
    t.full.push_back(lam(top.M2));
    t.less.push_back(lam(top.M2 - 1));
  }
  return t;
}

}  // namespace

double predict_entrance(const GremEnvironment& env, const ModelParams& P, const TopSpec& top, const EntranceCase& c,
                        LambdaForm form) {
  if (c.x1 < 0 || c.x1 >= top.M1 || c.x2 < 0 || c.x2 >= top.M2)
    throw std::invalid_argument("predict_entrance: target outside the top");
  const auto cyl = top.cylinder_of(c.start);
  const auto rank = top.rank_of(c.start);
  const LambdaTable lt = lambdas(env, P, top, form);
  const double M1 = top.M1, M2 = top.M2;
  auto mismatch = [&] {
    return std::invalid_argument(std::string("predict_entrance: start inconsistent with case ") +
                                 entrance_case_name(c.kind));
  };
  switch (c.kind) {
    case EntranceCaseKind::I1: {
      if (!cyl || *cyl != c.x1 || rank) throw mismatch();
      const auto nu = nu1_from_lambdas(lt.full);
      const double l = lt.full[c.x1];
      return ((1 - l) + nu[c.x1] * l) / M2;
    }
    case EntranceCaseKind::I2: {
      if (!cyl || *cyl == c.x1 || rank) throw mismatch();
      const auto nu = nu1_from_lambdas(lt.full);
      return nu[c.x1] * lt.full[*cyl] / M2;
    }
    case EntranceCaseKind::I3: {
      if (cyl) throw mismatch();
      return nu1_from_lambdas(lt.full)[c.x1] / M2;
    }
    case EntranceCaseKind::I4: {
      if (cyl) throw mismatch();
      return 1.0 / M1;
    }
    case EntranceCaseKind::II:
    case EntranceCaseKind::III: {
      if (!rank || rank->first != c.barX1 || rank->second != c.barX2) throw mismatch();
      if (c.barX1 == c.x1 && c.barX2 == c.x2) throw mismatch();
      std::vector<double> lbar = lt.full;
      lbar[c.barX1] = lt.less[c.barX1];
      const auto nubar = nu1_from_lambdas(lbar);
      if (c.kind == EntranceCaseKind::II) {
        if (c.barX1 != c.x1) throw mismatch();
        const double l = lbar[c.x1];
        return ((1 - l) + nubar[c.x1] * l) / (M2 - 1);
      }
      if (c.barX1 == c.x1) throw mismatch();
      return nubar[c.x1] * lbar[c.barX1] / M2;
    }
  }
  throw std::invalid_argument("predict_entrance: unknown case");
}

HittingQuery entrance_query(const ModelParams& P, const TopSpec& top, const EntranceCase& c) {
  HittingQuery q;
  q.start = c.start;
  if (c.kind == EntranceCaseKind::I4) {
    const std::uint32_t w1 = top.top1[c.x1];
    std::vector<char> inTop(std::size_t{1} << P.N2, 0);
    for (auto w2 : top.top2[c.x1]) inTop[w2] = 1;
    for (std::uint32_t w2 = 0; w2 < (1u << P.N2); ++w2)
      if (!inTop[w2]) q.targetA.push_back({w1, w2});
    for (int x1 = 0; x1 < top.M1; ++x1) {
      if (x1 == c.x1) {
        for (auto w2 : top.top2[x1]) q.avoidB.push_back({w1, w2});
        continue;
      }
      for (std::uint32_t w2 = 0; w2 < (1u << P.N2); ++w2) q.avoidB.push_back({top.top1[x1], w2});
    }
    return q;
  }
  const SpinState eta = top.state(c.x1, c.x2);
  q.targetA.push_back(eta);
  for (int x1 = 0; x1 < top.M1; ++x1)
    for (int x2 = 0; x2 < top.M2; ++x2) {
      const SpinState s = top.state(x1, x2);
      if (s == eta) continue;
      if ((c.kind == EntranceCaseKind::II || c.kind == EntranceCaseKind::III) && x1 == c.barX1 && x2 == c.barX2)
        continue;
      q.avoidB.push_back(s);
    }
  return q;
}

bool low_temperature(const GremEnvironment& env, const ModelParams& P, const TopSpec& top) {
  if (!(P.beta > critical_betas(P.p, P.a).beta2cr)) return false;
  const auto l1 = rank_level1(env);
  for (int k = 0; k < top.M1 && k + 1 < static_cast<int>(l1.size()); ++k)
    if (!(env.xi1[l1[k]] > env.xi1[l1[k + 1]])) return false;
  for (int x1 = 0; x1 < top.M1; ++x1) {
    const auto l2 = rank_level2(env, top.top1[x1]);
    for (int k = 0; k < top.M2 && k + 1 < static_cast<int>(l2.size()); ++k)
      if (!(env.xi2_at({top.top1[x1], l2[k]}) > env.xi2_at({top.top1[x1], l2[k + 1]}))) return false;
  }
  return true;
}

namespace {

std::string label_state(const TopSpec& top, SpinState s) {
  char buf[64];
  if (auto r = top.rank_of(s)) {
    std::snprintf(buf, sizeof buf, "(%d,%d)", r->first + 1, r->second + 1);
  } else {
    std::snprintf(buf, sizeof buf, "%x:%x", s.w1, s.w2);
  }
  return buf;
}

std::string query_key(const EntranceCase& c) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%d/%d/%d/%d/%d", static_cast<int>(c.kind == EntranceCaseKind::I4), c.x1,
                c.kind == EntranceCaseKind::I4 ? -1 : c.x2,
                (c.kind == EntranceCaseKind::II || c.kind == EntranceCaseKind::III) ? c.barX1 : -1,
                (c.kind == EntranceCaseKind::II || c.kind == EntranceCaseKind::III) ? c.barX2 : -1);
  return buf;
}

}  // namespace

std::vector<EntranceRow> validate_entrance(const GremEnvironment& env, const ModelParams& P, const TopSpec& top,
                                           const std::vector<EntranceCase>& cases, const ValidationOptions& opt) {
  const double tol = opt.tolerance >= 0 ? opt.tolerance : std::max(0.05, 4.0 / P.N);
  const bool lowT = low_temperature(env, P, top);
  std::map<std::string, HittingSolution> cache;
  std::vector<EntranceRow> rows;
  std::uint64_t caseIndex = 0;
  for (const auto& c : cases) {
    EntranceRow row;
    row.kase = entrance_case_name(c.kind);
    row.start = c.start;
    row.target = c.kind == EntranceCaseKind::I4 ? "W" + std::to_string(c.x1 + 1) + "\\T"
                                                : label_state(top, top.state(c.x1, c.x2));
    row.tolerance = tol;
    if (!lowT) {
      row.flag = "outside low-temperature regime";
      rows.push_back(row);
      continue;
    }
    row.predicted = predict_entrance(env, P, top, c, opt.form);
    const HittingQuery q = entrance_query(P, top, c);
    if (opt.method == ValidationMethod::Exact) {
      const std::string key = query_key(c);
      auto it = cache.find(key);
      if (it == cache.end()) it = cache.emplace(key, solve_hitting(env, P, q.targetA, q.avoidB, opt.solver)).first;
      row.measured = it->second.h[state_index(P, c.start)];
      row.error = it->second.residual;
    } else {
      const McEstimate e = mc_hitting_probability(env, P, q, opt.mcReplicas, derive_stream(opt.seed, "entrance", caseIndex)());
      row.measured = e.estimate;
      row.error = e.stdError;
      if (e.censored) row.flag = "censored=" + std::to_string(e.censored);
    }
    row.pass = std::abs(row.predicted - row.measured) <= tol;
    rows.push_back(row);
    ++caseIndex;
  }
  return rows;
}

SpinState sample_outside_wbar(const ModelParams& P, const TopSpec& top, Rng& rng) {
  for (;;) {
    SpinState s{static_cast<std::uint32_t>(rng.below(std::uint64_t{1} << P.N1)),
                static_cast<std::uint32_t>(rng.below(std::uint64_t{1} << P.N2))};
    if (!top.cylinder_of(s)) return s;
  }
}

namespace {

SpinState sample_in_cylinder_off_top(const ModelParams& P, const TopSpec& top, int x1, Rng& rng) {
  for (;;) {
    SpinState s{top.top1[x1], static_cast<std::uint32_t>(rng.below(std::uint64_t{1} << P.N2))};
    if (!top.rank_of(s)) return s;
  }
}

}  // namespace

std::vector<EntranceCase> standard_entrance_cases(const ModelParams& P, const TopSpec& top, int startsPerCase,
                                                  std::uint64_t seed) {
  Rng rng = derive_stream(seed, "entrance-starts", 0);
  std::vector<EntranceCase> cs;
  for (int k = 0; k < startsPerCase; ++k) {
    cs.push_back({EntranceCaseKind::I1, 0, 0, -1, -1, sample_in_cylinder_off_top(P, top, 0, rng)});
    if (top.M1 >= 2) cs.push_back({EntranceCaseKind::I2, 0, 0, -1, -1, sample_in_cylinder_off_top(P, top, 1, rng)});
    const SpinState out = sample_outside_wbar(P, top, rng);
    for (int x1 = 0; x1 < top.M1; ++x1)
      for (int x2 = 0; x2 < top.M2; ++x2) cs.push_back({EntranceCaseKind::I3, x1, x2, -1, -1, out});
    for (int x1 = 0; x1 < top.M1; ++x1) cs.push_back({EntranceCaseKind::I4, x1, 0, -1, -1, out});
  }
  if (top.M2 >= 2) cs.push_back({EntranceCaseKind::II, 0, 0, 0, 1, top.state(0, 1)});
  if (top.M1 >= 2) cs.push_back({EntranceCaseKind::III, 0, 0, 1, 0, top.state(1, 0)});
  return cs;
}

void write_entrance_csv(const std::vector<EntranceRow>& rows, const ModelParams& P, std::ostream& os) {
  os << "# schema-version: 1\n";
  os << "case,start,target,predicted,measured,stderr_or_residual,tolerance,pass,flag\n";
  char buf[320];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%0*x:%0*x,%s,%.17g,%.17g,%.6g,%.6g,%d,%s\n", r.kase.c_str(), (P.N1 + 3) / 4,
                  r.start.w1, (P.N2 + 3) / 4, r.start.w2, r.target.c_str(), r.predicted, r.measured, r.error,
                  r.tolerance, r.pass ? 1 : 0, r.flag.c_str());
    os << buf;
  }
}

TrapKernel trap_kernel(int M1, int M2, double psi, const std::vector<double>& gamma1, CrossBlockLambda convention) {
  if (M1 < 1 || M2 < 1 || static_cast<int>(gamma1.size()) < M1) throw std::invalid_argument("trap_kernel: bad sizes");
  TrapKernel K;
  K.M1 = M1;
  K.M2 = M2;
  std::vector<double> lam(M1), nu(M1);
  double z = 0;
  for (int x = 0; x < M1; ++x) {
    if (!(gamma1[x] > 0)) throw std::invalid_argument("trap_kernel: gamma1 must be positive");
    lam[x] = lambda_asymptotic(M2, psi, gamma1[x]);
    z += nu[x] = gamma1[x] * lam[x];
  }
  for (double& v : nu) v /= z;
  const int n = M1 * M2;
  K.transition.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int from = 0; from < n; ++from) {
    const int x1 = from / M2;
    for (int to = 0; to < n; ++to) {
      const int y1 = to / M2;
      double v;
      if (x1 == y1) {
        v = ((1 - lam[y1]) + lam[y1] * nu[y1]) / M2;
      } else {
        const double l = convention == CrossBlockLambda::Departure ? lam[x1] : lam[y1];
        v = nu[y1] * l / M2;
      }
      K.transition[static_cast<std::size_t>(from) * n + to] = v;
    }
  }
  return K;
}

TrapPath trap_simulate(const TrapKernel& K, const std::vector<std::vector<double>>& gamma2rows, double horizon,
                       Rng& rng, int start) {
  const int n = K.size();
  std::vector<double> hold(n);
  for (int x = 0; x < n; ++x) {
    if (!gamma2rows.empty()) hold[x] = gamma2rows.at(x / K.M2).at(x % K.M2);
    else if (!K.meanHold.empty()) hold[x] = K.meanHold.at(x);
    else hold[x] = 1.0;
    if (!(hold[x] > 0)) throw std::invalid_argument("trap_simulate: mean holds must be positive");
  }
  std::vector<double> cdf(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    double s = 0;
    for (int j = 0; j < n; ++j) cdf[static_cast<std::size_t>(i) * n + j] = s += K.at(i, j);
  }
  TrapPath path;
  path.horizon = horizon;
  int x = start;
  double t = 0;
  while (t < horizon) {
    path.states.push_back(x);
    path.jumpTimes.push_back(t);
    t += hold[x] * rng.exponential();
    const double u = rng.uniform() * cdf[static_cast<std::size_t>(x) * n + n - 1];
    const double* row = cdf.data() + static_cast<std::size_t>(x) * n;
    x = static_cast<int>(std::upper_bound(row, row + n, u) - row);
    if (x >= n) x = n - 1;
  }
  return path;
}

void write_kernel_csv(const TrapKernel& K, std::ostream& os) {
  os << "# schema-version: 1\n";
  const int n = K.size();
  os << "from";
  for (int j = 0; j < n; ++j) os << ",(" << j / K.M2 + 1 << "," << j % K.M2 + 1 << ")";
  os << "\n";
  char buf[40];
  for (int i = 0; i < n; ++i) {
    os << "(" << i / K.M2 + 1 << "," << i % K.M2 + 1 << ")";
    for (int j = 0; j < n; ++j) {
      std::snprintf(buf, sizeof buf, ",%.17g", K.at(i, j));
      os << buf;
    }
    os << "\n";
  }
}

}  // namespace grem
