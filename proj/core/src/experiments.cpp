#include "grem/experiments.hpp"

#include <tbb/global_control.h>
#include <tbb/parallel_for.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <nlohmann/json.hpp>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "grem/aging.hpp"
#include "grem/analytics.hpp"
#include "grem/dynamics.hpp"
#include "grem/entrance.hpp"
#include "grem/environment.hpp"
#include "grem/kprocess.hpp"
#include "grem/version.hpp"

namespace grem {

bool ExperimentResult::pass() const {
  return !assertions.empty() &&
         std::all_of(assertions.begin(), assertions.end(), [](const Assertion& a) { return a.pass; });
}

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

class Table {
 public:
  explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}

  template <class... T>
  void row(const T&... v) {
    std::ostringstream os;
    os << std::setprecision(12);
    bool first = true;
    ((os << (first ? "" : ",") << v, first = false), ...);
    rows_.push_back(os.str());
  }

  std::string str() const {
    std::ostringstream os;
    os << "# schema=" << kCsvSchemaVersion << '\n';
    for (std::size_t i = 0; i < header_.size(); ++i) os << (i ? "," : "") << header_[i];
    os << '\n';
    for (const auto& r : rows_) os << r << '\n';
    return os.str();
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::string> rows_;
};

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

Assertion check(std::string name, bool pass, std::string detail) {
  return {std::move(name), pass, std::move(detail)};
}

double total_variation(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s / 2;
}

void parse_regime_list(const std::string& s, std::vector<Regime>& out) {
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok.erase(std::remove_if(tok.begin(), tok.end(), ::isspace), tok.end());
    if (!tok.empty()) out.push_back(parse_regime(tok));
  }
  if (out.empty()) throw std::invalid_argument("config: empty regime list");
}

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("config: " + what);
}

// ---------------------------------------------------------------- ehrenfest-check
struct EhrenfestCheck {
  static constexpr const char* kName = "ehrenfest-check";
  int n2Max;
  std::vector<double> ts;
  double tol;

  static EhrenfestCheck parse(const Config& c) {
    EhrenfestCheck e{static_cast<int>(c.integer(kName, "n2_max")), c.reals(kName, "t_grid"), c.real(kName, "tol")};
    require(e.n2Max >= 1 && e.n2Max <= 30, "ehrenfest-check n2_max must lie in [1,30]");
    for (double t : e.ts) require(t > 0 && t < 1, "ehrenfest-check t_grid entries must lie in (0,1)");
    return e;
  }

  ExperimentResult run(std::uint64_t) const {
    ExperimentResult r;
    Table tab({"n2", "i", "t", "closed_form", "oracle", "abs_diff"});
    double worst = 0;
    for (int n2 = 1; n2 <= n2Max; ++n2)
      for (int i = 1; i <= n2; ++i)
        for (double t : ts) {
          const double a = ehrenfest_pgf(n2, i, t), b = ehrenfest_pgf_oracle(n2, i, t);
          worst = std::max(worst, std::abs(a - b));
          tab.row(n2, i, t, a, b, std::abs(a - b));
        }
    r.assertions.push_back(check("oracle-agreement", worst <= tol, "max |diff| = " + fmt(worst)));
    const double a1 = std::abs(ehrenfest_pgf(1, 1, 0.3) - 0.3);
    const double a2 = std::abs(ehrenfest_pgf(2, 1, 0.5) - 2.0 / 7);
    const double a3 = std::abs(ehrenfest_pgf(3, 1, 0.5) - 11.0 / 58);
    r.assertions.push_back(check("anchors", std::max({a1, a2, a3}) <= tol,
                                 "n2=1: " + fmt(a1) + ", 2/7: " + fmt(a2) + ", 11/58: " + fmt(a3)));
    r.files.push_back({"ehrenfest", tab.str()});
    return r;
  }
};

// ---------------------------------------------------------------- pi-check
struct PiCheck {
  static constexpr const char* kName = "pi-check";
  int n2Max;
  std::vector<double> lambdas;
  double tol;

  static PiCheck parse(const Config& c) {
    PiCheck p{static_cast<int>(c.integer(kName, "n2_max")), c.reals(kName, "lambdas"), c.real(kName, "tol")};
    require(p.n2Max >= 1 && p.n2Max <= 30, "pi-check n2_max must lie in [1,30]");
    for (double l : p.lambdas) require(l > 0, "pi-check lambdas must be positive");
    return p;
  }

  ExperimentResult run(std::uint64_t) const {
    ExperimentResult r;
    Table tab({"n2", "lambda_prime", "closed_form", "bruteforce", "abs_diff"});
    double worst = 0;
    for (int n2 = 1; n2 <= n2Max; ++n2)
      for (double l : lambdas) {
        const double a = pi_analytic(n2, l), b = pi_bruteforce(n2, l);
        worst = std::max(worst, std::abs(a - b));
        tab.row(n2, l, a, b, std::abs(a - b));
      }
    r.assertions.push_back(check("bruteforce-agreement", worst <= tol, "max |diff| = " + fmt(worst)));
    const double a1 = std::abs(pi_analytic(1, 1) - 2.0 / 3), a2 = std::abs(pi_analytic(2, 1) - 3.0 / 7);
    r.assertions.push_back(check("anchors", std::max(a1, a2) <= tol, "2/3: " + fmt(a1) + ", 3/7: " + fmt(a2)));
    r.files.push_back({"pi", tab.str()});
    return r;
  }
};

// ---------------------------------------------------------------- env-diagnostics
struct EnvDiagnostics {
  static constexpr const char* kName = "env-diagnostics";
  int nMin, nMax, balanceEnvs;
  double p, a, beta, balanceTol;
  int gumbelN1, gumbelEnvs;
  double gumbelLevel;
  int distN, distM1, distM2;

  static EnvDiagnostics parse(const Config& c) {
    EnvDiagnostics e{};
    e.nMin = static_cast<int>(c.integer(kName, "balance_n_min"));
    e.nMax = static_cast<int>(c.integer(kName, "balance_n_max"));
    e.balanceEnvs = static_cast<int>(c.integer(kName, "balance_envs"));
    e.p = c.real(kName, "p");
    e.a = c.real(kName, "a");
    e.beta = c.real(kName, "beta");
    e.balanceTol = c.real(kName, "balance_tol");
    e.gumbelN1 = static_cast<int>(c.integer(kName, "gumbel_n1"));
    e.gumbelEnvs = static_cast<int>(c.integer(kName, "gumbel_envs"));
    e.gumbelLevel = c.real(kName, "gumbel_level");
    e.distN = static_cast<int>(c.integer(kName, "distance_n"));
    e.distM1 = static_cast<int>(c.integer(kName, "distance_m1"));
    e.distM2 = static_cast<int>(c.integer(kName, "distance_m2"));
    require(e.nMin >= 2 && e.nMin <= e.nMax && e.nMax <= 20, "env-diagnostics balance N range");
    for (int N = e.nMin; N <= e.nMax; ++N) derive_params(N, e.p, e.a, e.beta);
    derive_params(e.distN, e.p, e.a, e.beta);
    require(e.gumbelN1 >= 1 && e.gumbelN1 <= 24 && e.gumbelEnvs >= 10, "env-diagnostics gumbel sizes");
    require(e.gumbelLevel > 0 && e.gumbelLevel < 1, "env-diagnostics gumbel_level in (0,1)");
    return e;
  }

  ExperimentResult run(std::uint64_t seed) const {
    ExperimentResult r;
    Table bal({"N", "env", "max_log_defect", "max_row_defect", "edges"});
    double worstLog = 0, worstRow = 0;
    for (int N = nMin; N <= nMax; ++N)
      for (int e = 0; e < balanceEnvs; ++e) {
        const auto P = derive_params(N, p, a, beta);
        const auto env = sample_environment(P, stream_key(seed, "balance", N * 1000 + e));
        const auto rep = detailed_balance_check(env, P);
        worstLog = std::max(worstLog, rep.maxLogDefect);
        worstRow = std::max(worstRow, rep.maxRowDefect);
        bal.row(N, e, rep.maxLogDefect, rep.maxRowDefect, rep.edges);
      }
    r.assertions.push_back(check("detailed-balance", worstLog <= balanceTol, "max log defect " + fmt(worstLog)));
    r.assertions.push_back(check("stochasticity", worstRow <= balanceTol, "max row defect " + fmt(worstRow)));

    std::vector<double> maxima(gumbelEnvs);
    tbb::parallel_for(0, gumbelEnvs, [&](int e) {
      // same level-1 stream as sample_environment
      Rng rng = derive_stream(stream_key(seed, "gumbel", e), "xi1", 0);
      double m = -INFINITY;
      for (std::size_t k = 0; k < (std::size_t{1} << gumbelN1); ++k) m = std::max(m, rng.normal());
      maxima[e] = u_n_inv(gumbelN1, m);
    });
    Table gum({"env", "scaled_max"});
    for (int e = 0; e < gumbelEnvs; ++e) gum.row(e, maxima[e]);
    const double D = ks_statistic(maxima, gumbel_cdf);
    const double pv = kolmogorov_pvalue(maxima.size(), D);
    r.assertions.push_back(check("gumbel-ks", pv >= gumbelLevel, "D = " + fmt(D) + ", p = " + fmt(pv)));

    const auto P = derive_params(distN, p, a, beta);
    const auto env = sample_environment(P, stream_key(seed, "distance", 0));
    const auto top = rank_top(env, P, distM1, distM2).second;
    const auto rep = top_distance_diagnostic(top, P);
    Table dist({"level", "block", "i", "j", "hamming", "rel_dev"});
    for (const auto& d : rep.pairs) dist.row(d.level, d.block, d.i, d.j, d.dist, d.relDev);

    r.files.push_back({"balance", bal.str()});
    r.files.push_back({"gumbel", gum.str()});
    r.files.push_back({"top_distances", dist.str()});
    return r;
  }
};

// ---------------------------------------------------------------- entrance-validate
struct EntranceValidate {
  static constexpr const char* kName = "entrance-validate";
  // first-cylinder law
  int fcN, fcM1, fcM2, fcEnvs, fcStarts;
  double fcP, fcA, fcZetaLog, fcTolScale, fcFraction;
  // factorization at AboveFT
  int faN, faM1, faM2, faEnvs;
  double faP, faA, faZeta, faTol;
  // case report
  int csN, csM1, csM2, csStarts;
  double csP, csA, csZeta;
  int solverCap;

  static EntranceValidate parse(const Config& c) {
    EntranceValidate e{};
    auto I = [&](const char* k) { return static_cast<int>(c.integer(kName, k)); };
    auto R = [&](const char* k) { return c.real(kName, k); };
    e.fcN = I("fc_n"), e.fcM1 = I("fc_m1"), e.fcM2 = I("fc_m2"), e.fcEnvs = I("fc_envs"), e.fcStarts = I("fc_starts");
    e.fcP = R("fc_p"), e.fcA = R("fc_a"), e.fcZetaLog = R("fc_zeta_log_coeff"), e.fcTolScale = R("fc_tol_scale");
    e.fcFraction = R("fc_fraction");
    e.faN = I("fa_n"), e.faM1 = I("fa_m1"), e.faM2 = I("fa_m2"), e.faEnvs = I("fa_envs");
    e.faP = R("fa_p"), e.faA = R("fa_a"), e.faZeta = R("fa_zeta"), e.faTol = R("fa_tol");
    e.csN = I("cs_n"), e.csM1 = I("cs_m1"), e.csM2 = I("cs_m2"), e.csStarts = I("cs_starts");
    e.csP = R("cs_p"), e.csA = R("cs_a"), e.csZeta = R("cs_zeta");
    e.solverCap = static_cast<int>(c.integer(kName, "solver_cap", 18));
    for (int N : {e.fcN, e.faN, e.csN}) require(N >= 4 && N <= e.solverCap, "entrance-validate N exceeds solver cap");
    derive_params(e.fcN, e.fcP, e.fcA, 1.0);
    derive_params(e.faN, e.faP, e.faA, 1.0);
    derive_params(e.csN, e.csP, e.csA, 1.0);
    require(e.fcEnvs >= 1 && e.faEnvs >= 1 && e.fcStarts >= 1, "entrance-validate counts must be positive");
    return e;
  }

  static ModelParams at_zeta(int N, double p, double a, double zeta) {
    auto P = derive_params(N, p, a, 1.0);
    P.beta = beta_from_zeta(P, zeta);
    return P;
  }

  ExperimentResult run(std::uint64_t seed) const {
    ExperimentResult r;
    SolverOptions so;
    so.cap = solverCap;

    // first-cylinder law: P(enter W^{x1} \ T^{x1} first) vs 1/M1
    {
      const auto P = at_zeta(fcN, fcP, fcA, fcZetaLog * std::log(static_cast<double>(fcN)));
      const auto cb = critical_betas(P.p, P.a);
      const double tol = fcTolScale / P.N1;
      Table tab({"env", "start_w1", "start_w2", "measured", "predicted", "tolerance", "pass"});
      std::size_t ok = 0, total = 0;
      for (int e = 0; e < fcEnvs; ++e) {
        const auto env = sample_environment(P, stream_key(seed, "fc-env", e));
        const auto top = rank_top(env, P, fcM1, fcM2).second;
        EntranceCase c{EntranceCaseKind::I4, 0, 0, -1, -1, {}};
        const auto q = entrance_query(P, top, c);
        const auto sol = solve_hitting(env, P, q.targetA, q.avoidB, so);
        Rng rng = derive_stream(seed, "fc-start", e);
        for (int s = 0; s < fcStarts; ++s) {
          const auto st = sample_outside_wbar(P, top, rng);
          const double h = sol.h[state_index(P, st)];
          const bool pass = std::abs(h - 1.0 / fcM1) <= tol;
          ok += pass;
          ++total;
          tab.row(e, st.w1, st.w2, h, 1.0 / fcM1, tol, pass ? 1 : 0);
        }
      }
      const double frac = static_cast<double>(ok) / static_cast<double>(total);
      r.assertions.push_back(check("first-cylinder-law", frac >= fcFraction,
                                   fmt(frac * 100) + "% of " + std::to_string(total) + " starts within " + fmt(tol) +
                                       " (beta " + fmt(P.beta) + ", beta2cr " + fmt(cb.beta2cr) + ")"));
      r.files.push_back({"entrance_first_cylinder", tab.str()});
    }

    // factorization nu1(y1)/M2 at AboveFT, uniform start outside W-bar
    {
      const auto P = at_zeta(faN, faP, faA, faZeta);
      const int nT = faM1 * faM2;
      std::vector<double> gapSum(nT, 0.0), measSum(nT, 0.0), predSum(nT, 0.0);
      Table tab({"env", "y1", "y2", "measured", "limit_prediction", "finite_n_prediction", "abs_gap"});
      for (int e = 0; e < faEnvs; ++e) {
        const auto env = sample_environment(P, stream_key(seed, "fa-env", e));
        const auto top = rank_top(env, P, faM1, faM2).second;
        const auto sw = scaled_weights(env, P);
        std::vector<double> g1;
        for (int x = 0; x < faM1; ++x) g1.push_back(sw.gamma1(top.top1[x]));
        const auto nu = limit_nu1(Regime::AboveFT, g1, faM2, sw.psiN);
        std::vector<SpinState> T;
        for (int x1 = 0; x1 < faM1; ++x1)
          for (int x2 = 0; x2 < faM2; ++x2) T.push_back(top.state(x1, x2));
        Rng rng = derive_stream(seed, "fa-start", e);
        const auto probe = sample_outside_wbar(P, top, rng);
        for (int k = 0; k < nT; ++k) {
          std::vector<SpinState> B;
          for (int j = 0; j < nT; ++j)
            if (j != k) B.push_back(T[j]);
          const auto sol = solve_hitting(env, P, {T[k]}, B, so);
          double m = 0;
          std::size_t cnt = 0;
          for (std::uint64_t idx = 0; idx < (std::uint64_t{1} << P.N); ++idx) {
            if (top.cylinder_of(state_of(P, idx))) continue;
            m += sol.h[idx];
            ++cnt;
          }
          m /= static_cast<double>(cnt);
          const int y1 = k / faM2, y2 = k % faM2;
          const double pred = nu[y1] / faM2;
          const double fin =
              predict_entrance(env, P, top, {EntranceCaseKind::I3, y1, y2, -1, -1, probe}, LambdaForm::Exact);
          gapSum[k] += std::abs(m - pred);
          measSum[k] += m;
          predSum[k] += pred;
          tab.row(e, y1, y2, m, pred, fin, std::abs(m - pred));
        }
      }
      double worst = 0;
      std::string detail;
      for (int k = 0; k < nT; ++k) {
        const double g = gapSum[k] / faEnvs;
        worst = std::max(worst, g);
        detail += (k ? ", " : "") + fmt(g);
      }
      r.assertions.push_back(check("aboveft-factorization", worst <= faTol,
                                   "mean |gap| per target over " + std::to_string(faEnvs) + " envs: " + detail +
                                       " (beta " + fmt(P.beta) + ")"));
      r.files.push_back({"entrance_factorization", tab.str()});
    }

    // per-case report at a dense-solver size
    {
      const auto P = at_zeta(csN, csP, csA, csZeta);
      const auto env = sample_environment(P, stream_key(seed, "cs-env", 0));
      const auto top = rank_top(env, P, csM1, csM2).second;
      ValidationOptions opt;
      opt.solver = so;
      const auto rows =
          validate_entrance(env, P, top, standard_entrance_cases(P, top, csStarts, stream_key(seed, "cs", 0)), opt);
      std::ostringstream os;
      write_entrance_csv(rows, P, os);
      r.files.push_back({"entrance_cases", os.str()});
    }
    return r;
  }
};

// ---------------------------------------------------------------- trap-sim
struct TrapSim {
  static constexpr const char* kName = "trap-sim";
  double rowTol, printedMin, handTol, sigma, occTol, minRowVisits;
  int M1, M2;
  double psi, alpha1, alpha2;
  std::uint64_t jumps;

  static TrapSim parse(const Config& c) {
    TrapSim t{};
    t.rowTol = c.real(kName, "row_tol");
    t.printedMin = c.real(kName, "printed_min_defect");
    t.handTol = c.real(kName, "hand_tol");
    t.sigma = c.real(kName, "sigma");
    t.occTol = c.real(kName, "occupation_tol");
    t.minRowVisits = c.real(kName, "min_row_visits");
    t.M1 = static_cast<int>(c.integer(kName, "m1"));
    t.M2 = static_cast<int>(c.integer(kName, "m2"));
    t.psi = c.real(kName, "psi");
    t.alpha1 = c.real(kName, "alpha1");
    t.alpha2 = c.real(kName, "alpha2");
    t.jumps = static_cast<std::uint64_t>(c.integer(kName, "jumps"));
    require(t.M1 >= 1 && t.M2 >= 1 && t.M1 * t.M2 <= 64, "trap-sim block size");
    require(t.psi > 0 && t.jumps >= 1000, "trap-sim psi > 0 and jumps >= 1000");
    return t;
  }

  ExperimentResult run(std::uint64_t seed) const {
    ExperimentResult r;
    const auto K = trap_kernel(2, 2, 1.0, {2.0, 1.0});
    const double hand = std::max({std::abs(K.at(0, 0) - 5.0 / 11), std::abs(K.at(0, 1) - 5.0 / 11),
                                  std::abs(K.at(0, 2) - 1.0 / 22), std::abs(K.at(0, 3) - 1.0 / 22)});
    r.assertions.push_back(check("worked-2x2", hand <= handTol, "max deviation " + fmt(hand)));

    double depWorst = 0, printedWorst = 0;
    Rng g = derive_stream(seed, "trap-gamma", 0);
    for (int m1 = 1; m1 <= 4; ++m1)
      for (int m2 = 1; m2 <= 4; ++m2)
        for (double ps : {0.1, 1.0, 10.0}) {
          auto gam = sample_ppp_decreasing(alpha1, m1, g);
          const auto Kd = trap_kernel(m1, m2, ps, gam, CrossBlockLambda::Departure);
          const auto Kp = trap_kernel(m1, m2, ps, gam, CrossBlockLambda::PrintedArrival);
          for (int i = 0; i < Kd.size(); ++i) {
            double sd = 0, sp = 0;
            for (int j = 0; j < Kd.size(); ++j) {
              sd += Kd.at(i, j);
              sp += Kp.at(i, j);
            }
            depWorst = std::max(depWorst, std::abs(sd - 1));
            printedWorst = std::max(printedWorst, std::abs(sp - 1));
          }
        }
    r.assertions.push_back(check("departure-rows-stochastic", depWorst <= rowTol, "max |row-1| " + fmt(depWorst)));
    r.assertions.push_back(
        check("printed-variant-fails", printedWorst >= printedMin, "max |row-1| " + fmt(printedWorst)));

    // simulated trap chain vs kernel rows and occupation
    const auto casc = sample_limit_cascade(alpha1, alpha2, M1, M2, stream_key(seed, "trap-cascade", 0));
    const auto Ks = trap_kernel(M1, M2, psi, casc.gamma1);
    const int n = Ks.size();
    // stationary law of the jump chain by power iteration
    std::vector<double> pi(n, 1.0 / n), nxt(n);
    for (int it = 0; it < 100000; ++it) {
      std::fill(nxt.begin(), nxt.end(), 0.0);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) nxt[j] += pi[i] * Ks.at(i, j);
      double d = 0;
      for (int i = 0; i < n; ++i) d += std::abs(nxt[i] - pi[i]);
      pi.swap(nxt);
      if (d < 1e-15) break;
    }
    double meanHold = 0;
    for (int x = 0; x < n; ++x) meanHold += pi[x] * casc.gamma2Rows[x / M2][x % M2];
    Rng rng = derive_stream(seed, "trap-sim", 0);
    const auto path = trap_simulate(Ks, casc.gamma2Rows, 1.05 * meanHold * static_cast<double>(jumps), rng);
    std::vector<double> cnt(static_cast<std::size_t>(n) * n, 0.0), rowN(n, 0.0), occ(n, 0.0);
    for (std::size_t k = 0; k + 1 < path.states.size(); ++k) {
      cnt[static_cast<std::size_t>(path.states[k]) * n + path.states[k + 1]] += 1;
      rowN[path.states[k]] += 1;
      occ[path.states[k]] += path.jumpTimes[k + 1] - path.jumpTimes[k];
    }
    Table tab({"from", "to", "visits", "empirical", "kernel", "stderr", "tested", "pass"});
    int bad = 0, tested = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double pk = Ks.at(i, j);
        const double emp = rowN[i] > 0 ? cnt[static_cast<std::size_t>(i) * n + j] / rowN[i] : 0.0;
        const double se = std::sqrt(std::max(pk * (1 - pk), 1e-12) / std::max(rowN[i], 1.0));
        // the normal approximation needs enough departures from the row
        const bool use = rowN[i] >= minRowVisits;
        const bool pass = !use || std::abs(emp - pk) <= sigma * se;
        tested += use;
        bad += !pass;
        tab.row(i, j, rowN[i], emp, pk, se, use ? 1 : 0, pass ? 1 : 0);
      }
    r.assertions.push_back(check("simulated-rows", bad == 0 && tested > 0,
                                 std::to_string(bad) + " of " + std::to_string(tested) + " tested entries outside " +
                                     fmt(sigma) + " stderr over " + std::to_string(path.states.size()) + " visits"));

    std::vector<double> target(n);
    for (int x = 0; x < n; ++x) target[x] = pi[x] * casc.gamma2Rows[x / M2][x % M2];
    const double zt = std::accumulate(target.begin(), target.end(), 0.0);
    const double zo = std::accumulate(occ.begin(), occ.end(), 0.0);
    for (auto& v : target) v /= zt;
    for (auto& v : occ) v /= zo;
    const double tv = total_variation(occ, target);
    r.assertions.push_back(check("occupation", tv <= occTol, "TV to pi*gamma2 = " + fmt(tv)));

    std::ostringstream ks;
    write_kernel_csv(Ks, ks);
    r.files.push_back({"trap_kernel", ks.str()});
    r.files.push_back({"trap_transitions", tab.str()});
    return r;
  }
};

// ---------------------------------------------------------------- kproc-equilibrium
struct KprocEquilibrium {
  static constexpr const char* kName = "kproc-equilibrium";
  int K1, K2;
  double alpha1, alpha2, p, psi, budget, tvTol;
  std::uint64_t queries;

  static KprocEquilibrium parse(const Config& c) {
    KprocEquilibrium k{};
    k.K1 = static_cast<int>(c.integer(kName, "k1"));
    k.K2 = static_cast<int>(c.integer(kName, "k2"));
    k.alpha1 = c.real(kName, "alpha1");
    k.alpha2 = c.real(kName, "alpha2");
    k.p = c.real(kName, "p");
    k.psi = c.real(kName, "psi");
    k.budget = c.real(kName, "budget");
    k.tvTol = c.real(kName, "tv_tol");
    k.queries = static_cast<std::uint64_t>(c.integer(kName, "product_queries"));
    require(k.K1 >= 1 && k.K2 >= 1 && k.K1 * k.K2 <= 4096, "kproc-equilibrium truncation");
    require(k.alpha1 > 0 && k.alpha1 < 1 && k.alpha2 > 0 && k.alpha2 < 1, "alphas in (0,1)");
    require(k.p > 0 && k.p < 1 && k.psi > 0 && k.budget > 0, "p in (0,1), psi > 0, budget > 0");
    return k;
  }

  ExperimentResult run(std::uint64_t seed) const {
    ExperimentResult r;
    auto casc = sample_limit_cascade(alpha1, alpha2, K1, K2, stream_key(seed, "cascade", 0));
    // all three equilibria are invariant under gamma1 -> c gamma1; unit mass fixes the event count at budget * K2
    const double g1 = std::accumulate(casc.gamma1.begin(), casc.gamma1.end(), 0.0);
    for (auto& v : casc.gamma1) v /= g1;
    const int n = K1 * K2;
    std::vector<double> target(n);
    for (int x1 = 0; x1 < K1; ++x1)
      for (int x2 = 0; x2 < K2; ++x2) target[x1 * K2 + x2] = casc.gamma1[x1] * casc.gamma2Rows[x1][x2];
    const double z = std::accumulate(target.begin(), target.end(), 0.0);
    for (auto& v : target) v /= z;

    const double sH = budget;
    Rng r1 = derive_stream(seed, "above", 0);
    const auto above = simulate_k(build_limit_specs(casc, p, psi, Regime::AboveFT).k, sH, r1);
    const auto occA = occupation(above.path, K1, K2);
    Rng r2 = derive_stream(seed, "at", 0);
    const auto at = simulate_k2(build_limit_specs(casc, p, psi, Regime::AtFT).k2, sH, r2);
    const auto occT = occupation(at.path, K1, K2);

    const auto pr = build_limit_specs(casc, p, psi, Regime::BelowFT).pr;
    double f3sum = std::accumulate(pr.f3.begin(), pr.f3.end(), 0.0);
    const double tEnd = sH * f3sum;
    std::vector<double> qt(queries);
    Rng rq = derive_stream(seed, "queries", 0);
    for (auto& t : qt) t = tEnd * rq.uniform();
    std::sort(qt.begin(), qt.end());
    Rng r3 = derive_stream(seed, "below", 0);
    const auto samples = simulate_product_limit(pr, qt, r3);
    std::vector<double> occB(n, 0.0);
    for (const auto& s : samples) occB[s.x1 * K2 + s.x2] += 1.0 / static_cast<double>(samples.size());

    Table tab({"x1", "x2", "target", "above_ft", "at_ft", "below_ft"});
    for (int x = 0; x < n; ++x) tab.row(x / K2, x % K2, target[x], occA[x], occT[x], occB[x]);
    const std::vector<std::pair<std::string, const std::vector<double>*>> all{
        {"target", &target}, {"above", &occA}, {"at", &occT}, {"below", &occB}};
    for (std::size_t i = 0; i < all.size(); ++i)
      for (std::size_t j = i + 1; j < all.size(); ++j) {
        const double tv = total_variation(*all[i].second, *all[j].second);
        r.assertions.push_back(check("tv-" + all[i].first + "-" + all[j].first, tv < tvTol, "TV = " + fmt(tv)));
      }

    // sensitivity: the same cascade truncated at 2K puts this much target mass outside the K x K block
    Table sens({"k1", "k2", "mass_outside_block"});
    {
      const auto c2 = sample_limit_cascade(alpha1, alpha2, 2 * K1, 2 * K2, stream_key(seed, "cascade", 0));
      double in = 0, all2 = 0;
      for (int x1 = 0; x1 < 2 * K1; ++x1)
        for (int x2 = 0; x2 < 2 * K2; ++x2) {
          const double m = c2.gamma1[x1] * c2.gamma2Rows[x1][x2];
          all2 += m;
          if (x1 < K1 && x2 < K2) in += m;
        }
      sens.row(K1, K2, 0.0);
      sens.row(2 * K1, 2 * K2, 1 - in / all2);
    }

    // summability of sum f2 f2' across truncations
    Table sum({"truncation", "sum_f_fprime", "tail_mass_bound"});
    for (int K : {16, 64, 256}) {
      const auto cK = sample_limit_cascade(alpha1, alpha2, K, K, stream_key(seed, "summability", 0));
      const auto k2 = build_limit_specs(cK, p, psi, Regime::AtFT).k2;
      double s = 0;
      for (int x = 0; x < K; ++x)
        for (double fp : k2.fprime[x]) s += k2.f[x] * fp;
      sum.row(K, s, k2.tailMass);
    }
    r.files.push_back({"occupation", tab.str()});
    r.files.push_back({"summability", sum.str()});
    r.files.push_back({"truncation_sensitivity", sens.str()});
    return r;
  }
};

// ---------------------------------------------------------------- k2-restricted
struct K2Restricted {
  static constexpr const char* kName = "k2-restricted";
  int K1, K2, M1, M2;
  double alpha1, alpha2, p, psi, sigma;
  std::uint64_t minJumps;

  static K2Restricted parse(const Config& c) {
    K2Restricted k{};
    k.K1 = static_cast<int>(c.integer(kName, "k1"));
    k.K2 = static_cast<int>(c.integer(kName, "k2"));
    k.M1 = static_cast<int>(c.integer(kName, "m1"));
    k.M2 = static_cast<int>(c.integer(kName, "m2"));
    k.alpha1 = c.real(kName, "alpha1");
    k.alpha2 = c.real(kName, "alpha2");
    k.p = c.real(kName, "p");
    k.psi = c.real(kName, "psi");
    k.sigma = c.real(kName, "sigma");
    k.minJumps = static_cast<std::uint64_t>(c.integer(kName, "min_jumps"));
    require(k.M1 >= 1 && k.M1 <= k.K1 && k.M2 >= 1 && k.M2 <= k.K2, "k2-restricted block inside truncation");
    require(k.psi > 0 && k.p > 0 && k.p < 1, "k2-restricted psi > 0, p in (0,1)");
    return k;
  }

  ExperimentResult run(std::uint64_t seed) const {
    ExperimentResult r;
    const auto casc = sample_limit_cascade(alpha1, alpha2, K1, K2, stream_key(seed, "cascade", 0));
    const auto spec = build_limit_specs(casc, p, psi, Regime::AtFT).k2;
    double rate = 0;
    for (int x = 0; x < M1; ++x) rate += M2 * spec.f[x];
    double sH = 1.5 * static_cast<double>(minJumps) / std::max(rate, 1e-12) + 1.0;
    KPath path;
    for (int attempt = 0;; ++attempt, sH *= 2) {
      Rng rng = derive_stream(seed, "k2", attempt);
      path = simulate_k2(spec, sH, rng).path;
      std::uint64_t have = 0;
      for (const auto& e : path) have += e.x1 >= 0 && e.x1 < M1 && e.x2 >= 0 && e.x2 < M2;
      if (have > minJumps || attempt == 8) break;
    }
    const auto rt = restricted_transitions(path, M1, M2, minJumps);
    std::vector<double> ft(spec.f.begin(), spec.f.begin() + M1);
    const auto K = trap_kernel(M1, M2, 1.0, ft);
    Table tab({"from", "to", "empirical", "kernel", "stderr", "pass"});
    const int n = M1 * M2;
    int bad = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double pk = K.at(i, j);
        const double tot = static_cast<double>(rt.rowTotals[i]);
        const double se = std::sqrt(std::max(pk * (1 - pk), 1e-12) / std::max(tot, 1.0));
        const bool pass = std::abs(rt.p(i, j) - pk) <= sigma * se;
        bad += !pass;
        tab.row(i, j, rt.p(i, j), pk, se, pass ? 1 : 0);
      }
    r.assertions.push_back(check("restricted-kernel", bad == 0,
                                 std::to_string(bad) + " of " + std::to_string(n * n) + " entries outside " +
                                     fmt(sigma) + " stderr, " + std::to_string(rt.jumps) + " restricted jumps"));
    r.files.push_back({"restricted_transitions", tab.str()});
    return r;
  }
};

// ---------------------------------------------------------------- aging-curve
struct AgingCurveExp {
  static constexpr const char* kName = "aging-curve";
  std::vector<Regime> regimes;
  double alpha1, alpha2, p, psi, gapTol, epsRel1, epsRel2;
  std::vector<double> thetas, tws;
  std::uint64_t replicas;
  int K1;

  static AgingCurveExp parse(const Config& c) {
    AgingCurveExp a{};
    parse_regime_list(c.raw(kName, "regimes"), a.regimes);
    a.alpha1 = c.real(kName, "alpha1");
    a.alpha2 = c.real(kName, "alpha2");
    a.p = c.real(kName, "p");
    a.psi = c.real(kName, "psi");
    a.gapTol = c.real(kName, "gap_tol");
    a.epsRel1 = c.real(kName, "eps_rel1");
    a.epsRel2 = c.real(kName, "eps_rel2");
    a.thetas = c.reals(kName, "thetas");
    a.tws = c.reals(kName, "tws");
    a.replicas = static_cast<std::uint64_t>(c.integer(kName, "replicas"));
    a.K1 = static_cast<int>(c.integer(kName, "k1"));
    require(a.alpha1 > 0 && a.alpha1 < a.alpha2 && a.alpha2 < 1, "aging-curve needs 0 < alpha1 < alpha2 < 1");
    require(a.replicas >= 100, "aging-curve replicas >= 100");
    for (std::size_t i = 1; i < a.tws.size(); ++i) require(a.tws[i] < a.tws[i - 1], "aging-curve tws must decrease");
    return a;
  }

  ExperimentResult run(std::uint64_t seed) const {
    ExperimentResult r;
    std::ostringstream all;
    bool header = true;
    for (std::size_t k = 0; k < regimes.size(); ++k) {
      AnnealedModel m;
      m.regime = regimes[k];
      m.alpha1 = alpha1;
      m.alpha2 = alpha2;
      m.p = p;
      m.psi = psi;
      m.epsRel1 = epsRel1;
      m.epsRel2 = epsRel2;
      Rng g = derive_stream(seed, "gamma1", 0);
      m.gamma1 = sample_ppp_decreasing(alpha1, K1, g);
      const auto curve = aging_curve(m, alpha1, alpha2, p, thetas, tws, replicas, stream_key(seed, "aging", k));
      std::ostringstream os;
      write_aging_csv(curve, os);
      auto text = os.str();
      if (!header) text = text.substr(text.find('\n', text.find('\n') + 1) + 1);
      header = false;
      all << text;

      const std::string tag = regime_name(regimes[k]);
      double worst = 0;
      bool flagged = false, monotone = true;
      const std::size_t m0 = curve.rows.size() - thetas.size();
      for (std::size_t i = m0; i < curve.rows.size(); ++i) {
        worst = std::max(worst, curve.rows[i].gap);
        flagged |= curve.rows[i].flagged;
      }
      for (std::size_t i = 0; i < curve.rows.size(); ++i)
        for (std::size_t j = 0; j < curve.rows.size(); ++j) {
          const auto &a = curve.rows[i], &b = curve.rows[j];
          if (a.tw == b.tw && a.theta < b.theta && b.pi > a.pi + 2 * std::hypot(a.stdError, b.stdError))
            monotone = false;
        }
      r.assertions.push_back(check("gap-" + tag, worst <= gapTol,
                                   "max |gap| at tw=" + fmt(tws.back()) + ": " + fmt(worst) +
                                       (flagged ? " (truncation flag set)" : "")));
      r.assertions.push_back(check("trend-" + tag, curve.gapsShrink, "gaps non-increasing within 2 stderr"));
      r.assertions.push_back(check("monotone-" + tag, monotone, "pi-hat non-increasing in theta"));
    }
    r.files.push_back({"aging", all.str()});
    return r;
  }
};

// ---------------------------------------------------------------- clock-scaling
struct ClockScaling {
  static constexpr const char* kName = "clock-scaling";
  double alpha1, alpha2, p, psi, tol, syntheticTol, syntheticAlpha, epsRel;
  std::vector<double> epsilons;
  double rPrime, rGamma1, rWeighted, rSynthetic;
  std::uint64_t nPrime, nGamma1, nWeighted, nSynthetic;
  int K1;

  static ClockScaling parse(const Config& c) {
    ClockScaling s{};
    s.alpha1 = c.real(kName, "alpha1");
    s.alpha2 = c.real(kName, "alpha2");
    s.p = c.real(kName, "p");
    s.psi = c.real(kName, "psi");
    s.tol = c.real(kName, "tol");
    s.syntheticTol = c.real(kName, "synthetic_tol");
    s.syntheticAlpha = c.real(kName, "synthetic_alpha");
    s.epsRel = c.real(kName, "eps_rel");
    s.epsilons = c.reals(kName, "epsilons");
    s.rPrime = c.real(kName, "r_gamma_prime");
    s.rGamma1 = c.real(kName, "r_gamma1");
    s.rWeighted = c.real(kName, "r_weighted");
    s.rSynthetic = c.real(kName, "r_synthetic");
    s.nPrime = static_cast<std::uint64_t>(c.integer(kName, "replicas_gamma_prime"));
    s.nGamma1 = static_cast<std::uint64_t>(c.integer(kName, "replicas_gamma1"));
    s.nWeighted = static_cast<std::uint64_t>(c.integer(kName, "replicas_weighted"));
    s.nSynthetic = static_cast<std::uint64_t>(c.integer(kName, "replicas_synthetic"));
    s.K1 = static_cast<int>(c.integer(kName, "k1"));
    require(s.alpha1 > 0 && s.alpha1 < s.alpha2 && s.alpha2 < 1, "clock-scaling needs 0 < alpha1 < alpha2 < 1");
    for (std::size_t i = 1; i < s.epsilons.size(); ++i)
      require(s.epsilons[i] < s.epsilons[i - 1], "clock-scaling epsilons must decrease");
    return s;
  }

  ExperimentResult run(std::uint64_t seed) const {
    ExperimentResult r;
    ScalingQuery q;
    q.alpha1 = alpha1;
    q.alpha2 = alpha2;
    q.p = p;
    q.psi = psi;
    q.epsRel = epsRel;
    q.syntheticAlpha = syntheticAlpha;
    Rng g = derive_stream(seed, "gamma1", 0);
    q.gamma1 = sample_ppp_decreasing(alpha1, K1, g);
    std::vector<ScalingRow> rows;
    const std::vector<std::tuple<ScalingClock, double, std::uint64_t, double>> plan{
        {ScalingClock::GammaPrime, rPrime, nPrime, tol},
        {ScalingClock::Gamma1, rGamma1, nGamma1, tol},
        {ScalingClock::WeightedK, rWeighted, nWeighted, tol},
        {ScalingClock::Synthetic, rSynthetic, nSynthetic, syntheticTol}};
    std::uint64_t k = 0;
    for (const auto& [clock, rr, n, tl] : plan) {
      q.clock = clock;
      const auto part = clock_smalltime_scaling(q, epsilons, {rr}, n, stream_key(seed, "scaling", k++));
      const auto& last = part.back();
      const double d = std::abs(last.fit.alpha - last.target);
      r.assertions.push_back(check(std::string("index-") + scaling_clock_name(clock), !last.fit.degenerate && d <= tl,
                                   "fitted " + fmt(last.fit.alpha) + " vs " + fmt(last.target) + " at eps=" +
                                       fmt(last.epsilon) + " (" + std::to_string(n) + " replicas)"));
      rows.insert(rows.end(), part.begin(), part.end());
    }
    std::ostringstream os;
    write_scaling_csv(rows, os);
    r.files.push_back({"clock_scaling", os.str()});
    return r;
  }
};

// ---------------------------------------------------------------- intermediate-lln
struct IntermediateLln {
  static constexpr const char* kName = "intermediate-lln";
  int N, envs;
  double p, a, beta, tol, rejectBeta;
  std::vector<double> ts;
  std::uint64_t replicas;

  static IntermediateLln parse(const Config& c) {
    IntermediateLln l{};
    l.N = static_cast<int>(c.integer(kName, "n"));
    l.envs = static_cast<int>(c.integer(kName, "envs"));
    l.p = c.real(kName, "p");
    l.a = c.real(kName, "a");
    l.beta = c.real(kName, "beta");
    l.tol = c.real(kName, "tol");
    l.rejectBeta = c.real(kName, "reject_beta");
    l.ts = c.reals(kName, "t_grid");
    l.replicas = static_cast<std::uint64_t>(c.integer(kName, "replicas"));
    require(l.N <= kDefaultEnvCap, "intermediate-lln N exceeds the environment cap");
    derive_params(l.N, l.p, l.a, l.beta);
    check_intermediate_beta(l.p, l.a, l.beta);
    require(l.envs >= 1 && l.replicas >= 2, "intermediate-lln envs >= 1, replicas >= 2");
    return l;
  }

  ExperimentResult run(std::uint64_t seed) const {
    ExperimentResult r;
    const auto P = derive_params(N, p, a, beta);
    Table tab({"env", "t", "scaled_sum", "stderr", "rel_gap"});
    std::vector<double> mean(ts.size(), 0.0);
    for (int e = 0; e < envs; ++e) {
      const auto env = sample_environment(P, stream_key(seed, "lln-env", e));
      const auto rows = intermediate_lln(env, P, ts, replicas, stream_key(seed, "lln", e));
      for (std::size_t i = 0; i < rows.size(); ++i) {
        mean[i] += rows[i].mean / envs;
        tab.row(e, rows[i].t, rows[i].mean, rows[i].stdError, rows[i].relGap);
      }
    }
    std::string detail;
    double worst = 0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const double g = std::abs(mean[i] - ts[i]) / ts[i];
      worst = std::max(worst, g);
      detail += (i ? ", " : "") + std::string("t=") + fmt(ts[i]) + ": " + fmt(mean[i]);
      tab.row("mean", ts[i], mean[i], "", (mean[i] - ts[i]) / ts[i]);
    }
    r.assertions.push_back(check("lln", worst <= tol, detail + " over " + std::to_string(envs) + " envs"));
    std::string msg;
    bool rejected = false;
    try {
      check_intermediate_beta(p, a, rejectBeta);
    } catch (const std::invalid_argument& ex) {
      rejected = true;
      msg = ex.what();
    }
    r.assertions.push_back(check("beta-guard", rejected, "beta=" + fmt(rejectBeta) + ": " + msg));
    r.files.push_back({"intermediate_lln", tab.str()});
    return r;
  }
};

// ---------------------------------------------------------------- registry
struct Entry {
  std::function<void(const Config&)> validate;
  std::function<ExperimentResult(const Config&, std::uint64_t)> run;
};

template <class E>
Entry entry() {
  return {[](const Config& c) { (void)E::parse(c); },
          [](const Config& c, std::uint64_t seed) {
            auto res = E::parse(c).run(stream_key(seed, E::kName, 0));
            res.name = E::kName;
            return res;
          }};
}

const std::map<std::string, Entry>& registry() {
  static const std::map<std::string, Entry> r{
      {EnvDiagnostics::kName, entry<EnvDiagnostics>()},   {EntranceValidate::kName, entry<EntranceValidate>()},
      {TrapSim::kName, entry<TrapSim>()},                 {KprocEquilibrium::kName, entry<KprocEquilibrium>()},
      {K2Restricted::kName, entry<K2Restricted>()},       {AgingCurveExp::kName, entry<AgingCurveExp>()},
      {ClockScaling::kName, entry<ClockScaling>()},       {EhrenfestCheck::kName, entry<EhrenfestCheck>()},
      {PiCheck::kName, entry<PiCheck>()},                 {IntermediateLln::kName, entry<IntermediateLln>()}};
  return r;
}

}  // namespace

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"env-diagnostics", "entrance-validate", "trap-sim",
                                              "kproc-equilibrium", "k2-restricted", "aging-curve",
                                              "clock-scaling", "ehrenfest-check", "pi-check",
                                              "intermediate-lln"};
  return names;
}

bool is_experiment(const std::string& name) { return registry().count(name) != 0; }

void validate_experiment(const std::string& name, const Config& cfg) {
  auto it = registry().find(name);
  if (it == registry().end()) throw std::invalid_argument("unknown experiment '" + name + "'");
  it->second.validate(cfg);
}

ExperimentResult run_experiment(const std::string& name, const Config& cfg, std::uint64_t seed) {
  auto it = registry().find(name);
  if (it == registry().end()) throw std::invalid_argument("unknown experiment '" + name + "'");
  const auto t0 = std::chrono::steady_clock::now();
  auto res = it->second.run(cfg, seed);
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

std::string csv_to_json(const std::string& csv) {
  std::istringstream is(csv);
  std::string line;
  std::vector<std::string> header;
  json rows = json::array();
  json meta = json::object();
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(tok);
    if (!s.empty() && s.back() == ',') out.emplace_back();
    return out;
  };
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      meta["comment"] = line.substr(1);
      continue;
    }
    const auto cells = split(line);
    if (header.empty()) {
      header = cells;
      continue;
    }
    json row = json::object();
    for (std::size_t i = 0; i < header.size() && i < cells.size(); ++i) {
      char* end = nullptr;
      const double v = std::strtod(cells[i].c_str(), &end);
      if (!cells[i].empty() && end && *end == '\0')
        row[header[i]] = v;
      else
        row[header[i]] = cells[i];
    }
    rows.push_back(std::move(row));
  }
  return json{{"meta", meta}, {"rows", rows}}.dump(1) + "\n";
}

std::string RunManifest::json() const {
  nlohmann::json j;
  std::ostringstream h;
  h << std::hex << std::setw(16) << std::setfill('0') << configHash;
  j["config_hash"] = h.str();
  j["version"] = version;
  j["wall_clock_seconds"] = wallClock;
  j["pass"] = pass;
  j["files"] = files;
  for (const auto& r : results) {
    nlohmann::json e;
    e["name"] = r.name;
    e["pass"] = r.pass();
    e["seconds"] = r.seconds;
    for (const auto& a : r.assertions) e["assertions"].push_back({{"name", a.name}, {"pass", a.pass}, {"detail", a.detail}});
    j["experiments"].push_back(e);
  }
  return j.dump(2) + "\n";
}

std::uint64_t resolve_seed(const Config& cfg, const RunOptions& opt) {
  if (opt.seed) return *opt.seed;
  return static_cast<std::uint64_t>(cfg.integer("general", "seed", 1));
}

namespace {

void write_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

}  // namespace

RunManifest run(const Config& cfg, const std::vector<std::string>& experiments, const RunOptions& opt) {
  if (experiments.empty()) throw std::invalid_argument("no experiment selected");
  if (opt.format != "csv" && opt.format != "json") throw std::invalid_argument("format must be csv or json");
  for (const auto& name : experiments) validate_experiment(name, cfg);
  if (opt.workers && *opt.workers < 1) throw std::invalid_argument("workers must be positive");

  std::optional<tbb::global_control> limit;
  if (opt.workers) limit.emplace(tbb::global_control::max_allowed_parallelism, static_cast<std::size_t>(*opt.workers));

  const auto t0 = std::chrono::steady_clock::now();
  RunManifest m;
  m.configHash = cfg.hash();
  m.version = kVersion;
  const std::uint64_t seed = resolve_seed(cfg, opt);
  for (const auto& name : experiments) m.results.push_back(run_experiment(name, cfg, seed));
  m.wallClock = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  m.pass = std::all_of(m.results.begin(), m.results.end(), [](const auto& r) { return r.pass(); });

  // everything computed; only now touch the output directory
  const fs::path out(opt.outDir);
  fs::create_directories(out);
  for (const auto& r : m.results)
    for (const auto& f : r.files) {
      const std::string file = r.name + "." + f.name + (opt.format == "json" ? ".json" : ".csv");
      write_atomic(out / file, opt.format == "json" ? csv_to_json(f.csv) : f.csv);
      m.files.push_back(file);
    }
  write_atomic(out / "manifest.json", m.json());
  return m;
}

}  // namespace grem
