#include "grem/aging.hpp"

#include <tbb/parallel_for.h>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

#include "grem/analytics.hpp"

namespace grem {

double sample_positive_stable(double alpha, Rng& rng) {
  if (!(alpha > 0 && alpha < 1)) throw std::invalid_argument("stable index must lie in (0,1)");
  const double u = M_PI * rng.uniform();
  const double w = rng.exponential();
  const double a = std::sin(alpha * u) / std::pow(std::sin(u), 1 / alpha);
  const double b = std::pow(std::sin((1 - alpha) * u) / w, (1 - alpha) / alpha);
  return a * b;
}

double row_sum_moment(double alpha1, double alpha2, double p) {
  if (!(alpha1 < alpha2)) throw std::invalid_argument("row_sum_moment needs alpha1 < alpha2");
  const double q = alpha1 / alpha2;
  return std::pow(1 - p, -alpha1) * std::pow(std::tgamma(1 - alpha2), q) * std::tgamma(1 - q) /
         std::tgamma(1 - alpha1);
}

AnnealedPool::AnnealedPool(double alpha, double C, double eps, double rate)
    : alpha_(alpha), C_(C), eps_(eps), rate_(rate) {
  if (!(alpha > 0 && alpha < 1) || !(C > 0) || !(eps > 0) || !(rate >= 0))
    throw std::invalid_argument("AnnealedPool: bad parameters");
}

double AnnealedPool::drift() const { return rate_ * C_ * alpha_ / (1 - alpha_) * std::pow(eps_, 1 - alpha_); }

double AnnealedPool::small_variance() const {
  // E[T^2] = 2
  return rate_ * C_ * 2 * alpha_ / (2 - alpha_) * std::pow(eps_, 2 - alpha_);
}

std::uint32_t AnnealedPool::fire_new(double dE, Rng& rng, double& first) {
  const double pFire = -std::expm1(-rate_ * dE);
  first = -std::log1p(-rng.uniform() * pFire) / rate_;
  f_.push_back(eps_ * std::pow(rng.uniform(), -1 / alpha_));
  return static_cast<std::uint32_t>(f_.size() - 1);
}

void AnnealedPool::expose(double dE, Rng& rng, std::vector<Atom>& out) {
  if (!(dE > 0) || rate_ == 0) {
    exposure_ += std::max(dE, 0.0);
    return;
  }
  const std::size_t old = f_.size();
  for (std::size_t i = 0; i < old; ++i) {
    const auto k = rng.poisson(rate_ * dE);
    for (std::uint64_t j = 0; j < k; ++j)
      out.push_back({dE * rng.uniform(), f_[i] * rng.exponential(), static_cast<std::uint32_t>(i)});
  }
  const double mean = C_ * std::pow(eps_, -alpha_) * std::exp(-rate_ * exposure_) * -std::expm1(-rate_ * dE);
  const auto n = rng.poisson(mean);
  for (std::uint64_t j = 0; j < n; ++j) {
    double t1;
    const auto id = fire_new(dE, rng, t1);
    const double f = f_[id];
    out.push_back({t1, f * rng.exponential(), id});
    const auto k = rng.poisson(rate_ * (dE - t1));
    for (std::uint64_t m = 0; m < k; ++m) out.push_back({t1 + (dE - t1) * rng.uniform(), f * rng.exponential(), id});
  }
  exposure_ += dE;
}

double AnnealedPool::expose_total(double dE, Rng& rng) {
  if (!(dE > 0) || rate_ == 0) return 0.0;
  double total = drift() * dE;
  const std::size_t old = f_.size();
  for (std::size_t i = 0; i < old; ++i) {
    const auto k = rng.poisson(rate_ * dE);
    if (k) total += f_[i] * rng.gamma(static_cast<double>(k));
  }
  const double mean = C_ * std::pow(eps_, -alpha_) * std::exp(-rate_ * exposure_) * -std::expm1(-rate_ * dE);
  const auto n = rng.poisson(mean);
  for (std::uint64_t j = 0; j < n; ++j) {
    double t1;
    const auto id = fire_new(dE, rng, t1);
    const auto k = 1 + rng.poisson(rate_ * (dE - t1));
    total += f_[id] * rng.gamma(static_cast<double>(k));
  }
  exposure_ += dE;
  return total;
}

namespace {

struct Windows {
  double tw;
  std::vector<double> ends;
  double last;
  std::vector<char> n1, n2;
  double G = 0;

  Windows(double tw_, const std::vector<double>& thetas) : tw(tw_) {
    for (double th : thetas) ends.push_back(tw * (1 + th));
    last = *std::max_element(ends.begin(), ends.end());
    n1.assign(ends.size(), 0);
    n2.assign(ends.size(), 0);
  }
  bool done() const { return G >= last; }
  void drift(double d) { G += d; }
  void atom(double m) {
    const double b = G;
    G += m;
    if (b <= tw)
      for (std::size_t i = 0; i < ends.size(); ++i)
        if (G >= ends[i]) n2[i] = 1;
  }
  void span(double before, double after) {
    if (before <= tw)
      for (std::size_t i = 0; i < ends.size(); ++i)
        if (after >= ends[i]) n1[i] = 1;
  }
};

struct Outcome {
  std::vector<char> n1, n2;
  double bias = 0;
};

void sort_atoms(std::vector<AnnealedPool::Atom>& a) {
  std::sort(a.begin(), a.end(), [](const auto& x, const auto& y) { return x.offset < y.offset; });
}

// one-level clock K(f, 1) with f a PPP(alpha) of intensity multiplier C
Outcome run_uniform(double alpha, double C, double epsRel, Windows W, double thetaMin, Rng& rng) {
  AnnealedPool pool(alpha, C, epsRel * W.tw);
  const double d = pool.drift();
  double dS = std::pow(W.last, alpha) / (C * std::tgamma(1 - alpha));
  double sTotal = 0;
  std::vector<AnnealedPool::Atom> atoms;
  while (!W.done()) {
    atoms.clear();
    pool.expose(dS, rng, atoms);
    sort_atoms(atoms);
    double prev = 0;
    for (const auto& a : atoms) {
      W.drift(d * (a.offset - prev));
      const double b = W.G;
      W.G += a.mass;
      W.span(b, W.G);
      prev = a.offset;
      if (W.done()) break;
    }
    if (!W.done()) W.drift(d * (dS - prev));
    sTotal += dS;
    dS *= 2;
  }
  return {W.n1, W.n2, std::sqrt(sTotal * pool.small_variance()) / (thetaMin * W.tw)};
}

Outcome run_above(const AnnealedModel& m, Windows W, double thetaMin, Rng& rng) {
  const double C2 = std::pow(1 - m.p, -m.alpha2);
  const double eps = m.epsRel2 * W.tw;
  std::vector<AnnealedPool> pools;
  double D = 0, V = 0, wsum = 0;
  for (double g : m.gamma1) {
    pools.emplace_back(m.alpha2, C2, eps, g);
    D += pools.back().drift();
    V += pools.back().small_variance();
    wsum += g;
  }
  double dS = std::pow(W.last, m.alpha2) / (C2 * std::tgamma(1 - m.alpha2) * wsum);
  double sTotal = 0;
  std::vector<AnnealedPool::Atom> atoms;
  while (!W.done()) {
    atoms.clear();
    for (auto& pl : pools) pl.expose(dS, rng, atoms);
    sort_atoms(atoms);
    double prev = 0;
    for (const auto& a : atoms) {
      W.drift(D * (a.offset - prev));
      W.atom(a.mass);
      prev = a.offset;
      if (W.done()) break;
    }
    if (!W.done()) W.drift(D * (dS - prev));
    sTotal += dS;
    dS *= 2;
  }
  // every row carries infinitely many small states, so consecutive atoms never share a level-1 run
  W.n1 = W.n2;
  return {W.n1, W.n2, std::sqrt(sTotal * V) / (thetaMin * W.tw)};
}

Outcome run_at(const AnnealedModel& m, Windows W, double thetaMin, Rng& rng) {
  const double C1 = std::pow(m.psi, m.alpha1);
  const double C2 = std::pow(1 - m.p, -m.alpha2);
  const double uScale = std::pow(W.last, m.alpha2) / (C2 * std::tgamma(1 - m.alpha2));
  AnnealedPool level1(m.alpha1, C1, m.epsRel1 * uScale);
  const double eps2 = m.epsRel2 * W.tw;
  std::vector<AnnealedPool> rows;
  double dS = std::pow(uScale, m.alpha1) / (C1 * std::tgamma(1 - m.alpha1));
  double sTotal = 0, uTotal = 0;
  std::vector<AnnealedPool::Atom> a1, a2;
  double d2 = AnnealedPool(m.alpha2, C2, eps2).drift();
  double v2 = AnnealedPool(m.alpha2, C2, eps2).small_variance();
  while (!W.done()) {
    a1.clear();
    level1.expose(dS, rng, a1);
    sort_atoms(a1);
    for (const auto& a : a1) {
      while (rows.size() <= a.id) rows.emplace_back(m.alpha2, C2, eps2);
      const double gStart = W.G;
      double remaining = a.mass;
      while (remaining > 0 && !W.done()) {
        const double du = std::min(remaining, uScale);
        a2.clear();
        rows[a.id].expose(du, rng, a2);
        sort_atoms(a2);
        double prev = 0;
        for (const auto& b : a2) {
          W.drift(d2 * (b.offset - prev));
          W.atom(b.mass);
          prev = b.offset;
          if (W.done()) break;
        }
        if (!W.done()) W.drift(d2 * (du - prev));
        uTotal += du;
        remaining -= du;
      }
      W.span(gStart, W.G);
      if (W.done()) break;
    }
    sTotal += dS;
    dS *= 2;
  }
  const double missingU = sTotal * level1.drift();
  const double bias = std::sqrt(uTotal * v2) / (thetaMin * W.tw) + missingU / std::max(uTotal, 1e-300);
  return {W.n1, W.n2, bias};
}

Outcome run_annealed(const AnnealedModel& m, const Windows& W, double thetaMin, Rng& rng) {
  switch (m.regime) {
    case Regime::AboveFT: return run_above(m, W, thetaMin, rng);
    case Regime::AtFT: return run_at(m, W, thetaMin, rng);
    case Regime::BelowFT: {
      auto o = run_uniform(m.alpha1, row_sum_moment(m.alpha1, m.alpha2, m.p), m.epsRel1, W, thetaMin, rng);
      std::fill(o.n2.begin(), o.n2.end(), 0);
      return o;
    }
    case Regime::Intermediate: {
      auto o = run_uniform(m.alpha1, std::pow(m.p, -m.alpha1), m.epsRel1, W, thetaMin, rng);
      std::fill(o.n2.begin(), o.n2.end(), 0);
      return o;
    }
  }
  throw std::invalid_argument("unknown regime");
}

void append_clock(ClockPath& into, const ClockPath& from, double sOffset) {
  for (std::size_t k = 0; k < from.size(); ++k) into.push(sOffset + from.s[k], from.state[k], from.mass[k]);
  into.horizon = sOffset + from.horizon;
}

Outcome run_quenched(const QuenchedModel& qm, Windows W, double thetaMin, Rng& rng) {
  const auto& sp = qm.specs;
  Outcome o;
  double tail = 0, sTotal = 0;
  auto straddle = [&](const ClockPath& c, std::vector<char>& flags) {
    for (std::size_t i = 0; i < W.ends.size(); ++i) flags[i] = c.straddles(W.tw, W.ends[i] - W.tw);
  };
  o.n1.assign(W.ends.size(), 0);
  o.n2.assign(W.ends.size(), 0);
  if (sp.regime == Regime::AtFT) {
    double rate = 0;
    for (std::size_t x = 0; x < sp.k2.f.size(); ++x)
      rate += sp.k2.f[x] * std::accumulate(sp.k2.fprime[x].begin(), sp.k2.fprime[x].end(), 0.0);
    const double chunk = 2 * W.last / rate;
    ClockPath g1, gp;
    double uTotal = 0;
    while (gp.total() < W.last) {
      auto r = simulate_k2(sp.k2, chunk, rng);
      append_clock(gp, r.gammaPrime, uTotal);
      append_clock(g1, r.gamma1, sTotal);
      uTotal += r.gammaDot.total();
      sTotal += chunk;
    }
    straddle(g1, o.n1);
    straddle(gp, o.n2);
    tail = sp.k2.tailMass;
  } else if (sp.regime == Regime::BelowFT) {
    KSpec k{sp.pr.f3, std::vector<double>(sp.pr.f3.size(), 1.0), {}, 0};
    const double rate = std::accumulate(k.f.begin(), k.f.end(), 0.0);
    ClockPath c;
    while (c.total() < W.last) {
      auto r = simulate_k(k, 2 * W.last / rate, rng);
      append_clock(c, r.clock, sTotal);
      sTotal += 2 * W.last / rate;
    }
    straddle(c, o.n1);
  } else {
    double rate = 0;
    for (std::size_t x = 0; x < sp.k.size(); ++x) rate += sp.k.f[x] * sp.k.w[x];
    ClockPath c;
    while (c.total() < W.last) {
      auto r = simulate_k(sp.k, 2 * W.last / rate, rng);
      append_clock(c, r.clock, sTotal);
      sTotal += 2 * W.last / rate;
    }
    straddle(c, o.n2);
    o.n1 = o.n2;
    if (sp.regime == Regime::Intermediate) std::fill(o.n2.begin(), o.n2.end(), 0);
    tail = sp.k.tailMass;
  }
  o.bias = tail * sTotal / (thetaMin * W.tw);
  return o;
}

double model_p(const LimitModel& m) {
  return std::visit([](const auto& x) { return x.p; }, m);
}

Regime model_regime(const LimitModel& m) {
  if (auto q = std::get_if<QuenchedModel>(&m)) return q->specs.regime;
  return std::get<AnnealedModel>(m).regime;
}

}  // namespace

std::vector<PiEstimate> estimate_pi_grid(const LimitModel& model, double tw, const std::vector<double>& thetas,
                                         std::uint64_t replicas, std::uint64_t seed) {
  if (!(tw > 0)) throw std::invalid_argument("tw must be positive");
  if (thetas.empty()) throw std::invalid_argument("empty theta grid");
  for (double th : thetas)
    if (!(th > 0)) throw std::invalid_argument("theta must be positive");
  if (replicas < 100) throw std::invalid_argument("need at least 100 replicas");
  if (auto a = std::get_if<AnnealedModel>(&model); a && a->regime == Regime::AboveFT && a->gamma1.empty())
    throw std::invalid_argument("AboveFT annealed model needs quenched gamma1 weights");
  const double thetaMin = *std::min_element(thetas.begin(), thetas.end());
  const Windows proto(tw, thetas);
  std::vector<Outcome> out(replicas);
  tbb::parallel_for(std::uint64_t{0}, replicas, [&](std::uint64_t r) {
    Rng rng = derive_stream(seed, "aging", r);
    if (auto q = std::get_if<QuenchedModel>(&model))
      out[r] = run_quenched(*q, proto, thetaMin, rng);
    else
      out[r] = run_annealed(std::get<AnnealedModel>(model), proto, thetaMin, rng);
  });

  const double p = model_p(model);
  const Regime regime = model_regime(model);
  std::vector<PiEstimate> res;
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    PiEstimate e;
    e.theta = thetas[i];
    e.replicas = replicas;
    double sum = 0, sum2 = 0, bias = 0;
    for (const auto& o : out) {
      const bool a = o.n1[i], b = o.n2[i];
      double y;
      if (regime == Regime::Intermediate) {
        y = a;
      } else {
        y = a && b ? 1.0 : a ? p : b ? 1 - p : 0.0;
      }
      e.both += a && b;
      e.only1 += a && !b;
      e.only2 += b && !a;
      sum += y;
      sum2 += y * y;
      bias += o.bias;
      const bool bad = (regime == Regime::AboveFT && a != b) || (regime == Regime::AtFT && b && !a) ||
                       ((regime == Regime::BelowFT || regime == Regime::Intermediate) && b);
      e.violations += bad;
    }
    const double n = static_cast<double>(replicas);
    e.both /= n;
    e.only1 /= n;
    e.only2 /= n;
    e.value = sum / n;
    e.stdError = std::sqrt(std::max(sum2 / n - e.value * e.value, 0.0) / (n - 1));
    e.biasBound = bias / n;
    e.flagged = e.biasBound > e.stdError;
    res.push_back(e);
  }
  return res;
}

PiEstimate estimate_pi(const LimitModel& model, const AgingQuery& q, std::uint64_t seed) {
  return estimate_pi_grid(model, q.tw, {q.theta}, q.replicas, seed).front();
}

AgingCurve aging_curve(const LimitModel& model, double alpha1, double alpha2, double p,
                       const std::vector<double>& thetas, const std::vector<double>& tws, std::uint64_t replicas,
                       std::uint64_t seed) {
  for (std::size_t i = 1; i < tws.size(); ++i)
    if (!(tws[i] < tws[i - 1])) throw std::invalid_argument("tw sequence must decrease");
  const Regime regime = model_regime(model);
  AgingCurve c;
  for (std::size_t k = 0; k < tws.size(); ++k) {
    const auto est = estimate_pi_grid(model, tws[k], thetas, replicas, stream_key(seed, "aging-tw", k));
    for (const auto& e : est) {
      const double pred = aging_prediction(regime, e.theta, alpha1, alpha2, p);
      c.rows.push_back({regime, tws[k], e.theta, e.value, e.stdError, pred, std::abs(e.value - pred), e.flagged});
    }
  }
  const std::size_t m = thetas.size();
  for (std::size_t k = 1; k < tws.size(); ++k)
    for (std::size_t i = 0; i < m; ++i) {
      const auto& a = c.rows[(k - 1) * m + i];
      const auto& b = c.rows[k * m + i];
      if (b.gap > a.gap + 2 * std::hypot(a.stdError, b.stdError)) c.gapsShrink = false;
    }
  return c;
}

void write_aging_csv(const AgingCurve& c, std::ostream& os) {
  os << "# schema=1\nregime,tw,theta,pi_hat,stderr,prediction,gap,bias_flag\n" << std::setprecision(10);
  for (const auto& r : c.rows)
    os << regime_name(r.regime) << ',' << r.tw << ',' << r.theta << ',' << r.pi << ',' << r.stdError << ','
       << r.prediction << ',' << r.gap << ',' << (r.flagged ? 1 : 0) << '\n';
}

HillFit hill_estimate(std::vector<double> x, double fraction) {
  HillFit h;
  const auto n = x.size();
  h.k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
  if (h.k < 10 || h.k >= n) {
    h.degenerate = true;
    return h;
  }
  std::nth_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(h.k), x.end(), std::greater<>());
  const double ref = x[h.k];
  if (!(ref > 0)) {
    h.degenerate = true;
    return h;
  }
  double s = 0;
  for (std::size_t i = 0; i < h.k; ++i) s += std::log(x[i] / ref);
  if (!(s > 0)) {
    h.degenerate = true;
    return h;
  }
  h.alpha = static_cast<double>(h.k) / s;
  return h;
}

const char* scaling_clock_name(ScalingClock c) {
  switch (c) {
    case ScalingClock::GammaPrime: return "gamma-prime";
    case ScalingClock::Gamma1: return "gamma1";
    case ScalingClock::WeightedK: return "weighted-k";
    case ScalingClock::Synthetic: return "synthetic";
  }
  return "?";
}

namespace {

double target_index(const ScalingQuery& q) {
  switch (q.clock) {
    case ScalingClock::GammaPrime:
    case ScalingClock::WeightedK: return q.alpha2;
    case ScalingClock::Gamma1: return q.alpha1 * q.alpha2;
    case ScalingClock::Synthetic: return q.syntheticAlpha;
  }
  return 0;
}

double one_clock_sample(const ScalingQuery& q, double eps, double r, Rng& rng) {
  const double C2 = std::pow(1 - q.p, -q.alpha2);
  switch (q.clock) {
    case ScalingClock::Synthetic:
      return std::pow(r, 1 / q.syntheticAlpha) * sample_positive_stable(q.syntheticAlpha, rng);
    case ScalingClock::WeightedK: {
      const double s = std::pow(eps, q.alpha2) * r;
      double total = 0;
      for (double g : q.gamma1) {
        const double cut = q.epsRel * std::pow(std::min(g * s, 1.0) * C2 * std::tgamma(1 - q.alpha2), 1 / q.alpha2);
        AnnealedPool row(q.alpha2, C2, cut, g);
        total += row.expose_total(s, rng);
      }
      return total / eps;
    }
    case ScalingClock::GammaPrime: {
      const double U = std::pow(eps, q.alpha2) * r;
      const double C1 = std::pow(q.psi, q.alpha1);
      const double eps2 = q.epsRel * std::pow(U * C2 * std::tgamma(1 - q.alpha2), 1 / q.alpha2);
      AnnealedPool level1(q.alpha1, C1, q.eps1);
      std::vector<AnnealedPool> rows;
      std::vector<AnnealedPool::Atom> a1;
      double dS = std::pow(U, q.alpha1) / (C1 * std::tgamma(1 - q.alpha1));
      double covered = 0, total = 0;
      while (covered < U) {
        a1.clear();
        level1.expose(dS, rng, a1);
        sort_atoms(a1);
        for (const auto& a : a1) {
          while (rows.size() <= a.id) rows.emplace_back(q.alpha2, C2, eps2);
          const double take = std::min(a.mass, U - covered);
          total += rows[a.id].expose_total(take, rng);
          covered += take;
          if (covered >= U) break;
        }
        dS *= 2;
      }
      return total / eps;
    }
    case ScalingClock::Gamma1: {
      const double s = std::pow(eps, q.alpha1 * q.alpha2) * r;
      const double C1 = std::pow(q.psi, q.alpha1);
      const double eps1 = std::min(q.eps1, std::pow(q.level1States / (C1 * s), -1 / q.alpha1));
      AnnealedPool level1(q.alpha1, C1, eps1);
      std::vector<AnnealedPool::Atom> a1;
      level1.expose(s, rng, a1);
      std::vector<double> exposure(level1.fired(), 0.0);
      for (const auto& a : a1) exposure[a.id] += a.mass;
      const double Lmax = exposure.empty() ? 0.0 : *std::max_element(exposure.begin(), exposure.end());
      if (Lmax <= 0) return 0.0;
      const double cut = q.epsRel * std::pow(std::min(Lmax, 1.0) * C2 * std::tgamma(1 - q.alpha2), 1 / q.alpha2);
      double total = 0;
      for (double L : exposure) {
        AnnealedPool row(q.alpha2, C2, cut);
        total += row.expose_total(L, rng);
      }
      return total / eps;
    }
  }
  return 0;
}

}  // namespace

std::vector<double> clock_samples(const ScalingQuery& q, double epsilon, double r, std::uint64_t replicas,
                                  std::uint64_t seed) {
  if (!(epsilon > 0 && epsilon < 1) || !(r > 0)) throw std::invalid_argument("scaling needs 0 < eps < 1, r > 0");
  if (q.clock == ScalingClock::WeightedK && q.gamma1.empty())
    throw std::invalid_argument("weighted-K clock needs gamma1 weights");
  std::vector<double> x(replicas);
  tbb::parallel_for(std::uint64_t{0}, replicas, [&](std::uint64_t i) {
    Rng rng = derive_stream(seed, "scaling", i);
    x[i] = one_clock_sample(q, epsilon, r, rng);
  });
  return x;
}

std::vector<ScalingRow> clock_smalltime_scaling(const ScalingQuery& q, const std::vector<double>& epsilons,
                                                const std::vector<double>& rs, std::uint64_t replicas,
                                                std::uint64_t seed) {
  for (std::size_t i = 1; i < epsilons.size(); ++i)
    if (!(epsilons[i] < epsilons[i - 1])) throw std::invalid_argument("epsilon grid must decrease");
  std::vector<ScalingRow> rows;
  std::uint64_t cell = 0;
  for (double eps : epsilons)
    for (double r : rs) {
      auto x = clock_samples(q, eps, r, replicas, stream_key(seed, "scaling-cell", cell++));
      ScalingRow row{q.clock, eps, r, target_index(q), {}, hill_estimate(x)};
      std::sort(x.begin(), x.end());
      for (double lv : kScalingLevels) {
        const auto k = static_cast<std::size_t>(lv * static_cast<double>(x.size() - 1));
        row.quantiles.push_back(x[k]);
      }
      rows.push_back(std::move(row));
    }
  return rows;
}

void write_scaling_csv(const std::vector<ScalingRow>& rows, std::ostream& os) {
  os << "# schema=1 hill_fraction=" << kHillFraction << "\nclock,epsilon,r";
  for (double lv : kScalingLevels) os << ",q" << lv;
  os << ",fitted_index,target_index,k,degenerate\n" << std::setprecision(10);
  for (const auto& r : rows) {
    os << scaling_clock_name(r.clock) << ',' << r.epsilon << ',' << r.r;
    for (double v : r.quantiles) os << ',' << v;
    os << ',' << r.fit.alpha << ',' << r.target << ',' << r.fit.k << ',' << (r.fit.degenerate ? 1 : 0) << '\n';
  }
}

double beta_intermediate(double p, double a) { return 2 * std::sqrt(a * p) * beta_star() / (1 - a); }

void check_intermediate_beta(double p, double a, double beta) {
  const auto cb = critical_betas(p, a);
  const double bi = beta_intermediate(p, a);
  if (!(beta > cb.beta1cr))
    throw std::invalid_argument("beta must exceed beta1cr = " + std::to_string(cb.beta1cr));
  if (!(beta < cb.beta2cr))
    throw std::invalid_argument("beta must stay below beta2cr = " + std::to_string(cb.beta2cr));
  if (!(beta < bi)) throw std::invalid_argument("beta must stay below beta_int = " + std::to_string(bi));
}

std::vector<LlnRow> intermediate_lln(const GremEnvironment& env, const ModelParams& P, const std::vector<double>& ts,
                                     std::uint64_t replicas, std::uint64_t seed) {
  check_intermediate_beta(P.p, P.a, P.beta);
  if (replicas < 2) throw std::invalid_argument("need at least 2 replicas");
  const auto sw = scaled_weights(env, P);
  std::vector<LlnRow> rows;
  for (std::size_t ti = 0; ti < ts.size(); ++ti) {
    const double t = ts[ti];
    if (!(t > 0)) throw std::invalid_argument("t must be positive");
    const auto steps = static_cast<std::uint64_t>(std::floor(t / sw.c1N));
    std::vector<double> v(replicas);
    tbb::parallel_for(std::uint64_t{0}, replicas, [&](std::uint64_t r) {
      Rng rng = derive_stream(seed, "lln", ti * replicas + r);
      const std::uint64_t w1 = rng.below(std::uint64_t{1} << P.N1);
      std::uint64_t w2 = rng.below(std::uint64_t{1} << P.N2);
      double s = 0;
      for (std::uint64_t j = 0; j <= steps; ++j) {
        const double x = env.xi2[(w1 << P.N2) | w2];
        s += std::exp(sw.logCTildeN - sw.b2 * x) * rng.exponential();
        w2 ^= std::uint64_t{1} << rng.below(static_cast<std::uint64_t>(P.N2));
      }
      v[r] = s;
    });
    double m = 0, m2 = 0;
    for (double x : v) {
      m += x;
      m2 += x * x;
    }
    const double n = static_cast<double>(replicas);
    m /= n;
    const double se = std::sqrt(std::max(m2 / n - m * m, 0.0) / (n - 1));
    rows.push_back({t, m, se, (m - t) / t});
  }
  return rows;
}

}  // namespace grem
