#include "grem/kprocess.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <queue>
#include <stdexcept>
#include <string>

namespace grem {

LimitSpecs build_limit_specs(const LimitCascade& c, double p, double psi, Regime regime) {
  if (!(p > 0 && p < 1)) throw std::invalid_argument("p must lie in (0,1)");
  if (c.K1 < 1 || c.K2 < 1) throw std::invalid_argument("empty cascade");
  LimitSpecs out{regime, {}, {}, {}};
  const double q = 1.0 - p;
  switch (regime) {
    case Regime::AboveFT:
      for (int x1 = 0; x1 < c.K1; ++x1) {
        for (int x2 = 0; x2 < c.K2; ++x2) {
          out.k.f.push_back(c.gamma2Rows[x1][x2] / q);
          out.k.w.push_back(c.gamma1[x1]);
          out.k.label.emplace_back(x1, x2);
        }
        out.k.tailMass += c.gamma1[x1] * c.tail_mass2(x1) / q;
      }
      break;
    case Regime::AtFT:
      if (!(psi > 0) || !std::isfinite(psi)) throw std::invalid_argument("AtFT needs psi in (0,inf)");
      for (int x1 = 0; x1 < c.K1; ++x1) {
        out.k2.f.push_back(psi * c.gamma1[x1]);
        std::vector<double> row(c.K2);
        for (int y = 0; y < c.K2; ++y) row[y] = c.gamma2Rows[x1][y] / q;
        out.k2.fprime.push_back(std::move(row));
      }
      out.k2.tailMass = psi * c.tail_mass1();
      break;
    case Regime::BelowFT:
      for (int x1 = 0; x1 < c.K1; ++x1) {
        double rowSum = 0;
        for (double g : c.gamma2Rows[x1]) rowSum += g;
        out.pr.f3.push_back(c.gamma1[x1] * rowSum / q);
        out.pr.gamma2Rows.push_back(c.gamma2Rows[x1]);
      }
      break;
    case Regime::Intermediate:
      for (int x1 = 0; x1 < c.K1; ++x1) {
        out.k.f.push_back(c.gamma1[x1] / p);
        out.k.w.push_back(1.0);
        out.k.label.emplace_back(x1, -1);
      }
      out.k.tailMass = c.tail_mass1() / p;
      break;
  }
  return out;
}

double ClockPath::gamma(double t) const {
  auto it = std::upper_bound(s.begin(), s.end(), t);
  const auto k = static_cast<std::size_t>(it - s.begin());
  return k == 0 ? 0.0 : after[k - 1];
}

double ClockPath::gamma_minus(double t) const {
  auto it = std::lower_bound(s.begin(), s.end(), t);
  const auto k = static_cast<std::size_t>(it - s.begin());
  return k == 0 ? 0.0 : after[k - 1];
}

void ClockPath::push(double sk, int x, double m) {
  if (m < kMassFloor) {
    m = kMassFloor;
    ++clamped;
  }
  s.push_back(sk);
  state.push_back(x);
  mass.push_back(m);
  after.push_back(total() + m);
}

bool ClockPath::straddles(double tw, double t) const {
  auto it = std::upper_bound(after.begin(), after.end(), tw);
  if (it == after.end()) return false;
  const auto k = static_cast<std::size_t>(it - after.begin());
  return before(k) <= tw && after[k] >= tw + t;
}

double clock_inverse(const ClockPath& clock, double t) {
  if (t < 0) throw std::invalid_argument("clock_inverse: negative time");
  auto it = std::upper_bound(clock.after.begin(), clock.after.end(), t);
  if (it == clock.after.end()) throw std::out_of_range("clock_inverse: time beyond simulated horizon");
  return clock.s[static_cast<std::size_t>(it - clock.after.begin())];
}

namespace {

struct Event {
  double t;
  int x;
  bool operator>(const Event& o) const { return t > o.t || (t == o.t && x > o.x); }
};

using EventQueue = std::priority_queue<Event, std::vector<Event>, std::greater<>>;

void check_weights(const std::vector<double>& v, const char* what) {
  for (double x : v)
    if (!(x >= 0) || !std::isfinite(x)) throw std::invalid_argument(std::string("non-finite or negative ") + what);
}

template <class Emit>
void run_streams(const std::vector<double>& rate, double horizon, Rng& rng, Emit emit) {
  EventQueue q;
  for (int x = 0; x < static_cast<int>(rate.size()); ++x) {
    if (rate[x] <= 0) continue;
    const double t = rng.exponential() / rate[x];
    if (t <= horizon) q.push({t, x});
  }
  while (!q.empty()) {
    const Event e = q.top();
    q.pop();
    emit(e.t, e.x);
    const double nt = e.t + rng.exponential() / rate[e.x];
    if (nt <= horizon) q.push({nt, e.x});
  }
}

}  // namespace

KResult simulate_k(const KSpec& spec, double sHorizon, Rng& rng) {
  if (spec.f.size() != spec.w.size()) throw std::invalid_argument("KSpec f/w size mismatch");
  check_weights(spec.f, "f");
  check_weights(spec.w, "w");
  if (!(sHorizon > 0)) throw std::invalid_argument("horizon must be positive");
  KResult r;
  r.clock.horizon = sHorizon;
  run_streams(spec.w, sHorizon, rng, [&](double t, int x) {
    const double before = r.clock.total();
    r.clock.push(t, x, spec.f[x] * rng.exponential());
    const auto [x1, x2] = spec.label.empty() ? std::pair<int, int>{x, -1} : spec.label[x];
    r.path.push_back({before, x1, x2, r.clock.mass.back()});
  });
  return r;
}

K2Result simulate_k2(const K2Spec& spec, double sHorizon, Rng& rng) {
  const int K1 = static_cast<int>(spec.f.size());
  if (static_cast<int>(spec.fprime.size()) != K1) throw std::invalid_argument("K2Spec f/f' size mismatch");
  check_weights(spec.f, "f");
  const int K2 = K1 ? static_cast<int>(spec.fprime[0].size()) : 0;
  for (const auto& row : spec.fprime) {
    if (static_cast<int>(row.size()) != K2) throw std::invalid_argument("ragged f'");
    check_weights(row, "f'");
  }
  K2Result r;
  r.gammaDot.horizon = r.gamma1.horizon = sHorizon;
  const std::vector<double> ones(K1, 1.0);
  std::vector<std::pair<double, int>> level2;
  run_streams(ones, sHorizon, rng, [&](double s, int x1) {
    const double u0 = r.gammaDot.total();
    r.gammaDot.push(s, x1, spec.f[x1] * rng.exponential());
    const double L = r.gammaDot.mass.back();
    level2.clear();
    for (int y = 0; y < K2; ++y) {
      const auto n = rng.poisson(L);
      for (std::uint64_t j = 0; j < n; ++j) level2.emplace_back(u0 + L * rng.uniform(), y);
    }
    std::sort(level2.begin(), level2.end());
    const double g0 = r.gammaPrime.total();
    for (const auto& [u, y] : level2) {
      const double before = r.gammaPrime.total();
      r.gammaPrime.push(u, x1 * K2 + y, spec.fprime[x1][y] * rng.exponential());
      r.path.push_back({before, x1, y, r.gammaPrime.mass.back()});
    }
    const double m = r.gammaPrime.total() - g0;
    if (m > 0) r.gamma1.push(s, x1, m);
  });
  r.gammaPrime.horizon = r.gammaDot.total();
  return r;
}

std::vector<ProductSample> simulate_product_limit(const ProductSpec& spec, const std::vector<double>& queryTimes,
                                                  Rng& rng, ClockPath* clockOut) {
  const int K1 = static_cast<int>(spec.f3.size());
  if (static_cast<int>(spec.gamma2Rows.size()) != K1) throw std::invalid_argument("ProductSpec size mismatch");
  check_weights(spec.f3, "f3");
  if (!std::is_sorted(queryTimes.begin(), queryTimes.end())) throw std::invalid_argument("query times must be sorted");
  std::vector<std::discrete_distribution<int>> rows;
  for (const auto& row : spec.gamma2Rows) rows.emplace_back(row.begin(), row.end());

  const double tmax = queryTimes.empty() ? 0.0 : queryTimes.back();
  double fsum = 0;
  for (double f : spec.f3) fsum += f;
  if (!(fsum > 0)) throw std::invalid_argument("f3 vanishes");

  // extend in chunks of s-time until the clock passes the last query
  ClockPath clock;
  double s0 = 0, chunk = std::max(1.0, 2.0 * tmax / fsum);
  const std::vector<double> ones(K1, 1.0);
  while (clock.total() <= tmax) {
    std::vector<std::pair<double, int>> ev;
    run_streams(ones, chunk, rng, [&](double t, int x) { ev.emplace_back(s0 + t, x); });
    for (const auto& [t, x] : ev) clock.push(t, x, spec.f3[x] * rng.exponential());
    s0 += chunk;
    clock.horizon = s0;
  }
  std::vector<ProductSample> out;
  out.reserve(queryTimes.size());
  std::size_t k = 0;
  for (double t : queryTimes) {
    while (clock.after[k] <= t) ++k;
    const int x1 = clock.state[k];
    out.push_back({x1, rows[x1](rng)});
  }
  if (clockOut) *clockOut = std::move(clock);
  return out;
}

std::vector<double> occupation(const KPath& path, int K1, int K2) {
  std::vector<double> occ(static_cast<std::size_t>(K1) * std::max(K2, 1), 0.0);
  double tot = 0;
  for (const auto& e : path) {
    if (e.x1 < 0) continue;
    const int x2 = std::max(e.x2, 0);
    occ[static_cast<std::size_t>(e.x1) * std::max(K2, 1) + x2] += e.duration;
    tot += e.duration;
  }
  if (tot > 0)
    for (double& v : occ) v /= tot;
  return occ;
}

double RestrictedTransitions::p(int i, int j) const {
  const int n = M1 * M2;
  const auto tot = rowTotals[i];
  return tot ? static_cast<double>(counts[static_cast<std::size_t>(i) * n + j]) / static_cast<double>(tot) : 0.0;
}

double RestrictedTransitions::stderr_of(int i, int j) const {
  const auto tot = rowTotals[i];
  if (!tot) return 0.0;
  const double q = p(i, j);
  return std::sqrt(std::max(q * (1 - q), 1.0 / static_cast<double>(tot)) / static_cast<double>(tot));
}

RestrictedTransitions restricted_transitions(const KPath& path, int M1, int M2, std::uint64_t minJumps) {
  if (M1 < 1 || M2 < 1) throw std::invalid_argument("restricted block must be nonempty");
  RestrictedTransitions r;
  r.M1 = M1;
  r.M2 = M2;
  const int n = M1 * M2;
  r.counts.assign(static_cast<std::size_t>(n) * n, 0);
  r.rowTotals.assign(n, 0);
  int prev = -1;
  for (const auto& e : path) {
    if (e.x1 < 0 || e.x1 >= M1 || e.x2 < 0 || e.x2 >= M2) continue;
    const int cur = e.x1 * M2 + e.x2;
    if (prev >= 0) {
      ++r.counts[static_cast<std::size_t>(prev) * n + cur];
      ++r.rowTotals[prev];
      ++r.jumps;
    }
    prev = cur;
  }
  if (r.jumps < minJumps)
    throw std::runtime_error("restricted path too short: " + std::to_string(r.jumps) + " jumps, need " +
                             std::to_string(minJumps));
  return r;
}

void write_path_csv(const KPath& path, std::ostream& os) {
  os << "# schema=1\nentry,x1,x2,duration\n" << std::setprecision(17);
  for (const auto& e : path) os << e.entry << ',' << e.x1 << ',' << e.x2 << ',' << e.duration << '\n';
}

void write_clock_csv(const ClockPath& clock, std::ostream& os) {
  os << "# schema=1\ns,state,mass,gamma\n" << std::setprecision(17);
  for (std::size_t k = 0; k < clock.size(); ++k)
    os << clock.s[k] << ',' << clock.state[k] << ',' << clock.mass[k] << ',' << clock.after[k] << '\n';
}

}  // namespace grem
