#pragma once
#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "grem/environment.hpp"
#include "grem/rng.hpp"

namespace grem {

struct KSpec {
  std::vector<double> f;
  std::vector<double> w;
  std::vector<std::pair<int, int>> label;  // (x1, x2); x2 = -1 for one-level states
  double tailMass = 0;                     // sum_{x > K} w f of the generating cascade (conditional mean)

  std::size_t size() const { return f.size(); }
};

struct K2Spec {
  std::vector<double> f;                    // level 1
  std::vector<std::vector<double>> fprime;  // [x1][y]
  double tailMass = 0;
};

struct ProductSpec {
  std::vector<double> f3;
  std::vector<std::vector<double>> gamma2Rows;
};

struct LimitSpecs {
  Regime regime;
  KSpec k;         // AboveFT, Intermediate
  K2Spec k2;       // AtFT
  ProductSpec pr;  // BelowFT
};

LimitSpecs build_limit_specs(const LimitCascade& cascade, double p, double psi, Regime regime);

// Pure-jump clock: atoms at event times s with positive masses.
struct ClockPath {
  std::vector<double> s;
  std::vector<int> state;
  std::vector<double> mass;
  std::vector<double> after;  // Gamma(s_k)
  double horizon = 0;
  std::size_t clamped = 0;

  std::size_t size() const { return s.size(); }
  double total() const { return after.empty() ? 0.0 : after.back(); }
  double before(std::size_t k) const { return k == 0 ? 0.0 : after[k - 1]; }
  double gamma(double t) const;        // Gamma(t), right-continuous
  double gamma_minus(double t) const;  // Gamma(t-)
  void push(double sk, int x, double m);
  // some atom with Gamma(s-) <= tw and Gamma(s) >= tw + t
  bool straddles(double tw, double t) const;
};

double clock_inverse(const ClockPath& clock, double t);

struct KPathEntry {
  double entry;
  int x1, x2;  // -1 for the cemetery
  double duration;
};
using KPath = std::vector<KPathEntry>;

struct KResult {
  KPath path;
  ClockPath clock;
};

struct K2Result {
  KPath path;
  ClockPath gammaDot;    // level-1 uniform clock, s-time
  ClockPath gammaPrime;  // level-2 clock, u-time; state = x1 * K2 + y
  ClockPath gamma1;      // s -> Gamma'(GammaDot(s)), atoms at level-1 event times
};

inline constexpr double kMassFloor = 1e-300;

KResult simulate_k(const KSpec& spec, double sHorizon, Rng& rng);
K2Result simulate_k2(const K2Spec& spec, double sHorizon, Rng& rng);

struct ProductSample {
  int x1, x2;
};
// X1 ~ K(f3, 1); X2 drawn afresh from the normalized gamma2 row at every query
std::vector<ProductSample> simulate_product_limit(const ProductSpec& spec, const std::vector<double>& queryTimes,
                                                  Rng& rng, ClockPath* clockOut = nullptr);

// occupation of (x1, x2) cells over the whole path, normalized
std::vector<double> occupation(const KPath& path, int K1, int K2);

struct RestrictedTransitions {
  int M1 = 0, M2 = 0;
  std::vector<std::uint64_t> counts;  // (M1 M2)^2 row-major
  std::vector<std::uint64_t> rowTotals;
  std::uint64_t jumps = 0;

  double p(int i, int j) const;
  double stderr_of(int i, int j) const;
};

RestrictedTransitions restricted_transitions(const KPath& path, int M1, int M2, std::uint64_t minJumps = 10000);

void write_path_csv(const KPath& path, std::ostream& os);
void write_clock_csv(const ClockPath& clock, std::ostream& os);

}  // namespace grem
