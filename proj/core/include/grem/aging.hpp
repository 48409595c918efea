#pragma once
#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "grem/environment.hpp"
#include "grem/kprocess.hpp"
#include "grem/rng.hpp"

namespace grem {

// Positive alpha-stable variate with E exp(-l S) = exp(-l^alpha) (Kanter / Chambers-Mallows-Stuck).
double sample_positive_stable(double alpha, Rng& rng);

// E[M^alpha1] for M = sum of a PPP(alpha2) row divided by (1 - p)
double row_sum_moment(double alpha1, double alpha2, double p);

// States of a Poisson point process with intensity C alpha x^{-1-alpha} dx on [eps, inf),
// each firing at `rate` per unit exposure, masses f * Exp(1). Only fired states are stored.
class AnnealedPool {
 public:
  struct Atom {
    double offset;
    double mass;
    std::uint32_t id;
  };

  AnnealedPool(double alpha, double C, double eps, double rate = 1.0);

  void expose(double dE, Rng& rng, std::vector<Atom>& out);
  double expose_total(double dE, Rng& rng);

  double exposure() const { return exposure_; }
  // mean and variance of the mass dropped below eps, per unit exposure
  double drift() const;
  double small_variance() const;
  std::size_t fired() const { return f_.size(); }

 private:
  std::uint32_t fire_new(double dE, Rng& rng, double& first);

  double alpha_, C_, eps_, rate_;
  double exposure_ = 0;
  std::vector<double> f_;
};

// Annealed limit models: the cascade is redrawn per replica (AboveFT keeps gamma1 quenched).
struct AnnealedModel {
  Regime regime = Regime::AboveFT;
  double alpha1 = 2.0 / 9, alpha2 = 2.0 / 3, p = 0.1;
  double psi = 1.0;
  std::vector<double> gamma1;  // AboveFT level-1 weights
  double epsRel1 = 1e-9;       // cutoff for alpha1 pools, relative to the pool's time unit
  double epsRel2 = 1e-5;       // cutoff for alpha2 pools, relative to tw
};

// Finite truncation of one of the limit constructions.
struct QuenchedModel {
  LimitSpecs specs;
  double p = 0.1;
};

using LimitModel = std::variant<QuenchedModel, AnnealedModel>;

struct AgingQuery {
  double tw = 1e-2;
  double theta = 1.0;
  std::uint64_t replicas = 10000;
};

struct PiEstimate {
  double theta = 0;
  double value = 0;
  double stdError = 0;
  double both = 0, only1 = 0, only2 = 0;  // P(N1 n N2), P(N1 \ N2), P(N2 \ N1)
  double biasBound = 0;
  bool flagged = false;
  std::uint64_t replicas = 0;
  std::uint64_t violations = 0;  // replicas breaking the regime's set relation
};

std::vector<PiEstimate> estimate_pi_grid(const LimitModel& model, double tw, const std::vector<double>& thetas,
                                         std::uint64_t replicas, std::uint64_t seed);
PiEstimate estimate_pi(const LimitModel& model, const AgingQuery& q, std::uint64_t seed);

struct AgingRow {
  Regime regime;
  double tw, theta, pi, stdError, prediction, gap;
  bool flagged;
};

struct AgingCurve {
  std::vector<AgingRow> rows;
  bool gapsShrink = true;  // within 2 combined stderr
};

AgingCurve aging_curve(const LimitModel& model, double alpha1, double alpha2, double p,
                       const std::vector<double>& thetas, const std::vector<double>& tws, std::uint64_t replicas,
                       std::uint64_t seed);
void write_aging_csv(const AgingCurve& c, std::ostream& os);

struct HillFit {
  double alpha = 0;
  std::size_t k = 0;
  bool degenerate = false;
};
inline constexpr double kHillFraction = 0.05;
HillFit hill_estimate(std::vector<double> samples, double fraction = kHillFraction);

enum class ScalingClock { GammaPrime, Gamma1, WeightedK, Synthetic };
const char* scaling_clock_name(ScalingClock c);

struct ScalingQuery {
  ScalingClock clock = ScalingClock::GammaPrime;
  double alpha1 = 2.0 / 9, alpha2 = 2.0 / 3, p = 0.1, psi = 1.0;
  std::vector<double> gamma1;  // WeightedK
  double syntheticAlpha = 0.5;
  double epsRel = 1e-4;        // level-2 cutoff relative to the clock's natural scale
  double eps1 = 1e-12;         // level-1 cutoff (u-time), lowered to keep ~level1States fired states
  double level1States = 2000;
};

struct ScalingRow {
  ScalingClock clock;
  double epsilon, r;
  double target;
  std::vector<double> quantiles;  // at kScalingLevels
  HillFit fit;
};
inline const std::vector<double> kScalingLevels{0.5, 0.9, 0.95, 0.99};

std::vector<double> clock_samples(const ScalingQuery& q, double epsilon, double r, std::uint64_t replicas,
                                  std::uint64_t seed);
std::vector<ScalingRow> clock_smalltime_scaling(const ScalingQuery& q, const std::vector<double>& epsilons,
                                                const std::vector<double>& rs, std::uint64_t replicas,
                                                std::uint64_t seed);
void write_scaling_csv(const std::vector<ScalingRow>& rows, std::ostream& os);

struct LlnRow {
  double t;
  double mean;
  double stdError;
  double relGap;
};

double beta_intermediate(double p, double a);  // 2 sqrt(ap) beta* / (1 - a)
void check_intermediate_beta(double p, double a, double beta);
std::vector<LlnRow> intermediate_lln(const GremEnvironment& env, const ModelParams& params,
                                     const std::vector<double>& ts, std::uint64_t replicas, std::uint64_t seed);

}  // namespace grem
