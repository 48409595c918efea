#pragma once
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "grem/environment.hpp"
#include "grem/rng.hpp"

namespace grem {

// Per-cylinder tables of the jump chain; all Boltzmann factors kept as logs.
class RhdChain {
 public:
  explicit RhdChain(const GremEnvironment& env);

  const GremEnvironment& env() const { return *env_; }
  const ModelParams& params() const { return env_->params; }

  // log r(w1) = log(N2/N1) + beta sqrt(aN) Xi1, q* = 1/(1+r)
  double log_r(std::uint32_t w1) const { return logR_[w1]; }
  double q_star(std::uint32_t w1) const { return q_[w1]; }
  double log_total_rate(SpinState s) const;
  std::uint64_t step(std::uint64_t idx, Rng& rng) const;
  double holding(std::uint64_t idx, Rng& rng) const;

 private:
  const GremEnvironment* env_;
  std::vector<double> logR_;
  std::vector<double> q_;
  double logN_;
};

double q_star(const GremEnvironment& env, const ModelParams& params, std::uint32_t w1);

struct JumpRates {
  double logLevel1;  // per neighbor
  double logLevel2;  // per neighbor
  double logTotal;
  double level1, level2, total;
};

JumpRates jump_rates(const GremEnvironment& env, const ModelParams& params, SpinState s);
SpinState jump_chain_step(const GremEnvironment& env, const ModelParams& params, SpinState s, Rng& rng);

// Bitmap over the 2^N states.
class StateSet {
 public:
  explicit StateSet(const ModelParams& P) : P_(P), bits_(std::size_t{1} << P.N, 0) {}
  void insert(SpinState s) { bits_[state_index(P_, s)] = 1; }
  void insert_index(std::uint64_t i) { bits_[i] = 1; }
  bool contains(SpinState s) const { return bits_[state_index(P_, s)] != 0; }
  bool contains_index(std::uint64_t i) const { return bits_[i] != 0; }
  std::size_t size() const;

 private:
  ModelParams P_;
  std::vector<std::uint8_t> bits_;
};

enum class TimeScale { None, C2, CBar, CTilde };

struct StopCondition {
  double horizon = -1;               // in rescaled time; < 0 disables
  const StateSet* hitting = nullptr;  // stop on entering this set
  std::uint64_t stepBudget = 1'000'000'000ULL;
  TimeScale scale = TimeScale::None;
};

struct Trajectory {
  std::vector<SpinState> states;
  std::vector<double> holding;  // rescaled
  double timeScale = 1;
  bool truncated = false;
  bool hit = false;
};

Trajectory simulate_rhd(const GremEnvironment& env, const ModelParams& params, SpinState start,
                        const StopCondition& stop, Rng& rng);

void write_trajectory_csv(const Trajectory& tr, const ModelParams& params, std::ostream& os);

struct GibbsMeasures {
  std::vector<double> G;
  std::vector<double> Gstar;
};

GibbsMeasures gibbs_measures(const GremEnvironment& env, const ModelParams& params, int cap = 20);

struct BalanceReport {
  double maxLogDefect = 0;  // detailed balance, log space
  double maxRowDefect = 0;  // |sum_j P(i,j) - 1|
  std::size_t edges = 0;
};

BalanceReport detailed_balance_check(const GremEnvironment& env, const ModelParams& params);

struct HittingQuery {
  std::vector<SpinState> targetA;
  std::vector<SpinState> avoidB;
  SpinState start;
};

enum class SolverMethod { Auto, Dense, Iterative };

struct SolverOptions {
  SolverMethod method = SolverMethod::Auto;
  double tolerance = 1e-12;  // max_i |h - P h - b| on interior rows
  int maxIterations = 50000;
  int cap = 18;
  int denseCap = 12;
  int autoDenseMax = 10;
};

struct HittingSolution {
  std::vector<double> h;  // all 2^N states; 1 on A, 0 on B
  double residual = 0;
  int iterations = 0;
  std::string method;
};

HittingSolution solve_hitting(const GremEnvironment& env, const ModelParams& params,
                              const std::vector<SpinState>& A, const std::vector<SpinState>& B,
                              const SolverOptions& opt = {});
double exact_hitting_probability(const GremEnvironment& env, const ModelParams& params,
                                 const HittingQuery& query, const SolverOptions& opt = {});

struct McEstimate {
  double estimate = 0;
  double stdError = 0;
  std::uint64_t replicas = 0;
  std::uint64_t censored = 0;
};

McEstimate mc_hitting_probability(const GremEnvironment& env, const ModelParams& params,
                                  const HittingQuery& query, std::uint64_t replicas, std::uint64_t seed,
                                  std::uint64_t stepBudget = 1'000'000'000ULL);

struct LumpPartition {
  int n = 0;
  std::vector<int> classOf;               // coordinate -> class label
  std::vector<std::vector<int>> classes;  // 2^{|K|} classes
  int emptyClasses = 0;

  // average spin (+1 for bit 1, -1 for bit 0) per class; 0 for empty classes
  std::vector<double> lump(std::uint32_t word) const;
};

LumpPartition lump_partition(const std::vector<std::uint32_t>& K, int n);

std::vector<int> distance_chain_projection(const std::vector<std::uint32_t>& walk, std::uint32_t target);

}  // namespace grem
