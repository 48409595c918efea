#pragma once
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "grem/dynamics.hpp"
#include "grem/environment.hpp"
#include "grem/rng.hpp"

namespace grem {

struct EntranceParams {
  int M1 = 1;
  int M2 = 1;
  double psiN = 0;
  std::vector<double> gamma1Top;
  std::optional<std::pair<int, int>> excluded;  // zero-based (x1, x2) of eta-bar
};

double lambda_asymptotic(int sizeA, double psiN, double gamma1x);
// finite-N form from q*(w1)
double lambda_exact(const GremEnvironment& env, const ModelParams& params, std::uint32_t w1, int sizeA);

// nu_1(x1) proportional to 1 - lambda^{x1}; with an exclusion, |A| = M2 - 1 in the excluded block
std::vector<double> nu1(const EntranceParams& ep);
std::vector<double> nu1_from_lambdas(const std::vector<double>& lambdaT);

std::vector<double> limit_nu1(Regime regime, const std::vector<double>& gamma1, int M2, double psi);

enum class EntranceCaseKind { I1, I2, I3, I4, II, III };
const char* entrance_case_name(EntranceCaseKind k);

struct EntranceCase {
  EntranceCaseKind kind = EntranceCaseKind::I3;
  int x1 = 0;  // target block (eta = xi^{x1 x2}, or the cylinder for I4)
  int x2 = 0;
  int barX1 = -1;  // eta-bar for II / III
  int barX2 = -1;
  SpinState start;
};

enum class LambdaForm { Asymptotic, Exact };

double predict_entrance(const GremEnvironment& env, const ModelParams& params, const TopSpec& top,
                        const EntranceCase& c, LambdaForm form = LambdaForm::Exact);

// target/avoid sets realizing the event of each case
HittingQuery entrance_query(const ModelParams& params, const TopSpec& top, const EntranceCase& c);

struct EntranceRow {
  std::string kase;
  SpinState start;
  std::string target;
  double predicted = 0;
  double measured = 0;
  double error = 0;  // stderr (mc) or solver residual (exact)
  double tolerance = 0;
  bool pass = false;
  std::string flag;
};

enum class ValidationMethod { Exact, MonteCarlo };

struct ValidationOptions {
  ValidationMethod method = ValidationMethod::Exact;
  double tolerance = -1;  // < 0: max(0.05, 4/N)
  LambdaForm form = LambdaForm::Exact;
  std::uint64_t mcReplicas = 2000;
  std::uint64_t seed = 1;
  SolverOptions solver;
};

bool low_temperature(const GremEnvironment& env, const ModelParams& params, const TopSpec& top);

std::vector<EntranceRow> validate_entrance(const GremEnvironment& env, const ModelParams& params, const TopSpec& top,
                                           const std::vector<EntranceCase>& cases, const ValidationOptions& opt);

// one case of each kind with starts drawn uniformly from the admissible region
std::vector<EntranceCase> standard_entrance_cases(const ModelParams& params, const TopSpec& top, int startsPerCase,
                                                  std::uint64_t seed);
SpinState sample_outside_wbar(const ModelParams& params, const TopSpec& top, Rng& rng);

void write_entrance_csv(const std::vector<EntranceRow>& rows, const ModelParams& params, std::ostream& os);

enum class CrossBlockLambda { Departure, PrintedArrival };
inline constexpr CrossBlockLambda kTrapKernelConvention = CrossBlockLambda::Departure;

struct TrapKernel {
  int M1 = 0, M2 = 0;
  std::vector<double> transition;  // row-major (M1 M2)^2, state index x1 * M2 + x2
  std::vector<double> meanHold;

  double at(int from, int to) const { return transition[static_cast<std::size_t>(from) * M1 * M2 + to]; }
  int size() const { return M1 * M2; }
};

TrapKernel trap_kernel(int M1, int M2, double psi, const std::vector<double>& gamma1,
                       CrossBlockLambda convention = kTrapKernelConvention);

struct TrapPath {
  std::vector<int> states;
  std::vector<double> jumpTimes;  // entry time of each state
  double horizon = 0;
};

TrapPath trap_simulate(const TrapKernel& K, const std::vector<std::vector<double>>& gamma2rows, double horizon,
                       Rng& rng, int start = 0);

void write_kernel_csv(const TrapKernel& K, std::ostream& os);

}  // namespace grem
