#include "grem/analytics.hpp"

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace grem {

namespace {

double log_choose(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

double log_sum_exp(const std::vector<double>& v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

double log_B_integral(int i, double alpha, int n2) {
  if (!(alpha > 0)) throw std::invalid_argument("B_integral: alpha must be positive");
  if (i < 0 || i > n2) throw std::invalid_argument("B_integral: i out of [0, n2]");
  std::vector<double> terms;
  terms.reserve(n2 - i + 1);
  const double lgi = std::lgamma(i + 1.0);
  for (int j = 0; j <= n2 - i; ++j)
    terms.push_back(log_choose(n2 - i, j) + lgi + std::lgamma(alpha + j) - std::lgamma(alpha + i + j + 1));
  return log_sum_exp(terms);
}

double B_integral(int i, double alpha, int n2) { return std::exp(log_B_integral(i, alpha, n2)); }

double ehrenfest_t_prime(int n2, double t) { return n2 * (1 - t) / (2 * t); }

double ehrenfest_pgf(const EhrenfestQuery& q) {
  if (q.n2 < 1 || q.i < 0 || q.i > q.n2) throw std::invalid_argument("ehrenfest_pgf: bad (n2, i)");
  if (!(q.t >= 0 && q.t < 1)) throw std::invalid_argument("ehrenfest_pgf: t must lie in [0,1)");
  if (q.i == 0) return 1.0;
  if (q.t == 0) return 0.0;
  const double tp = ehrenfest_t_prime(q.n2, q.t);
  if (tp < std::numeric_limits<double>::min()) return 1.0;
  return std::exp(log_B_integral(q.i, tp, q.n2) - log_B_integral(0, tp, q.n2));
}

double pi_analytic(int n2, double lambdaPrime) {
  if (n2 < 1) throw std::invalid_argument("pi_analytic: n2 >= 1");
  if (!(lambdaPrime > 0)) throw std::invalid_argument("pi_analytic: lambda' must be positive");
  std::vector<double> terms;
  for (int i = 1; i <= n2; ++i) terms.push_back(log_choose(n2, i) - std::log(i + lambdaPrime));
  const double logS = std::log(lambdaPrime) + log_sum_exp(terms);
  return 1.0 / (1.0 + std::exp(logS));
}

double pi_hat(int n2, double lambdaPrime, int M2) { return M2 * pi_analytic(n2, lambdaPrime); }

double ehrenfest_pgf_oracle(int n2, int i, double t) {
  if (n2 < 1 || i < 0 || i > n2) throw std::invalid_argument("ehrenfest_pgf_oracle: need 0 <= i <= n2");
  if (i == 0) return 1.0;
  // g_j = t [ (j/n2) g_{j-1} + ((n2-j)/n2) g_{j+1} ], g_0 = 1, unknowns j = 1..n2
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n2, n2);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n2);
  for (int j = 1; j <= n2; ++j) {
    const double down = t * j / n2, up = t * (n2 - j) / n2;
    if (j == 1)
      b(0) += down;
    else
      A(j - 1, j - 2) -= down;
    if (j < n2) A(j - 1, j) -= up;
  }
  const Eigen::VectorXd g = A.partialPivLu().solve(b);
  return g(i - 1);
}

double pi_bruteforce(int n2, double lambdaPrime) {
  const double t = 1 - pi_escape_q(n2, lambdaPrime);
  double s = 1.0;
  for (int i = 1; i <= n2; ++i) s += std::exp(log_choose(n2, i)) * ehrenfest_pgf_oracle(n2, i, t);
  return s / std::ldexp(1.0, n2);
}

double kolmogorov_pvalue(std::size_t n, double D) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double lam = (sn + 0.12 + 0.11 / sn) * D;
  if (lam < 0.2) return 1.0;
  double s = 0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * lam * lam);
    s += (k % 2 ? 2.0 : -2.0) * term;
    if (term < 1e-17) break;
  }
  return std::clamp(s, 0.0, 1.0);
}

double gumbel_cdf(double x) { return std::exp(-std::exp(-x)); }

double arcsine_cdf(double alpha, double u) {
  if (!(alpha > 0 && alpha < 1)) throw std::invalid_argument("arcsine_cdf: alpha must lie in (0,1)");
  if (!(u >= 0 && u <= 1)) throw std::invalid_argument("arcsine_cdf: u must lie in [0,1]");
  if (u == 0) return 0.0;
  if (u == 1) return 1.0;
  using boost::math::quadrature::gauss_kronrod;
  const double tol = 1e-13;
  // x = y^{1/alpha} on [0, 1/2], 1 - x = z^{1/(1-alpha)} on [1/2, 1]: both integrands are bounded
  auto left = [alpha](double y) { return std::pow(1 - std::pow(y, 1 / alpha), -alpha) / alpha; };
  auto right = [alpha](double z) { return std::pow(1 - std::pow(z, 1 / (1 - alpha)), alpha - 1) / (1 - alpha); };
  double integral = 0;
  const double xl = std::min(u, 0.5);
  integral += gauss_kronrod<double, 31>::integrate(left, 0.0, std::pow(xl, alpha), 15, tol);
  if (u > 0.5) {
    integral += gauss_kronrod<double, 31>::integrate(right, std::pow(1 - u, 1 - alpha), std::pow(0.5, 1 - alpha), 15, tol);
  }
  const double v = std::sin(M_PI * alpha) / M_PI * integral;
  return std::min(1.0, std::max(0.0, v));
}

double aging_prediction(Regime regime, double theta, double alpha1, double alpha2, double p) {
  if (!(theta > 0)) throw std::invalid_argument("aging_prediction: theta must be positive");
  const double u = 1 / (1 + theta);
  switch (regime) {
    case Regime::AboveFT: return arcsine_cdf(alpha2, u);
    case Regime::AtFT: return p * arcsine_cdf(alpha1 * alpha2, u) + (1 - p) * arcsine_cdf(alpha2, u);
    case Regime::BelowFT: return p * arcsine_cdf(alpha1, u);
    case Regime::Intermediate: return arcsine_cdf(alpha1, u);
  }
  throw std::invalid_argument("aging_prediction: unknown regime");
}

}  // namespace grem
