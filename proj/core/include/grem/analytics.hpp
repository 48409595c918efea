#pragma once
#include <algorithm>
#include <cmath>
#include <vector>

#include "grem/environment.hpp"

namespace grem {

struct EhrenfestQuery {
  int n2 = 1;
  int i = 0;
  double t = 0;
};

double log_B_integral(int i, double alpha, int n2);
double B_integral(int i, double alpha, int n2);

// t' = n2 (1 - t) / (2 t)
double ehrenfest_t_prime(int n2, double t);
double ehrenfest_pgf(const EhrenfestQuery& q);
inline double ehrenfest_pgf(int n2, int i, double t) { return ehrenfest_pgf({n2, i, t}); }

// escape probability per step matched to lambda': q = 2 lambda' / (n2 + 2 lambda')
inline double pi_escape_q(int n2, double lambdaPrime) { return 2 * lambdaPrime / (n2 + 2 * lambdaPrime); }
double pi_analytic(int n2, double lambdaPrime);
double pi_hat(int n2, double lambdaPrime, int M2);

// first passage to 0 of the (n2+1)-state Ehrenfest chain, solved as a linear system
double ehrenfest_pgf_oracle(int n2, int i, double t);
// (1/2^{n2}) sum_i C(n2, i) E_i[(1-q)^tau]
double pi_bruteforce(int n2, double lambdaPrime);

double arcsine_cdf(double alpha, double u);

// Kolmogorov-Smirnov statistic of a sample against a continuous CDF and its asymptotic p-value
template <class Cdf>
double ks_statistic(std::vector<double> x, Cdf cdf);
double kolmogorov_pvalue(std::size_t n, double D);
double gumbel_cdf(double x);

double aging_prediction(Regime regime, double theta, double alpha1, double alpha2, double p);

template <class Cdf>
double ks_statistic(std::vector<double> x, Cdf cdf) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double F = cdf(x[i]);
    d = std::max({d, F - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - F});
  }
  return d;
}

}  // namespace grem
