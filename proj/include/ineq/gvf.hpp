#ifndef INEQ_GVF_HPP
#define INEQ_GVF_HPP

// Approximate srs variance functions of the inequality estimators under
// log-normal income, and the generalized variance function (GVF) model
// that smooths raw bootstrap variances with them.

#include <cstdint>
#include <string>
#include <vector>

#include "ineq/common.hpp"
#include "ineq/indices.hpp"

namespace ineq {

// f(theta): the theta-dependent numerator of V = f(theta)/n. For the
// relative entropy family it also depends on n.
double variance_numerator(const IndexSpec& spec, double theta, double n);

// V(theta, n) for Atkinson (any epsilon), Relative Theil, Gini and
// Relative Entropy(alpha).
double variance_function_value(const IndexSpec& spec, double theta, double n);

// Binomial proportion variance theta(1-theta)/n, for comparison plots.
double proportion_variance(double theta, double n);

enum class McEstimator {
  LogNormalPlugIn,  // index evaluated at the sample variance of log-income
  Nonparametric,    // iid estimator on the raw incomes
};

struct McValidation {
  double theta = 0.0;        // population value the formula is evaluated at
  double mc_mean = 0.0;
  double mc_var = 0.0;
  double formula_var = 0.0;
  double ratio = 0.0;        // mc_var / formula_var
};

// Monte Carlo check of a variance function under srs log-normal sampling.
// Gini has no log-normal plug-in and always uses the iid estimator; its
// population value is taken from a pooled reference sample of 10^6 draws.
McValidation mc_validate_variance_function(const IndexSpec& spec, const LogNormalParams& p,
                                           int reps, std::uint64_t seed,
                                           McEstimator estimator = McEstimator::LogNormalPlugIn);

struct GvfFit {
  double psi_hat = 0.0;
  double pseudo_r2 = 0.0;
  Vec<double> v_smoothed;
  Vec<double> n_eff;
  Vec<double> ratio;          // f(y_d)/v_boot_d, NaN where not usable
  Vec<double> fit_weight;     // final IRLS weight, 0 for excluded domains
  int used_domains = 0;
};

inline constexpr double kClampLow = 1e-6;
inline constexpr double kClampHigh = 1.0 - 1e-6;

// Through-origin feasible GLS of f(y_d)/v_boot_d on n_tilde_d with residual
// variance proportional to n_tilde_d^2, followed by Huber reweighting of
// standardized residuals. y is clamped to (1e-6, 1-1e-6) inside f.
GvfFit gvf_fit(const Vec<double>& y, const Vec<double>& v_boot, const Vec<double>& n_tilde,
               const IndexSpec& spec);

}  // namespace ineq

#endif
