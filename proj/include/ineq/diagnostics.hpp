#ifndef INEQ_DIAGNOSTICS_HPP
#define INEQ_DIAGNOSTICS_HPP

// Model comparison and small-area diagnostics computed from posterior draws.

#include <string>
#include <vector>

#include "ineq/common.hpp"
#include "ineq/hb_model.hpp"

namespace ineq {

struct LooResult {
  double looic = 0.0;
  double se = 0.0;
  Vec<double> elpd;       // per domain
  bool reliable = true;   // false for fewer than two draws
};

// Truncated importance-sampling LOO on a draws x domains log-likelihood
// matrix. Weights are capped at mean * S^(3/4).
LooResult loo_ic(const Matrix<double>& loglik);

// 1 - sd(theta|data) * y / (sqrt(v) * E(theta|data)).
double cvr(double y, double v, const Vec<double>& theta_draws);

struct ConsistencyReport {
  Vec<double> n_tilde;
  Vec<double> residual;   // y_d - theta_hat_d
  double spearman = 0.0;  // corr of |residual| with n_tilde, NaN if undefined
  bool trend_defined = false;
};

ConsistencyReport consistency_report(const Vec<double>& y, const Vec<double>& theta_hat,
                                     const Vec<double>& n_tilde);

double spearman_correlation(const Vec<double>& a, const Vec<double>& b);

struct FitDiagnostics {
  double looic = 0.0;
  double looic_se = 0.0;
  Vec<double> cvr;
  double acvr = 0.0;
  Vec<double> residual;
  double max_rhat = 0.0;
  double min_ess = 0.0;
  bool converged = false;
  int out_of_range = 0;   // domains with theta_hat outside (0,1)
  int divergences = 0;
};

FitDiagnostics diagnose(const AreaFit& fit, const AreaDataset& data);

}  // namespace ineq

#endif
