#include "ineq/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ineq/indices.hpp"
#include "ineq/parallel.hpp"

namespace ineq {

namespace {

double log_sum_exp(const Vec<double>& x) {
  const double m = x.maxCoeff();
  if (m == kNegInf) return kNegInf;
  return m + std::log((x.array() - m).exp().sum());
}

double sample_sd(const Vec<double>& x) {
  if (x.size() < 2) return 0.0;
  const double m = x.mean();
  return std::sqrt((x.array() - m).square().sum() / static_cast<double>(x.size() - 1));
}

}  // namespace

LooResult loo_ic(const Matrix<double>& loglik) {
  const Index S = loglik.rows(), D = loglik.cols();
  if (S == 0 || D == 0) fail(ErrorCode::EmptyOrDegenerate, "empty log-likelihood matrix");
  for (Index d = 0; d < D; ++d) {
    if (loglik.col(d).maxCoeff() == kNegInf) {
      fail(ErrorCode::DegenerateWeights, "all draws have zero likelihood for domain " +
                                             std::to_string(d));
    }
  }
  if (!loglik.allFinite()) fail(ErrorCode::NonFinite, "log-likelihood matrix is not finite");

  LooResult r;
  r.reliable = S >= 2;
  r.elpd.resize(D);
  const double log_cap_factor = 0.75 * std::log(static_cast<double>(S));
  parallel_for(static_cast<int>(D), [&](int d) {
    const Vec<double> ll = loglik.col(d);
    Vec<double> lw = -ll;
    lw.array() -= lw.maxCoeff();
    // cap = mean(w) * S^(3/4), in log space
    const double log_cap = log_sum_exp(lw) - std::log(static_cast<double>(S)) + log_cap_factor;
    lw = lw.cwiseMin(log_cap);
    r.elpd[d] = log_sum_exp(Vec<double>(lw + ll)) - log_sum_exp(lw);
  });
  r.looic = -2.0 * r.elpd.sum();
  r.se = 2.0 * std::sqrt(static_cast<double>(D)) * sample_sd(r.elpd);
  return r;
}

double cvr(double y, double v, const Vec<double>& theta_draws) {
  if (theta_draws.size() == 0) fail(ErrorCode::EmptyOrDegenerate, "no posterior draws");
  if (v == 0.0) fail(ErrorCode::DegenerateDirect, "direct variance is zero");
  if (!(v > 0.0)) fail(ErrorCode::DomainError, "direct variance must be positive");
  const double m = theta_draws.mean();
  if (!(y > 0.0) || !(m > 0.0)) {
    fail(ErrorCode::DomainError, "cvr needs positive direct and posterior means");
  }
  return 1.0 - sample_sd(theta_draws) * y / (std::sqrt(v) * m);
}

double spearman_correlation(const Vec<double>& a, const Vec<double>& b) {
  if (a.size() != b.size()) fail(ErrorCode::LengthMismatch, "correlation inputs differ in length");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (a.size() < 2) return nan;
  const Vec<double> ra = average_ranks(a), rb = average_ranks(b);
  const Vec<double> ca = ra.array() - ra.mean(), cb = rb.array() - rb.mean();
  const double den = std::sqrt(ca.squaredNorm() * cb.squaredNorm());
  return den > 0.0 ? ca.dot(cb) / den : nan;
}

ConsistencyReport consistency_report(const Vec<double>& y, const Vec<double>& theta_hat,
                                     const Vec<double>& n_tilde) {
  if (y.size() != theta_hat.size() || y.size() != n_tilde.size()) {
    fail(ErrorCode::LengthMismatch, "consistency inputs differ in length");
  }
  ConsistencyReport r;
  r.n_tilde = n_tilde;
  r.residual = y - theta_hat;
  r.spearman = spearman_correlation(r.residual.cwiseAbs(), n_tilde);
  r.trend_defined = std::isfinite(r.spearman);
  return r;
}

FitDiagnostics diagnose(const AreaFit& fit, const AreaDataset& data) {
  FitDiagnostics out;
  const LooResult loo = loo_ic(fit.draws.loglik_pooled());
  out.looic = loo.looic;
  out.looic_se = loo.se;
  const Index D = data.size();
  out.cvr.resize(D);
  for (Index d = 0; d < D; ++d) {
    out.cvr[d] = cvr(data.y[d], data.v[d], fit.draws.generated_pooled(static_cast<int>(d)));
  }
  out.acvr = out.cvr.mean();
  out.residual = data.y - fit.theta_mean;
  out.max_rhat = fit.summary.max_rhat;
  out.min_ess = fit.summary.min_ess;
  out.converged = fit.summary.converged;
  out.divergences = fit.summary.divergences;
  for (Index d = 0; d < D; ++d) {
    if (!(fit.theta_mean[d] > 0.0 && fit.theta_mean[d] < 1.0)) ++out.out_of_range;
  }
  return out;
}

}  // namespace ineq
