#include "ineq/gvf.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "ineq/parallel.hpp"
#include "ineq/rng.hpp"

namespace ineq {

double variance_numerator(const IndexSpec& spec, double theta, double n) {
  const double t2 = theta * theta;
  switch (spec.kind) {
    case IndexKind::Atkinson:
      return 2.0 * t2 * std::exp(-2.0 * theta);
    case IndexKind::RelativeTheil:
      return 2.0 * t2;
    case IndexKind::Gini:
      return t2 * (1.0 - t2);
    case IndexKind::RelativeEntropy: {
      const double a = *spec.alpha;
      return 2.0 * t2 * std::exp(2.0 * theta * std::expm1((a - 1.0) * std::log(n)));
    }
    case IndexKind::GeneralizedEntropy:
      break;
  }
  fail(ErrorCode::UnsupportedIndex, "no variance function for index " + spec.label());
}

double variance_function_value(const IndexSpec& spec, double theta, double n) {
  spec.validate();
  if (!(theta > 0.0 && theta < 1.0)) {
    fail(ErrorCode::DomainError, "variance function needs theta in (0,1)");
  }
  if (!(n > 1.0) || !std::isfinite(n)) fail(ErrorCode::DomainError, "variance function needs n > 1");
  return variance_numerator(spec, theta, n) / n;
}

double proportion_variance(double theta, double n) {
  if (!(theta > 0.0 && theta < 1.0) || !(n > 0.0)) {
    fail(ErrorCode::DomainError, "proportion variance needs theta in (0,1) and n > 0");
  }
  return theta * (1.0 - theta) / n;
}

namespace {

Vec<double> lognormal_draws(CounterRng& rng, Index n, double mu, double sd) {
  std::normal_distribution<double> normal(mu, sd);
  Vec<double> z(n);
  for (Index i = 0; i < n; ++i) z[i] = std::exp(normal(rng));
  return z;
}

double reference_gini(const LogNormalParams& p, std::uint64_t seed) {
  CounterRng rng(seed, 0xC0FFEEULL);
  return gini_iid(lognormal_draws(rng, 1000000, p.mu, std::sqrt(p.phi2)));
}

}  // namespace

McValidation mc_validate_variance_function(const IndexSpec& spec, const LogNormalParams& p,
                                           int reps, std::uint64_t seed,
                                           McEstimator estimator) {
  spec.validate();
  if (reps < 1000) fail(ErrorCode::InvalidArgument, "MC validation needs at least 1000 replicates");
  if (!(p.phi2 > 0.0) || !(p.n >= 2.0)) {
    fail(ErrorCode::InvalidArgument, "log-normal parameters need phi2 > 0 and n >= 2");
  }
  const Index n = static_cast<Index>(std::llround(p.n));
  const double sd = std::sqrt(p.phi2);
  const bool gini = spec.kind == IndexKind::Gini;

  Vec<double> est(reps);
  parallel_for(reps, [&](int r) {
    CounterRng rng(seed, static_cast<std::uint64_t>(r));
    const Vec<double> z = lognormal_draws(rng, n, p.mu, sd);
    if (gini || estimator == McEstimator::Nonparametric) {
      IndexSpec sp = spec;
      sp.population_size.reset();
      est[r] = index_iid(z, sp);
    } else {
      est[r] = lognormal_plugin_index(z, spec);
    }
  });

  McValidation out;
  out.theta = gini ? reference_gini(p, seed) : lognormal_theta(p, spec);
  out.mc_mean = est.mean();
  out.mc_var = (est.array() - out.mc_mean).square().sum() / static_cast<double>(reps - 1);
  out.formula_var = variance_function_value(spec, out.theta, p.n);
  out.ratio = out.mc_var / out.formula_var;
  return out;
}

namespace {

double median(std::vector<double> v) {
  const size_t m = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<long>(m), v.end());
  double hi = v[m];
  if (v.size() % 2 == 1) return hi;
  double lo = *std::max_element(v.begin(), v.begin() + static_cast<long>(m));
  return 0.5 * (lo + hi);
}

double squared_correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return saa == 0.0 && sbb == 0.0 ? 1.0 : 0.0;
  // exact proportionality up to rounding
  const double r2 = sab * sab / (saa * sbb);
  return std::min(1.0, r2);
}

}  // namespace

GvfFit gvf_fit(const Vec<double>& y, const Vec<double>& v_boot, const Vec<double>& n_tilde,
               const IndexSpec& spec) {
  spec.validate();
  const Index D = y.size();
  if (v_boot.size() != D || n_tilde.size() != D) {
    fail(ErrorCode::LengthMismatch, "GVF inputs differ in length");
  }
  GvfFit fit;
  fit.ratio = Vec<double>::Constant(D, std::numeric_limits<double>::quiet_NaN());
  fit.fit_weight = Vec<double>::Zero(D);

  std::vector<Index> used;
  std::vector<double> q;  // ratio per unit of n_tilde
  for (Index d = 0; d < D; ++d) {
    if (!(n_tilde[d] > 0.0) || !std::isfinite(y[d])) continue;
    const double yc = std::clamp(y[d], kClampLow, kClampHigh);
    const double r = variance_numerator(spec, yc, std::max(n_tilde[d], 2.0)) / v_boot[d];
    if (!(v_boot[d] > 0.0) || !std::isfinite(r)) continue;
    fit.ratio[d] = r;
    used.push_back(d);
    q.push_back(r / n_tilde[d]);
  }
  if (used.size() < 3) {
    fail(ErrorCode::SingularFit, "GVF needs at least 3 domains with usable raw variances");
  }

  // ordinary through-origin fit
  double sxy = 0.0, sxx = 0.0;
  for (Index d : used) {
    sxy += n_tilde[d] * fit.ratio[d];
    sxx += n_tilde[d] * n_tilde[d];
  }
  double psi = sxy / sxx;

  // GLS with Var(e_d) proportional to n_d^2 reduces to a location problem
  // on q_d = r_d/n_d; Huber weights keep near-zero raw variances from
  // dominating it.
  const double center = median(q);
  std::vector<double> dev(q.size());
  for (size_t i = 0; i < q.size(); ++i) dev[i] = std::abs(q[i] - center);
  const double scale = 1.4826 * median(dev);
  constexpr double kHuber = 1.345;
  std::vector<double> h(q.size(), 1.0);
  for (int iter = 0; iter < 100; ++iter) {
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < q.size(); ++i) {
      const double u = scale > 0.0 ? std::abs(q[i] - psi) / scale : 0.0;
      h[i] = u > kHuber ? kHuber / u : 1.0;
      num += h[i] * q[i];
      den += h[i];
    }
    const double next = num / den;
    const bool done = std::abs(next - psi) <= 1e-14 * std::abs(psi);
    psi = next;
    if (done) break;
  }
  if (!(psi > 0.0) || !std::isfinite(psi)) {
    fail(ErrorCode::SingularFit, "GVF deflating factor is not positive");
  }

  fit.psi_hat = psi;
  fit.used_domains = static_cast<int>(used.size());
  for (size_t i = 0; i < used.size(); ++i) fit.fit_weight[used[i]] = h[i];

  std::vector<double> obs, pred;
  for (Index d : used) {
    obs.push_back(fit.ratio[d]);
    pred.push_back(psi * n_tilde[d]);
  }
  fit.pseudo_r2 = squared_correlation(obs, pred);

  fit.n_eff = psi * n_tilde;
  fit.v_smoothed.resize(D);
  for (Index d = 0; d < D; ++d) {
    const double yc = std::clamp(std::isfinite(y[d]) ? y[d] : kClampLow, kClampLow, kClampHigh);
    const double ne = fit.n_eff[d];
    fit.v_smoothed[d] = ne > 0.0 ? variance_numerator(spec, yc, std::max(ne, 1.0 + 1e-9)) / ne
                                 : std::numeric_limits<double>::quiet_NaN();
  }
  return fit;
}

}  // namespace ineq
