#include "ineq/hb_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ineq/gvf.hpp"

namespace ineq {

ModelKind parse_model_kind(const std::string& name) {
  if (name == "beta") return ModelKind::Beta;
  if (name == "fb" || name == "flexible_beta") return ModelKind::FlexibleBeta;
  fail(ErrorCode::InvalidArgument, "unknown model '" + name + "' (expected beta or fb)");
}

std::string model_kind_name(ModelKind k) {
  return k == ModelKind::Beta ? "beta" : "fb";
}

void AreaDataset::validate() const {
  const Index D = y.size();
  if (D == 0) fail(ErrorCode::EmptyOrDegenerate, "area dataset has no domains");
  if (v.size() != D || x.rows() != D) {
    fail(ErrorCode::LengthMismatch, "area dataset columns differ in length");
  }
  if (!domains.empty() && static_cast<Index>(domains.size()) != D) {
    fail(ErrorCode::LengthMismatch, "area dataset domain labels differ in length");
  }
  if (n_tilde.size() != 0 && n_tilde.size() != D) {
    fail(ErrorCode::LengthMismatch, "area dataset sample sizes differ in length");
  }
  if (D < x.cols() + 2) {
    fail(ErrorCode::InvalidArgument, "need at least P + 2 domains, got " + std::to_string(D) +
                                         " for P = " + std::to_string(x.cols()));
  }
  if (!x.allFinite()) fail(ErrorCode::NonFiniteValue, "design matrix has non-finite entries");
  for (Index d = 0; d < D; ++d) {
    const std::string name = domains.empty() ? std::to_string(d) : domains[d];
    if (!(y[d] > 0.0 && y[d] < 1.0)) {
      fail(ErrorCode::DomainError, "domain " + name + ": direct estimate outside (0,1)");
    }
    if (!(v[d] > 0.0) || !std::isfinite(v[d])) {
      fail(ErrorCode::DomainError, "domain " + name + ": sampling variance must be positive");
    }
    if (v[d] >= y[d] * (1.0 - y[d])) {
      fail(ErrorCode::DomainError,
           "domain " + name + ": sampling variance is not below y(1-y), model undefined");
    }
  }
}

Matrix<double> standardized_design(const Matrix<double>& covariates) {
  const Index D = covariates.rows();
  Matrix<double> x(D, covariates.cols() + 1);
  x.col(0).setOnes();
  for (Index j = 0; j < covariates.cols(); ++j) {
    const auto c = covariates.col(j);
    const double m = c.mean();
    const double sd = std::sqrt((c.array() - m).square().sum() / static_cast<double>(D - 1));
    if (!(sd > 0.0)) fail(ErrorCode::InvalidArgument, "covariate " + std::to_string(j) + " is constant");
    x.col(j + 1) = (c.array() - m) / sd;
  }
  return x;
}

void PriorSpec::validate() const {
  if (!(beta_sd > 0.0) || !(sigma_v_scale > 0.0)) {
    fail(ErrorCode::InvalidArgument, "prior scales must be positive");
  }
}

double c_threshold(const IndexSpec& spec, double n) {
  spec.validate();
  if (!(n > 1.0)) fail(ErrorCode::DomainError, "threshold needs n > 1");
  switch (spec.kind) {
    case IndexKind::RelativeTheil:
      return n / (n + 2.0);
    case IndexKind::Gini:
      return 0.5 * (std::sqrt(4.0 * n + 1.0) - 1.0);
    default:
      break;
  }
  // f(theta)/n = theta(1 - theta)  <=>  f(theta)/theta - n(1 - theta) = 0
  auto g = [&](double t) { return variance_numerator(spec, t, n) / t - n * (1.0 - t); };
  double lo = 1e-12, hi = 1.0;
  double glo = g(lo), ghi = g(hi);
  if (!(glo < 0.0 && ghi > 0.0)) {
    fail(ErrorCode::NoRoot, "threshold root is not bracketed on (0,1) for " + spec.label());
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double wtilde_bound(double lambda2, double p, double v) {
  if (!(lambda2 > 0.0 && lambda2 < 1.0) || !(p > 0.0 && p < 1.0) || !(v > 0.0)) {
    fail(ErrorCode::DomainError, "wtilde bound needs lambda2, p in (0,1) and V > 0");
  }
  return std::min((1.0 - lambda2) / p, std::sqrt(v / (p * (1.0 - p))));
}

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;

template <typename S>
S smin(const S& a, const S& b) {
  return value_of(b) < value_of(a) ? b : a;
}

template <typename S>
S lse(const S& a, const S& b) {
  using std::exp;
  using std::log1p;
  if (value_of(a) == kNegInf) return b;
  if (value_of(b) == kNegInf) return a;
  return value_of(a) >= value_of(b) ? a + log1p(exp(b - a)) : b + log1p(exp(a - b));
}

template <typename S>
S beta_lpdf(double y, const S& mean, const S& phi) {
  using std::lgamma;
  const S a = mean * phi;
  const S b = (1.0 - mean) * phi;
  return lgamma(phi) - lgamma(a) - lgamma(b) + (a - 1.0) * std::log(y) +
         (b - 1.0) * std::log1p(-y);
}

template <typename S>
S beta_term(double y, double v, const S& eta) {
  const S theta = inv_logit(eta);
  const S phi = theta * (1.0 - theta) / v - 1.0;
  if (!(value_of(phi) > 0.0)) return S(kNegInf);
  return beta_lpdf(y, theta, phi);
}

// Mixture term with p and w given on the logit scale.
template <typename S>
S fb_term(double y, double v, const S& eta, const S& a, const S& b) {
  using std::log;
  using std::sqrt;
  const S l2 = inv_logit(eta);
  const S p = inv_logit(a);
  const S q = inv_logit(-a);
  const S w = inv_logit(b);
  const S pq = p * q;
  const S bound = smin(S((1.0 - l2) / p), S(sqrt(v / pq)));
  const S wt = w * bound;
  const S l1 = l2 + wt;
  const S theta = l2 + p * wt;
  const S num = theta * (1.0 - theta) - v;
  const S den = v - pq * wt * wt;
  if (!(value_of(num) > 0.0) || !(value_of(den) > 0.0) || !(value_of(l1) < 1.0) ||
      !(value_of(l2) > 0.0)) {
    return S(kNegInf);
  }
  const S phi = num / den;
  return lse(S(log(p) + beta_lpdf(y, l1, phi)), S(log(q) + beta_lpdf(y, l2, phi)));
}

struct Layout {
  Index P, D, sigma, v0, a, b;
};

Layout layout(ModelKind kind, Index P, Index D) {
  Layout l{P, D, P, P + 1, -1, -1};
  if (kind == ModelKind::FlexibleBeta) {
    l.a = P + 1 + D;
    l.b = l.a + 1;
  }
  return l;
}

Layout checked_layout(ModelKind kind, const Vec<double>& q, const AreaDataset& data) {
  const Layout l = layout(kind, data.predictors(), data.size());
  if (q.size() != unconstrained_size(kind, l.P, l.D)) {
    fail(ErrorCode::LengthMismatch, "parameter vector has the wrong length");
  }
  return l;
}

// Log prior with Jacobian terms, on the unconstrained scale.
double log_prior(ModelKind kind, const Vec<double>& q, const Layout& l, const PriorSpec& pr,
                 Vec<double>* grad) {
  double lp = 0.0;
  const double sd2 = pr.beta_sd * pr.beta_sd;
  for (Index j = 0; j < l.P; ++j) {
    lp += -0.5 * q[j] * q[j] / sd2 - std::log(pr.beta_sd) - kHalfLog2Pi;
    if (grad) (*grad)[j] += -q[j] / sd2;
  }
  const double s = q[l.sigma];
  const double sigma = std::exp(s);
  const double nu = pr.sigma_v_scale;
  lp += std::log(2.0) - kHalfLog2Pi - std::log(nu) - 0.5 * (sigma / nu) * (sigma / nu) + s;
  double gs = 1.0 - (sigma / nu) * (sigma / nu);
  const double inv_var = 1.0 / (sigma * sigma);
  for (Index d = 0; d < l.D; ++d) {
    const double vd = q[l.v0 + d];
    lp += -0.5 * vd * vd * inv_var - s - kHalfLog2Pi;
    gs += vd * vd * inv_var - 1.0;
    if (grad) (*grad)[l.v0 + d] += -vd * inv_var;
  }
  if (grad) (*grad)[l.sigma] += gs;
  if (kind == ModelKind::FlexibleBeta) {
    const double a = q[l.a], b = q[l.b];
    // log p + log(1-p) is the logit Jacobian; Beta(2,2) doubles it
    const double jac_a = log_inv_logit(a) + log_inv_logit(-a);
    const double jac_b = log_inv_logit(b) + log_inv_logit(-b);
    const double k = pr.p_prior == PPrior::Beta22 ? 2.0 : 1.0;
    lp += k * jac_a + (pr.p_prior == PPrior::Beta22 ? std::log(6.0) : 0.0) + jac_b;
    if (grad) {
      (*grad)[l.a] += k * (1.0 - 2.0 * inv_logit(a));
      (*grad)[l.b] += 1.0 - 2.0 * inv_logit(b);
    }
  }
  return lp;
}

double eta_of(const Vec<double>& q, const Layout& l, const AreaDataset& data, Index d) {
  return data.x.row(d).dot(q.head(l.P)) + q[l.v0 + d];
}

}  // namespace

DerivedArea derive_area(const FbParams& params, Index d, const AreaDataset& data) {
  if (d < 0 || d >= data.size()) fail(ErrorCode::InvalidArgument, "domain index out of range");
  if (params.beta.size() != data.predictors() || params.v.size() != data.size()) {
    fail(ErrorCode::LengthMismatch, "parameters do not match the dataset");
  }
  if (!(params.w > 0.0 && params.w < 1.0)) fail(ErrorCode::DomainError, "w must lie in (0,1)");
  const double V = data.v[d];
  DerivedArea a;
  a.lambda2 = inv_logit(data.x.row(d).dot(params.beta) + params.v[d]);
  const double p = params.p;
  a.wtilde = params.w * wtilde_bound(a.lambda2, p, V);
  a.lambda1 = a.lambda2 + a.wtilde;
  a.theta = a.lambda2 + p * a.wtilde;
  a.phi = (a.theta * (1.0 - a.theta) - V) / (V - p * (1.0 - p) * a.wtilde * a.wtilde);
  if (!(a.phi > 0.0) || !std::isfinite(a.phi)) {
    fail(ErrorCode::NonPositivePhi, "dispersion is not positive: V >= theta(1-theta)");
  }
  return a;
}

double fb_log_likelihood(double y, const DerivedArea& area, double p) {
  if (!(y > 0.0 && y < 1.0)) return kNegInf;
  if (!(area.phi > 0.0) || !(area.lambda1 < 1.0) || !(area.lambda2 > 0.0)) return kNegInf;
  const double a = p > 0.0 ? std::log(p) + beta_lpdf(y, area.lambda1, area.phi) : kNegInf;
  const double b = p < 1.0 ? std::log1p(-p) + beta_lpdf(y, area.lambda2, area.phi) : kNegInf;
  return lse(a, b);
}

double beta_log_likelihood(double y, double theta, double v) {
  const double phi = theta * (1.0 - theta) / v - 1.0;
  if (!(phi > 0.0)) fail(ErrorCode::NonPositivePhi, "V >= theta(1-theta) leaves no Beta law");
  if (!(y > 0.0 && y < 1.0)) return kNegInf;
  return beta_lpdf(y, theta, phi);
}

Index unconstrained_size(ModelKind kind, Index predictors, Index domains) {
  return predictors + 1 + domains + (kind == ModelKind::FlexibleBeta ? 2 : 0);
}

Vec<double> to_unconstrained(ModelKind kind, const FbParams& params) {
  const Index P = params.beta.size(), D = params.v.size();
  Vec<double> q(unconstrained_size(kind, P, D));
  q.head(P) = params.beta;
  q[P] = std::log(params.sigma_v);
  q.segment(P + 1, D) = params.v;
  if (kind == ModelKind::FlexibleBeta) {
    q[P + 1 + D] = logit(params.p);
    q[P + 2 + D] = logit(params.w);
  }
  if (!q.allFinite()) fail(ErrorCode::NonFinite, "parameters map to non-finite coordinates");
  return q;
}

FbParams from_unconstrained(ModelKind kind, const Vec<double>& q, Index predictors) {
  if (!q.allFinite()) fail(ErrorCode::NonFinite, "unconstrained vector is not finite");
  const Index extra = kind == ModelKind::FlexibleBeta ? 2 : 0;
  const Index D = q.size() - predictors - 1 - extra;
  if (D < 0) fail(ErrorCode::LengthMismatch, "unconstrained vector is too short");
  FbParams p;
  p.beta = q.head(predictors);
  p.sigma_v = std::exp(q[predictors]);
  p.v = q.segment(predictors + 1, D);
  if (kind == ModelKind::FlexibleBeta) {
    p.p = inv_logit(q[predictors + 1 + D]);
    p.w = inv_logit(q[predictors + 2 + D]);
  }
  return p;
}

std::vector<std::string> unconstrained_names(ModelKind kind, Index predictors, Index domains) {
  std::vector<std::string> names;
  for (Index j = 0; j < predictors; ++j) names.push_back("beta[" + std::to_string(j) + "]");
  names.push_back("log_sigma_v");
  for (Index d = 0; d < domains; ++d) names.push_back("v[" + std::to_string(d) + "]");
  if (kind == ModelKind::FlexibleBeta) {
    names.push_back("logit_p");
    names.push_back("logit_w");
  }
  return names;
}

Vec<double> pointwise_loglik(ModelKind kind, const Vec<double>& q, const AreaDataset& data) {
  const Layout l = checked_layout(kind, q, data);
  Vec<double> ll(l.D);
  for (Index d = 0; d < l.D; ++d) {
    const double eta = eta_of(q, l, data, d);
    ll[d] = kind == ModelKind::Beta ? beta_term(data.y[d], data.v[d], eta)
                                    : fb_term(data.y[d], data.v[d], eta, q[l.a], q[l.b]);
  }
  return ll;
}

double log_posterior_unconstrained(ModelKind kind, const Vec<double>& q, const AreaDataset& data,
                                   const PriorSpec& priors) {
  const Layout l = checked_layout(kind, q, data);
  if (!q.allFinite()) return kNegInf;
  double lp = log_prior(kind, q, l, priors, nullptr);
  for (Index d = 0; d < l.D; ++d) {
    const double eta = eta_of(q, l, data, d);
    lp += kind == ModelKind::Beta ? beta_term(data.y[d], data.v[d], eta)
                                  : fb_term(data.y[d], data.v[d], eta, q[l.a], q[l.b]);
    if (lp == kNegInf) return kNegInf;
  }
  return std::isfinite(lp) ? lp : kNegInf;
}

double log_posterior_gradient(ModelKind kind, const Vec<double>& q, const AreaDataset& data,
                              const PriorSpec& priors, Vec<double>& grad) {
  const Layout l = checked_layout(kind, q, data);
  grad = Vec<double>::Zero(q.size());
  if (!q.allFinite()) return kNegInf;
  double lp = log_prior(kind, q, l, priors, &grad);
  for (Index d = 0; d < l.D; ++d) {
    const double eta = eta_of(q, l, data, d);
    double g_eta;
    if (kind == ModelKind::Beta) {
      const auto t = beta_term(data.y[d], data.v[d], Dual<1>::variable(eta, 0));
      lp += t.v;
      g_eta = t.d[0];
    } else {
      const auto t = fb_term(data.y[d], data.v[d], Dual<3>::variable(eta, 0),
                             Dual<3>::variable(q[l.a], 1), Dual<3>::variable(q[l.b], 2));
      lp += t.v;
      g_eta = t.d[0];
      grad[l.a] += t.d[1];
      grad[l.b] += t.d[2];
    }
    if (lp == kNegInf) {
      grad.setZero();
      return kNegInf;
    }
    grad.head(l.P) += g_eta * data.x.row(d).transpose();
    grad[l.v0 + d] += g_eta;
  }
  if (!std::isfinite(lp) || !grad.allFinite()) {
    grad.setZero();
    return kNegInf;
  }
  return lp;
}

double log_posterior(ModelKind kind, const FbParams& params, const AreaDataset& data,
                     const PriorSpec& priors) {
  if (!(params.sigma_v > 0.0)) return kNegInf;
  if (kind == ModelKind::FlexibleBeta &&
      (!(params.p > 0.0 && params.p < 1.0) || !(params.w > 0.0 && params.w < 1.0))) {
    return kNegInf;
  }
  if (params.beta.size() != data.predictors() || params.v.size() != data.size()) {
    fail(ErrorCode::LengthMismatch, "parameters do not match the dataset");
  }
  Vec<double> q = to_unconstrained(kind, params);
  return log_posterior_unconstrained(kind, q, data, priors);
}

GeneratedLayout generated_layout(ModelKind kind, Index domains) {
  GeneratedLayout g;
  g.theta = 0;
  g.lambda2 = domains;
  g.lambda1 = 2 * domains;
  g.sigma_v = 3 * domains;
  if (kind == ModelKind::FlexibleBeta) {
    g.p = g.sigma_v + 1;
    g.w = g.sigma_v + 2;
  }
  return g;
}

namespace {

// Centered target: coordinates follow to_unconstrained.
Target centered_target(ModelKind kind, const AreaDataset& data, const PriorSpec& priors) {
  const Index P = data.predictors(), D = data.size();
  const Layout l = layout(kind, P, D);

  Target t;
  t.dim = static_cast<int>(unconstrained_size(kind, P, D));
  t.param_names = unconstrained_names(kind, P, D);
  t.log_density = [=, &data](const Vec<double>& q) {
    return log_posterior_unconstrained(kind, q, data, priors);
  };
  t.log_density_gradient = [=, &data](const Vec<double>& q, Vec<double>& g) {
    return log_posterior_gradient(kind, q, data, priors, g);
  };

  const GeneratedLayout gl = generated_layout(kind, D);
  for (const char* base : {"theta", "lambda2", "lambda1"}) {
    for (Index d = 0; d < D; ++d) {
      t.generated_names.push_back(std::string(base) + "[" +
                                  (data.domains.empty() ? std::to_string(d) : data.domains[d]) +
                                  "]");
    }
  }
  t.generated_names.push_back("sigma_v");
  if (kind == ModelKind::FlexibleBeta) {
    t.generated_names.push_back("p");
    t.generated_names.push_back("w");
  }
  t.generated = [=, &data](const Vec<double>& q, Vec<double>& out) {
    out.resize(static_cast<Index>(gl.sigma_v + (kind == ModelKind::FlexibleBeta ? 3 : 1)));
    for (Index d = 0; d < D; ++d) {
      const double l2 = inv_logit(eta_of(q, l, data, d));
      double theta = l2, l1 = l2;
      if (kind == ModelKind::FlexibleBeta) {
        const double p = inv_logit(q[l.a]);
        const double pq = p * inv_logit(-q[l.a]);
        const double wt =
            inv_logit(q[l.b]) * std::min((1.0 - l2) / p, std::sqrt(data.v[d] / pq));
        l1 = l2 + wt;
        theta = l2 + p * wt;
      }
      out[gl.theta + d] = theta;
      out[gl.lambda2 + d] = l2;
      out[gl.lambda1 + d] = l1;
    }
    out[gl.sigma_v] = std::exp(q[l.sigma]);
    if (kind == ModelKind::FlexibleBeta) {
      out[gl.p] = inv_logit(q[l.a]);
      out[gl.w] = inv_logit(q[l.b]);
    }
  };
  t.pointwise_size = static_cast<int>(D);
  t.pointwise_loglik = [=, &data](const Vec<double>& q, Vec<double>& out) {
    out = pointwise_loglik(kind, q, data);
  };

  // Start from the data: beta by least squares on logit(y) and v_d at the
  // implied residual, so every theta_d starts near y_d even when the
  // sampling variances are tiny.
  Vec<double> logit_y = data.y.unaryExpr([](double u) { return logit(u); });
  Vec<double> beta_ls = data.x.colPivHouseholderQr().solve(logit_y);
  const int dim = t.dim;
  t.initial_point = [=, &data](CounterRng& rng) {
    auto jitter = [&] { return 0.2 * rng.uniform() - 0.1; };
    Vec<double> q(dim);
    for (Index j = 0; j < P; ++j) q[j] = beta_ls[j] + jitter();
    q[l.sigma] = std::log(0.5) + jitter();
    if (kind == ModelKind::FlexibleBeta) {
      q[l.a] = jitter();
      q[l.b] = jitter();
    }
    for (Index d = 0; d < D; ++d) {
      q[l.v0 + d] = logit_y[d] - data.x.row(d).dot(q.head(P));
      if (kind == ModelKind::FlexibleBeta) {
        // lower the location until the mixture constraints hold
        for (int k = 0; k < 200; ++k) {
          const double eta = eta_of(q, l, data, d);
          if (fb_term(data.y[d], data.v[d], eta, q[l.a], q[l.b]) != kNegInf) break;
          q[l.v0 + d] -= 0.05;
        }
      }
    }
    return q;
  };
  return t;
}

// Wraps a centered target in coordinates u_d = v_d / sigma_v; the log
// density gains the Jacobian D * log sigma_v.
Target non_centered_target(Target c, ModelKind kind, Index P, Index D) {
  const Layout l = layout(kind, P, D);
  auto to_centered = [=](const Vec<double>& z) {
    Vec<double> q = z;
    q.segment(l.v0, D) *= std::exp(z[l.sigma]);
    return q;
  };
  Target t = c;
  for (Index d = 0; d < D; ++d) t.param_names[static_cast<size_t>(l.v0 + d)] = "u[" + std::to_string(d) + "]";
  t.log_density = [=](const Vec<double>& z) {
    const double lp = c.log_density(to_centered(z));
    return lp == kNegInf ? kNegInf : lp + static_cast<double>(D) * z[l.sigma];
  };
  t.log_density_gradient = [=](const Vec<double>& z, Vec<double>& g) {
    const Vec<double> q = to_centered(z);
    const double lp = c.log_density_gradient(q, g);
    if (lp == kNegInf) return kNegInf;
    const double sigma = std::exp(z[l.sigma]);
    g[l.sigma] += g.segment(l.v0, D).dot(q.segment(l.v0, D)) + static_cast<double>(D);
    g.segment(l.v0, D) *= sigma;
    return lp + static_cast<double>(D) * z[l.sigma];
  };
  t.generated = [=](const Vec<double>& z, Vec<double>& out) { c.generated(to_centered(z), out); };
  t.pointwise_loglik = [=](const Vec<double>& z, Vec<double>& out) {
    c.pointwise_loglik(to_centered(z), out);
  };
  t.initial_point = [=](CounterRng& rng) {
    Vec<double> z = c.initial_point(rng);
    z.segment(l.v0, D) /= std::exp(z[l.sigma]);
    return z;
  };
  return t;
}

}  // namespace

Target make_target(ModelKind kind, const AreaDataset& data, const PriorSpec& priors,
                   bool non_centered) {
  data.validate();
  priors.validate();
  Target c = centered_target(kind, data, priors);
  if (!non_centered) return c;
  return non_centered_target(std::move(c), kind, data.predictors(), data.size());
}

AreaFit fit_area_model(ModelKind kind, const AreaDataset& data, const PriorSpec& priors,
                       const SamplerConfig& cfg, bool non_centered) {
  const Target t = make_target(kind, data, priors, non_centered);
  AreaFit fit;
  fit.kind = kind;
  fit.draws = run_sampler(t, cfg);
  fit.summary = summarize(fit.draws);
  const Index D = data.size();
  fit.theta_mean.resize(D);
  fit.theta_sd.resize(D);
  fit.theta_lo.resize(D);
  fit.theta_hi.resize(D);
  for (Index d = 0; d < D; ++d) {
    const QuantitySummary& s = fit.summary.generated[static_cast<size_t>(d)];
    fit.theta_mean[d] = s.mean;
    fit.theta_sd[d] = s.sd;
    fit.theta_lo[d] = s.q025;
    fit.theta_hi[d] = s.q975;
  }
  return fit;
}

}  // namespace ineq
