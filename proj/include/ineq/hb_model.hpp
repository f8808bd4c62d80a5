#ifndef INEQ_HB_MODEL_HPP
#define INEQ_HB_MODEL_HPP

// Area-level Beta and Flexible Beta (FB) models with known sampling
// variances. In the FB model the lower mixture mean lambda2 carries the
// linear predictor; the gap between the component means is a fraction w of
// its admissible bound, and the dispersion follows from the known variance.

#include <cmath>
#include <string>
#include <vector>

#include "ineq/common.hpp"
#include "ineq/dual.hpp"
#include "ineq/indices.hpp"
#include "ineq/mcmc.hpp"

namespace ineq {

enum class ModelKind { Beta, FlexibleBeta };

ModelKind parse_model_kind(const std::string& name);
std::string model_kind_name(ModelKind k);

struct AreaDataset {
  std::vector<std::string> domains;
  Vec<double> y;         // direct estimates in (0, 1)
  Vec<double> v;         // known sampling variances
  Matrix<double> x;      // D x P design matrix, intercept included by the caller
  Vec<double> n_tilde;   // optional, used by diagnostics only

  Index size() const { return y.size(); }
  Index predictors() const { return x.cols(); }

  // Throws on shape problems, y outside (0,1), V <= 0, V >= y(1-y) (with
  // the offending domain named) and D < P + 2.
  void validate() const;
};

// Columns scaled to mean 0 and sd 1, with an intercept column prepended.
Matrix<double> standardized_design(const Matrix<double>& covariates);

enum class PPrior { Uniform, Beta22 };

struct PriorSpec {
  double beta_sd = std::sqrt(10.0);
  double sigma_v_scale = 1.0;
  PPrior p_prior = PPrior::Uniform;

  void validate() const;
};

struct FbParams {
  Vec<double> beta;
  double sigma_v = 0.5;
  Vec<double> v;
  double p = 0.5;  // unused by the Beta model
  double w = 0.5;
};

struct DerivedArea {
  double lambda2 = 0.0;
  double wtilde = 0.0;
  double theta = 0.0;
  double phi = 0.0;
  double lambda1 = 0.0;
};

// Largest theta for which V(theta, n) < theta(1 - theta), i.e. the region
// where the dispersion parameter stays positive.
double c_threshold(const IndexSpec& spec, double n);

double wtilde_bound(double lambda2, double p, double v);

DerivedArea derive_area(const FbParams& params, Index d, const AreaDataset& data);

double fb_log_likelihood(double y, const DerivedArea& area, double p);
double beta_log_likelihood(double y, double theta, double v);

// Number of unconstrained coordinates: [beta, log sigma_v, v, (logit p, logit w)].
Index unconstrained_size(ModelKind kind, Index predictors, Index domains);
Vec<double> to_unconstrained(ModelKind kind, const FbParams& params);
FbParams from_unconstrained(ModelKind kind, const Vec<double>& q, Index predictors);
std::vector<std::string> unconstrained_names(ModelKind kind, Index predictors, Index domains);

double log_posterior(ModelKind kind, const FbParams& params, const AreaDataset& data,
                     const PriorSpec& priors);
double log_posterior_unconstrained(ModelKind kind, const Vec<double>& q, const AreaDataset& data,
                                   const PriorSpec& priors);
double log_posterior_gradient(ModelKind kind, const Vec<double>& q, const AreaDataset& data,
                              const PriorSpec& priors, Vec<double>& grad);

// Per-domain log-likelihood at an unconstrained point; -inf entries where
// the point violates the model constraints.
Vec<double> pointwise_loglik(ModelKind kind, const Vec<double>& q, const AreaDataset& data);

// Sampler target. Generated quantities are theta_d, lambda2_d, lambda1_d
// and the constrained hyperparameters. The non-centered variant samples
// u_d = v_d / sigma_v in place of v_d, which removes the funnel between
// sigma_v and the random effects when the areas carry little information.
Target make_target(ModelKind kind, const AreaDataset& data, const PriorSpec& priors,
                   bool non_centered = true);

struct AreaFit {
  ModelKind kind = ModelKind::Beta;
  PosteriorDraws draws;
  PosteriorSummary summary;
  Vec<double> theta_mean;
  Vec<double> theta_sd;
  Vec<double> theta_lo;   // 2.5% quantile
  Vec<double> theta_hi;   // 97.5% quantile
};

AreaFit fit_area_model(ModelKind kind, const AreaDataset& data, const PriorSpec& priors,
                       const SamplerConfig& cfg, bool non_centered = true);

// Column offsets of the generated quantities for a dataset of D domains.
struct GeneratedLayout {
  Index theta = 0;
  Index lambda2 = 0;
  Index lambda1 = 0;
  Index sigma_v = 0;
  Index p = -1;
  Index w = -1;
};
GeneratedLayout generated_layout(ModelKind kind, Index domains);

}  // namespace ineq

#endif
