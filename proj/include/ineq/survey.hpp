#ifndef INEQ_SURVEY_HPP
#define INEQ_SURVEY_HPP

// Weighted (complex survey) inequality estimators, their bias-corrected
// versions, and delete-one-PSU jackknife estimates of the moment
// variances the corrections need.

#include <set>
#include <string>
#include <vector>

#include "ineq/common.hpp"
#include "ineq/indices.hpp"

namespace ineq {

struct SurveyUnit {
  std::string unit_id;
  std::string household_id;
  std::string domain_id;
  std::string stratum_id;
  std::string psu_id;
  double weight = 0.0;
  double income = 0.0;

  bool operator==(const SurveyUnit&) const = default;
};

struct SurveySample {
  std::vector<SurveyUnit> units;
  // Self-representing strata: households act as the replicate units there.
  std::set<std::string> take_all_strata;

  std::vector<std::string> domains() const;  // sorted, unique
  void validate() const;
};

struct HtAggregates {
  double n_hat = 0.0;  // sum of weights
  double mu_hat = 0.0;
  Index n_tilde = 0;   // units with non-zero weight
};

// Jackknife variances and covariances of the moment statistics.
struct MomentEstimates {
  double var_mu = 0.0;
  double var_gamma = 0.0;
  double cov_mu_gamma = 0.0;
  double var_varpi = 0.0;
  double cov_mu_varpi = 0.0;
  double var_varrho = 0.0;
  double cov_varrho_mu = 0.0;
  double var_iota = 0.0;
  double cov_iota_mu = 0.0;
};

// Point statistics of a weighted domain sample.
struct WeightedStats {
  double n_hat = 0.0;
  double mu = 0.0;
  double gamma = 0.0;   // sum w z (N_i - w/2) / N^2
  double varpi = 0.0;   // sum w z log z / N
  double varrho = 0.0;  // sum w z^(1-eps) / N
  double iota = 0.0;    // sum w log z / N
  Index n_tilde = 0;
};

struct AdjustedEstimate {
  double value = 0.0;     // bias-corrected
  double weighted = 0.0;  // uncorrected weighted estimator
  bool out_of_range = false;
};

enum class LonelyPsuPolicy { Fail, Skip };

// Units of one domain, sorted by income, with the jackknife replicate
// structure of every stratum the domain touches.
struct DomainData {
  struct Group {
    std::vector<Index> members;  // positions in z/w
  };
  struct Stratum {
    std::string id;
    Index groups_in_sample = 0;     // n_h over the whole sample
    std::vector<Index> members;     // domain units in this stratum
    std::vector<Group> groups;      // groups that contain domain units
  };

  std::string domain;
  Vec<double> z;
  Vec<double> w;
  std::vector<Index> rows;  // position of each unit in SurveySample::units
  std::vector<Stratum> strata;
};

DomainData extract_domain(const SurveySample& s, const std::string& domain);

// z must be sorted ascending. epsilon selects varrho; pass NaN to skip it.
WeightedStats weighted_stats(const Vec<double>& z_sorted, const Vec<double>& w,
                             double epsilon);

HtAggregates ht_aggregates(const SurveySample& s, const std::string& domain);

double gini_weighted(const Vec<double>& z, const Vec<double>& w);
double gini_weighted(const SurveySample& s, const std::string& domain);

// Theil numerator (1/N) sum w (z/mu) log(z/mu).
double theil_weighted(const Vec<double>& z, const Vec<double>& w);
double relative_theil_weighted(const Vec<double>& z, const Vec<double>& w, double population_size);

double atkinson_weighted(const Vec<double>& z, const Vec<double>& w, double epsilon);
double atkinson_weighted(const SurveySample& s, const std::string& domain, double epsilon);

double generalized_entropy_weighted(const Vec<double>& z, const Vec<double>& w, double alpha);

AdjustedEstimate gini_adjusted(const WeightedStats& st, const MomentEstimates& m);
AdjustedEstimate gini_adjusted(const SurveySample& s, const std::string& domain,
                               const MomentEstimates& m);

AdjustedEstimate relative_theil_adjusted(const Vec<double>& z, const Vec<double>& w,
                                         const WeightedStats& st, const MomentEstimates& m,
                                         double population_size);
AdjustedEstimate relative_theil_adjusted(const SurveySample& s, const std::string& domain,
                                         const MomentEstimates& m, double population_size);

AdjustedEstimate atkinson_adjusted(const WeightedStats& st, double epsilon,
                                   const MomentEstimates& m);
AdjustedEstimate atkinson_adjusted(const SurveySample& s, const std::string& domain,
                                   double epsilon, const MomentEstimates& m);

MomentEstimates influence_moments(const DomainData& d, double epsilon,
                                  LonelyPsuPolicy policy = LonelyPsuPolicy::Fail);
MomentEstimates influence_moments(const SurveySample& s, const std::string& domain,
                                  double epsilon);

// Bias-corrected direct estimate of any supported index on one domain.
// Relative indices are normalized by spec.population_size, or by the
// rounded estimated domain size when it is absent. The entropy family has
// no correction and returns the weighted plug-in.
AdjustedEstimate direct_estimate(const DomainData& d, const IndexSpec& spec,
                                 LonelyPsuPolicy policy = LonelyPsuPolicy::Fail);

}  // namespace ineq

#endif
