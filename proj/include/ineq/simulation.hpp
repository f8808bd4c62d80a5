#ifndef INEQ_SIMULATION_HPP
#define INEQ_SIMULATION_HPP

// Design-based simulation: repeated samples from a fixed population,
// direct and model-based estimation per sample, and frequentist metrics
// against the population index values.

#include <cstdint>
#include <string>
#include <vector>

#include "ineq/common.hpp"
#include "ineq/design.hpp"
#include "ineq/hb_model.hpp"
#include "ineq/indices.hpp"
#include "ineq/mcmc.hpp"

namespace ineq {

enum class Scenario { Rate3, Rate5, Evt };

Scenario parse_scenario(const std::string& name);
std::string scenario_name(Scenario s);

// Log-normal synthetic population with households nested in PSUs nested in
// strata. Each domain has one take-all stratum and some regular strata; the
// log-income variance of a domain depends on its first covariate.
struct SyntheticSpec {
  int domains = 30;
  int regular_strata = 2;
  int psus_per_stratum = 8;
  int take_all_psus = 3;
  int households_per_psu = 30;   // before the per-domain size factor
  double mean_log_income = 9.8;
  double phi2 = 0.5;             // typical log-income variance
  double phi2_spread = 0.35;     // sd of log phi2 across domains
  double household_share = 0.3;  // within-household correlation of log income
  std::uint64_t seed = 0;
};

struct SyntheticPopulation {
  Population population;
  std::vector<std::string> domains;  // sorted, aligned with covariates rows
  Matrix<double> covariates;         // D x 2, raw scale
  Vec<double> phi2;                  // generating log-income variance per domain
};

SyntheticPopulation synthetic_population(const SyntheticSpec& spec);

// Incomes clipped to the per-domain 0.5% and 99.5% quantiles.
Population winsorize(const Population& pop, double tail = 0.005);

// Index of every domain computed with the iid estimator on its full population.
Vec<double> population_theta(const Population& pop, const std::vector<std::string>& domains,
                             const IndexSpec& spec);

struct SimConfig {
  int replicates = 1000;
  IndexSpec index = IndexSpec::atkinson(1.0);
  std::vector<ModelKind> models{ModelKind::Beta, ModelKind::FlexibleBeta};
  Scenario scenario = Scenario::Rate5;
  std::uint64_t seed = 0;
  int psus_per_stratum = 2;
  int bootstrap_replicates = 200;
  SamplerConfig sampler;
  PriorSpec priors;
  bool require_convergence = true;  // exclude fits with R-hat above the gate

  void validate() const;
  double sampling_rate() const;
};

struct EstimatorMetrics {
  std::string estimator;
  Vec<double> rb, arb, mse, rmse, coverage;  // per domain
  double mean_rb = 0.0;
  double mean_arb = 0.0;
  double mean_rmse = 0.0;
  double mean_coverage = 0.0;
  double aeff = 1.0;
  bool coverage_defined = false;
  int used = 0;      // replicates entering the metrics
  int excluded = 0;  // failed or non-convergent replicates
};

// theta: D population values. estimates, lower, upper: S x D. lower/upper
// may be empty (coverage then undefined). valid: S flags, empty for all.
// reference_mse: direct-estimator MSE per domain for AEFF; empty means the
// estimator is its own reference.
EstimatorMetrics compute_metrics(const Vec<double>& theta, const Matrix<double>& estimates,
                                 const Matrix<double>& lower, const Matrix<double>& upper,
                                 const std::vector<bool>& valid = {},
                                 const Vec<double>& reference_mse = {});

struct SimResult {
  Scenario scenario = Scenario::Rate5;
  IndexSpec index;
  std::vector<std::string> domains;
  Vec<double> theta;
  std::vector<EstimatorMetrics> estimators;  // direct first, then models
  Vec<double> mean_sample_size;               // average n_tilde per domain
};

SimResult run_design_simulation(const Population& pop, const Matrix<double>& covariates,
                                const SimConfig& cfg);

}  // namespace ineq

#endif
