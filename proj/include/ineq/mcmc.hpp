#ifndef INEQ_MCMC_HPP
#define INEQ_MCMC_HPP

// Multi-chain MCMC on an unconstrained log density: adaptive random-walk
// Metropolis and static HMC with a diagonal metric, plus split R-hat,
// effective sample size and posterior summaries.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ineq/common.hpp"
#include "ineq/rng.hpp"

namespace ineq {

struct Target {
  int dim = 0;
  std::vector<std::string> param_names;

  std::function<double(const Vec<double>&)> log_density;
  // Returns the log density and fills grad; required for HMC.
  std::function<double(const Vec<double>&, Vec<double>&)> log_density_gradient;

  // Per-draw derived quantities and pointwise log-likelihood, both optional.
  std::vector<std::string> generated_names;
  std::function<void(const Vec<double>&, Vec<double>&)> generated;
  int pointwise_size = 0;
  std::function<void(const Vec<double>&, Vec<double>&)> pointwise_loglik;

  // Draws a starting point; defaults to uniform(-2, 2) per coordinate.
  std::function<Vec<double>(CounterRng&)> initial_point;
};

enum class Algorithm { AdaptiveMetropolis, Hmc };

struct SamplerConfig {
  int chains = 4;
  int iterations = 5000;  // including warmup
  int warmup = 2000;
  std::uint64_t seed = 0;
  Algorithm algorithm = Algorithm::AdaptiveMetropolis;
  std::optional<double> target_accept;
  int max_leapfrog = 256;
  double integration_time = 2.0;  // mean HMC trajectory length in metric units

  void validate() const;
  double accept_target() const;
  int kept() const { return iterations - warmup; }
};

Algorithm parse_algorithm(const std::string& name);
std::string algorithm_name(Algorithm a);

struct ChainStats {
  double acceptance = 0.0;  // post-warmup mean acceptance probability
  double step_size = 0.0;
  int divergences = 0;
  double mean_leapfrog = 0.0;
};

struct PosteriorDraws {
  std::vector<std::string> param_names;
  std::vector<std::string> generated_names;
  std::vector<Matrix<double>> params;     // per chain: kept draws x dim
  std::vector<Matrix<double>> generated;  // per chain: kept draws x generated
  std::vector<Matrix<double>> loglik;     // per chain: kept draws x pointwise
  std::vector<ChainStats> stats;

  int chains() const { return static_cast<int>(params.size()); }
  int draws_per_chain() const { return params.empty() ? 0 : static_cast<int>(params[0].rows()); }

  // One column per chain for a parameter or generated quantity.
  std::vector<Vec<double>> param_chains(int j) const;
  std::vector<Vec<double>> generated_chains(int j) const;
  Vec<double> generated_pooled(int j) const;
  // Pooled draws x pointwise log-likelihood.
  Matrix<double> loglik_pooled() const;
};

PosteriorDraws run_sampler(const Target& target, const SamplerConfig& cfg);

// Split R-hat over >= 2 chains (or one chain split in two halves).
double rhat(const std::vector<Vec<double>>& chains);
double rhat(const PosteriorDraws& d, int param);

// Multi-chain ESS with Geyer's initial positive sequence. Constant input
// yields NaN.
double ess(const std::vector<Vec<double>>& chains);
double ess(const PosteriorDraws& d, int param);

// Type-7 sample quantile.
double quantile(Vec<double> x, double prob);

struct QuantitySummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double q025 = 0.0;
  double q50 = 0.0;
  double q975 = 0.0;
  double rhat = 0.0;
  double ess = 0.0;
};

struct PosteriorSummary {
  std::vector<QuantitySummary> params;
  std::vector<QuantitySummary> generated;
  double max_rhat = 0.0;
  double min_ess = 0.0;
  bool converged = false;  // max R-hat below the gate
  int divergences = 0;
};

inline constexpr double kRhatGate = 1.05;

PosteriorSummary summarize(const PosteriorDraws& d);
QuantitySummary summarize_quantity(const std::string& name, const std::vector<Vec<double>>& chains);

}  // namespace ineq

#endif
