#ifndef INEQ_PIPELINE_HPP
#define INEQ_PIPELINE_HPP

// End-to-end stages behind the command-line tool. Each stage reads the
// artifacts of the previous one from the output directory.
//
//   direct     microdata -> direct.csv
//   bootstrap  microdata -> bootstrap.csv, bootstrap.json
//   gvf        bootstrap.csv + covariates -> area_table.csv, gvf.json
//   fit        area_table.csv -> fit_<model>_{estimates,draws}.csv, *_summary.json, *_diagnostics.json
//   simulate   population (or synthetic) -> simulation.csv, simulation_domains.csv
//   report     fit outputs -> report_*.csv plot tables

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ineq/hb_model.hpp"
#include "ineq/indices.hpp"
#include "ineq/mcmc.hpp"
#include "ineq/simulation.hpp"

namespace ineq {

struct PipelineConfig {
  std::filesystem::path microdata;
  std::filesystem::path covariates;
  std::filesystem::path population;  // simulate only; synthetic when empty
  std::filesystem::path out = "out";
  std::set<std::string> take_all_strata;

  IndexSpec index = IndexSpec::gini();
  int bootstrap_replicates = 500;
  bool gvf = true;

  ModelKind model = ModelKind::FlexibleBeta;
  PriorSpec priors;
  std::vector<std::string> covariate_names;  // all columns when empty
  SamplerConfig sampler;
  std::optional<std::uint64_t> seed;

  SimConfig simulation;
  SyntheticSpec synthetic;

  std::uint64_t seed_or_default() const { return seed.value_or(0); }
};

// Defaults for the tool: HMC for model fits.
PipelineConfig default_config();

// Merges a JSON config file into cfg.
void load_config(const std::filesystem::path& path, PipelineConfig& cfg);
void apply_config_json(const std::string& json_text, PipelineConfig& cfg);

void run_direct(const PipelineConfig& cfg);
void run_bootstrap(const PipelineConfig& cfg);
void run_gvf(const PipelineConfig& cfg);
void run_fit(const PipelineConfig& cfg);
void run_simulate(const PipelineConfig& cfg);
void run_report(const PipelineConfig& cfg);

// Text of the direct-estimate table; exposed for golden tests.
std::string direct_table(const SurveySample& s, const IndexSpec& spec);

}  // namespace ineq

#endif
