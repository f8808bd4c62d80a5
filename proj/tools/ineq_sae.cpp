// Command-line front end: ineq-sae <direct|bootstrap|gvf|fit|simulate|report> [flags]
//
// Exit status: 0 on success, 1 on validation or input errors, 2 on numeric
// failures. Errors go to stderr as one line: "error: <Code>: <message>".

#include <algorithm>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "ineq/pipeline.hpp"

namespace {

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  std::replace(s.begin(), s.end(), '\r', ' ');
  return s;
}

struct Flags {
  std::string config, index, model, out, microdata, covariates, population, scenario, algorithm,
      p_prior;
  std::optional<double> epsilon, alpha;
  std::optional<std::uint64_t> seed;
  std::optional<int> bootstrap, replicates, chains, iterations, warmup;
  std::vector<std::string> take_all, covariate_names;
  bool no_gvf = false;
};

void add_flags(CLI::App& app, Flags& f) {
  app.add_option("--config", f.config, "JSON config file");
  app.add_option("--index", f.index, "gini, atkinson, relative_theil, relative_entropy");
  app.add_option("--epsilon", f.epsilon, "Atkinson inequality aversion");
  app.add_option("--alpha", f.alpha, "relative entropy order");
  app.add_option("--model", f.model, "beta or fb");
  app.add_option("--seed", f.seed, "random seed");
  app.add_option("--out", f.out, "output directory");
  app.add_option("--microdata", f.microdata, "microdata CSV");
  app.add_option("--covariates", f.covariates, "area covariates CSV");
  app.add_option("--population", f.population, "population CSV for simulate");
  app.add_option("--take-all", f.take_all, "take-all (self-representing) strata");
  app.add_option("--covariate", f.covariate_names, "covariate columns to use");
  app.add_option("--bootstrap-replicates", f.bootstrap, "bootstrap replicates B");
  app.add_flag("--no-gvf", f.no_gvf, "use raw bootstrap variances");
  app.add_option("--scenario", f.scenario, "rate3, rate5 or evt");
  app.add_option("--replicates", f.replicates, "simulation replicates");
  app.add_option("--chains", f.chains, "MCMC chains");
  app.add_option("--iterations", f.iterations, "MCMC iterations per chain");
  app.add_option("--warmup", f.warmup, "MCMC warmup iterations");
  app.add_option("--algorithm", f.algorithm, "hmc or adaptive-metropolis");
  app.add_option("--p-prior", f.p_prior, "mixing weight prior: uniform or beta22");
}

ineq::PipelineConfig build_config(const Flags& f) {
  using namespace ineq;
  PipelineConfig cfg = default_config();
  if (!f.config.empty()) load_config(f.config, cfg);
  if (!f.index.empty()) {
    cfg.index = parse_index_spec(f.index, f.epsilon, f.alpha);
  } else if (f.epsilon || f.alpha) {
    cfg.index = parse_index_spec(index_kind_name(cfg.index.kind),
                                 f.epsilon ? f.epsilon : cfg.index.epsilon,
                                 f.alpha ? f.alpha : cfg.index.alpha);
  }
  if (!f.model.empty()) cfg.model = parse_model_kind(f.model);
  if (f.seed) cfg.seed = f.seed;
  if (!f.out.empty()) cfg.out = f.out;
  if (!f.microdata.empty()) cfg.microdata = f.microdata;
  if (!f.covariates.empty()) cfg.covariates = f.covariates;
  if (!f.population.empty()) cfg.population = f.population;
  if (!f.take_all.empty()) cfg.take_all_strata = {f.take_all.begin(), f.take_all.end()};
  if (!f.covariate_names.empty()) cfg.covariate_names = f.covariate_names;
  if (f.bootstrap) cfg.bootstrap_replicates = *f.bootstrap;
  if (f.no_gvf) cfg.gvf = false;
  if (!f.scenario.empty()) cfg.simulation.scenario = parse_scenario(f.scenario);
  if (f.replicates) cfg.simulation.replicates = *f.replicates;
  for (SamplerConfig* s : {&cfg.sampler, &cfg.simulation.sampler}) {
    if (f.chains) s->chains = *f.chains;
    if (f.iterations) s->iterations = *f.iterations;
    if (f.warmup) s->warmup = *f.warmup;
    if (!f.algorithm.empty()) s->algorithm = parse_algorithm(f.algorithm);
  }
  if (!f.p_prior.empty()) {
    if (f.p_prior != "uniform" && f.p_prior != "beta22") {
      fail(ErrorCode::InvalidArgument, "--p-prior must be 'uniform' or 'beta22'");
    }
    const PPrior p = f.p_prior == "uniform" ? PPrior::Uniform : PPrior::Beta22;
    cfg.priors.p_prior = p;
    cfg.simulation.priors.p_prior = p;
  }
  cfg.sampler.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Small area estimation of inequality indices", "ineq-sae"};
  app.require_subcommand(1);
  Flags flags;
  add_flags(app, flags);

  using Stage = void (*)(const ineq::PipelineConfig&);
  const std::vector<std::tuple<const char*, const char*, Stage>> stages{
      {"direct", "direct estimates per domain", ineq::run_direct},
      {"bootstrap", "bootstrap variances per domain", ineq::run_bootstrap},
      {"gvf", "smooth variances and build the area table", ineq::run_gvf},
      {"fit", "fit a Beta or Flexible Beta area model", ineq::run_fit},
      {"simulate", "design-based simulation", ineq::run_simulate},
      {"report", "plot-ready summary tables", ineq::run_report},
  };
  Stage chosen = nullptr;
  for (const auto& [name, help, fn] : stages) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->fallthrough();
    sub->callback([&chosen, fn = fn] { chosen = fn; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: InvalidArgument: " << one_line(e.what()) << "\n" << app.help();
    return 1;
  }

  try {
    chosen(build_config(flags));
  } catch (const ineq::Error& e) {
    std::cerr << "error: " << ineq::error_code_name(e.code()) << ": " << one_line(e.what()) << "\n";
    return ineq::is_numeric_failure(e.code()) ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: Internal: " << one_line(e.what()) << "\n";
    return 1;
  }
  return 0;
}
