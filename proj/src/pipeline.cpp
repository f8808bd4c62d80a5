#include "ineq/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "json.hpp"

#include "ineq/design.hpp"
#include "ineq/diagnostics.hpp"
#include "ineq/gvf.hpp"
#include "ineq/io.hpp"
#include "ineq/survey.hpp"

namespace ineq {

namespace fs = std::filesystem;
using nlohmann::json;

PipelineConfig default_config() {
  PipelineConfig c;
  c.sampler.algorithm = Algorithm::Hmc;
  c.simulation.sampler.algorithm = Algorithm::Hmc;
  c.simulation.sampler.chains = 2;
  c.simulation.sampler.iterations = 2000;
  c.simulation.sampler.warmup = 1000;
  c.simulation.priors.p_prior = PPrior::Beta22;
  return c;
}

namespace {

[[noreturn]] void bad_config(const std::string& what) {
  fail(ErrorCode::InvalidArgument, "config: " + what);
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) bad_config(where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) bad_config("unknown key '" + it.key() + "' in " + where);
  }
}

template <typename T>
T get(const json& j, const char* key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    bad_config("'" + std::string(key) + "' in " + where + " has the wrong type");
  }
}

PPrior parse_p_prior(const std::string& s) {
  if (s == "uniform") return PPrior::Uniform;
  if (s == "beta22" || s == "beta(2,2)") return PPrior::Beta22;
  bad_config("p_prior must be 'uniform' or 'beta22'");
}

void apply_sampler(const json& j, SamplerConfig& s, const std::string& where) {
  check_keys(j, {"chains", "iterations", "warmup", "algorithm", "target_accept", "max_leapfrog",
                 "integration_time", "seed"},
             where);
  if (j.contains("chains")) s.chains = get<int>(j, "chains", where);
  if (j.contains("iterations")) s.iterations = get<int>(j, "iterations", where);
  if (j.contains("warmup")) s.warmup = get<int>(j, "warmup", where);
  if (j.contains("algorithm")) s.algorithm = parse_algorithm(get<std::string>(j, "algorithm", where));
  if (j.contains("target_accept")) s.target_accept = get<double>(j, "target_accept", where);
  if (j.contains("max_leapfrog")) s.max_leapfrog = get<int>(j, "max_leapfrog", where);
  if (j.contains("integration_time")) s.integration_time = get<double>(j, "integration_time", where);
  if (j.contains("seed")) s.seed = get<std::uint64_t>(j, "seed", where);
}

void apply_priors(const json& j, PriorSpec& p) {
  check_keys(j, {"beta_sd", "sigma_v_scale", "p_prior"}, "priors");
  if (j.contains("beta_sd")) p.beta_sd = get<double>(j, "beta_sd", "priors");
  if (j.contains("sigma_v_scale")) p.sigma_v_scale = get<double>(j, "sigma_v_scale", "priors");
  if (j.contains("p_prior")) p.p_prior = parse_p_prior(get<std::string>(j, "p_prior", "priors"));
}

IndexSpec index_from_json(const json& j, IndexSpec current) {
  if (j.is_string()) return parse_index_spec(j.get<std::string>(), current.epsilon, current.alpha);
  check_keys(j, {"name", "epsilon", "alpha"}, "index");
  std::optional<double> eps, alpha;
  if (j.contains("epsilon")) eps = get<double>(j, "epsilon", "index");
  if (j.contains("alpha")) alpha = get<double>(j, "alpha", "index");
  return parse_index_spec(get<std::string>(j, "name", "index"), eps, alpha);
}

}  // namespace

void apply_config_json(const std::string& text, PipelineConfig& cfg) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    bad_config(std::string("invalid JSON: ") + e.what());
  }
  check_keys(j, {"microdata", "covariates", "population", "out", "take_all_strata", "index",
                 "bootstrap", "gvf", "model", "sampler", "seed", "simulation", "synthetic"},
             "top level");
  if (j.contains("microdata")) cfg.microdata = get<std::string>(j, "microdata", "top level");
  if (j.contains("covariates")) cfg.covariates = get<std::string>(j, "covariates", "top level");
  if (j.contains("population")) cfg.population = get<std::string>(j, "population", "top level");
  if (j.contains("out")) cfg.out = get<std::string>(j, "out", "top level");
  if (j.contains("take_all_strata")) {
    const auto v = get<std::vector<std::string>>(j, "take_all_strata", "top level");
    cfg.take_all_strata = {v.begin(), v.end()};
  }
  if (j.contains("index")) cfg.index = index_from_json(j["index"], cfg.index);
  if (j.contains("bootstrap")) {
    check_keys(j["bootstrap"], {"replicates"}, "bootstrap");
    cfg.bootstrap_replicates = get<int>(j["bootstrap"], "replicates", "bootstrap");
  }
  if (j.contains("gvf")) cfg.gvf = get<bool>(j, "gvf", "top level");
  if (j.contains("model")) {
    const json& m = j["model"];
    check_keys(m, {"model", "index", "priors", "covariates"}, "model");
    if (m.contains("model")) cfg.model = parse_model_kind(get<std::string>(m, "model", "model"));
    if (m.contains("index")) cfg.index = index_from_json(m["index"], cfg.index);
    if (m.contains("priors")) apply_priors(m["priors"], cfg.priors);
    if (m.contains("covariates")) {
      cfg.covariate_names = get<std::vector<std::string>>(m, "covariates", "model");
    }
  }
  if (j.contains("sampler")) apply_sampler(j["sampler"], cfg.sampler, "sampler");
  if (j.contains("seed")) cfg.seed = get<std::uint64_t>(j, "seed", "top level");
  if (j.contains("simulation")) {
    const json& s = j["simulation"];
    check_keys(s, {"replicates", "scenario", "models", "bootstrap_replicates", "psus_per_stratum",
                   "require_convergence", "sampler", "priors"},
               "simulation");
    SimConfig& sc = cfg.simulation;
    if (s.contains("replicates")) sc.replicates = get<int>(s, "replicates", "simulation");
    if (s.contains("scenario")) sc.scenario = parse_scenario(get<std::string>(s, "scenario", "simulation"));
    if (s.contains("models")) {
      sc.models.clear();
      for (const auto& m : get<std::vector<std::string>>(s, "models", "simulation")) {
        sc.models.push_back(parse_model_kind(m));
      }
    }
    if (s.contains("bootstrap_replicates")) {
      sc.bootstrap_replicates = get<int>(s, "bootstrap_replicates", "simulation");
    }
    if (s.contains("psus_per_stratum")) sc.psus_per_stratum = get<int>(s, "psus_per_stratum", "simulation");
    if (s.contains("require_convergence")) {
      sc.require_convergence = get<bool>(s, "require_convergence", "simulation");
    }
    if (s.contains("sampler")) apply_sampler(s["sampler"], sc.sampler, "simulation.sampler");
    if (s.contains("priors")) apply_priors(s["priors"], sc.priors);
  }
  if (j.contains("synthetic")) {
    const json& s = j["synthetic"];
    check_keys(s, {"domains", "regular_strata", "psus_per_stratum", "take_all_psus",
                   "households_per_psu", "mean_log_income", "phi2", "phi2_spread",
                   "household_share"},
               "synthetic");
    SyntheticSpec& p = cfg.synthetic;
    if (s.contains("domains")) p.domains = get<int>(s, "domains", "synthetic");
    if (s.contains("regular_strata")) p.regular_strata = get<int>(s, "regular_strata", "synthetic");
    if (s.contains("psus_per_stratum")) p.psus_per_stratum = get<int>(s, "psus_per_stratum", "synthetic");
    if (s.contains("take_all_psus")) p.take_all_psus = get<int>(s, "take_all_psus", "synthetic");
    if (s.contains("households_per_psu")) {
      p.households_per_psu = get<int>(s, "households_per_psu", "synthetic");
    }
    if (s.contains("mean_log_income")) p.mean_log_income = get<double>(s, "mean_log_income", "synthetic");
    if (s.contains("phi2")) p.phi2 = get<double>(s, "phi2", "synthetic");
    if (s.contains("phi2_spread")) p.phi2_spread = get<double>(s, "phi2_spread", "synthetic");
    if (s.contains("household_share")) p.household_share = get<double>(s, "household_share", "synthetic");
  }
}

void load_config(const fs::path& path, PipelineConfig& cfg) {
  apply_config_json(read_text(path), cfg);
  // relative paths in a config file are relative to the file
  const fs::path base = path.parent_path();
  for (fs::path* p : {&cfg.microdata, &cfg.covariates, &cfg.population, &cfg.out}) {
    if (!p->empty() && p->is_relative() && !base.empty()) *p = base / *p;
  }
}

namespace {

std::string dump(json j, const std::string& kind) {
  json out;
  out["schema"] = schema_tag(kind);
  for (auto it = j.begin(); it != j.end(); ++it) out[it.key()] = it.value();
  return out.dump(2) + "\n";
}

json read_json(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    fail(ErrorCode::SchemaMismatch, path.string() + ": invalid JSON");
  }
}

void check_schema(const CsvTable& t, const std::string& kind) {
  if (t.schema != schema_tag(kind)) {
    fail(ErrorCode::SchemaMismatch,
         t.source + ": expected schema " + schema_tag(kind) + ", found '" + t.schema + "'");
  }
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

SurveySample load_microdata(const PipelineConfig& cfg) {
  if (cfg.microdata.empty()) fail(ErrorCode::MissingInput, "no microdata given (--microdata)");
  return parse_microdata(cfg.microdata, cfg.take_all_strata);
}

}  // namespace

std::string direct_table(const SurveySample& s, const IndexSpec& spec) {
  spec.validate();
  CsvWriter w("direct", {"domain", "n_tilde", "n_hat", "weighted", "estimate", "out_of_range"});
  for (const auto& dom : s.domains()) {
    const DomainData d = extract_domain(s, dom);
    const AdjustedEstimate e = direct_estimate(d, spec);
    const Index n = (d.w.array() != 0.0).count();
    w.add_row({dom, std::to_string(n), format_number(d.w.sum()), format_number(e.weighted),
               format_number(e.value), e.out_of_range ? "1" : "0"});
  }
  return w.str();
}

void run_direct(const PipelineConfig& cfg) {
  const SurveySample s = load_microdata(cfg);
  write_atomic(cfg.out / "direct.csv", direct_table(s, cfg.index));
}

void run_bootstrap(const PipelineConfig& cfg) {
  if (cfg.gvf && cfg.bootstrap_replicates < 100) {
    fail(ErrorCode::InvalidArgument, "at least 100 bootstrap replicates are needed for the GVF");
  }
  const SurveySample s = load_microdata(cfg);
  const std::uint64_t seed = cfg.seed_or_default();
  const BootstrapResult b = bootstrap_variance(s, cfg.index, cfg.bootstrap_replicates, seed);
  CsvWriter w("bootstrap", {"domain", "estimate", "variance", "n_tilde", "n_hat", "failed_replicates"});
  for (size_t d = 0; d < b.domains.size(); ++d) {
    const Index i = static_cast<Index>(d);
    w.add_row({b.domains[d], format_number(b.estimate[i]), format_number(b.variance[i]),
               format_number(b.n_tilde[i]), format_number(b.n_hat[i]),
               std::to_string(b.failed[d])});
  }
  json meta;
  meta["index"] = cfg.index.label();
  meta["replicates"] = b.replicates;
  meta["seed"] = seed;
  write_atomic(cfg.out / "bootstrap.csv", w.str());
  write_atomic(cfg.out / "bootstrap.json", dump(meta, "bootstrap-meta"));
}

namespace {

IndexSpec index_from_label(const std::string& label) {
  // labels look like "gini", "atkinson(0.5)", "relative_entropy(2)"
  const auto open = label.find('(');
  if (open == std::string::npos) return parse_index_spec(label, std::nullopt, std::nullopt);
  const double param = std::stod(label.substr(open + 1));
  return parse_index_spec(label.substr(0, open), param, param);
}

}  // namespace

void run_gvf(const PipelineConfig& cfg) {
  const fs::path boot_path = cfg.out / "bootstrap.csv";
  if (!fs::exists(boot_path)) {
    fail(ErrorCode::MissingInput, "missing input " + boot_path.string() + " (run bootstrap first)");
  }
  if (cfg.covariates.empty()) fail(ErrorCode::MissingInput, "no covariates given (--covariates)");
  const CsvTable t = read_csv(boot_path);
  check_schema(t, "bootstrap");
  const json meta = read_json(cfg.out / "bootstrap.json");
  const IndexSpec spec = index_from_label(meta.at("index").get<std::string>());

  const Index D = static_cast<Index>(t.rows.size());
  std::vector<std::string> domains;
  Vec<double> y(D), v(D), n(D);
  const size_t c_dom = t.column("domain"), c_est = t.column("estimate"),
               c_var = t.column("variance"), c_n = t.column("n_tilde");
  for (Index d = 0; d < D; ++d) {
    const size_t r = static_cast<size_t>(d);
    domains.push_back(t.rows[r][c_dom]);
    y[d] = t.number(r, c_est);
    v[d] = t.number(r, c_var);
    n[d] = t.number(r, c_n);
  }
  const CovariateTable cov = read_covariates(cfg.covariates, cfg.covariate_names);
  const Matrix<double> x = cov.matrix(domains);

  json meta_out;
  meta_out["index"] = spec.label();
  meta_out["gvf"] = cfg.gvf;
  meta_out["covariates"] = cov.names;
  Vec<double> v_s = v, n_eff = n;
  if (cfg.gvf) {
    const GvfFit fit = gvf_fit(y, v, n, spec);
    v_s = fit.v_smoothed;
    n_eff = fit.n_eff;
    meta_out["psi_hat"] = fit.psi_hat;
    meta_out["pseudo_r2"] = fit.pseudo_r2;
    meta_out["used_domains"] = fit.used_domains;
  }
  std::vector<std::string> header{"domain", "y_direct", "v_raw", "v_smoothed", "n_tilde", "n_eff"};
  for (Index j = 0; j < x.cols(); ++j) header.push_back("x_" + std::to_string(j + 1));
  CsvWriter w("area-table", header);
  for (Index d = 0; d < D; ++d) {
    std::vector<std::string> row{domains[static_cast<size_t>(d)], format_number(y[d]),
                                 format_number(v[d]),  format_number(v_s[d]),
                                 format_number(n[d]),  format_number(n_eff[d])};
    for (Index j = 0; j < x.cols(); ++j) row.push_back(format_number(x(d, j)));
    w.add_row(row);
  }
  write_atomic(cfg.out / "area_table.csv", w.str());
  write_atomic(cfg.out / "gvf.json", dump(meta_out, "gvf"));
}

namespace {

struct AreaInput {
  AreaDataset data;
  Vec<double> y_raw;
  std::string index_label;
};

AreaInput load_area_table(const PipelineConfig& cfg) {
  const fs::path path = cfg.out / "area_table.csv";
  if (!fs::exists(path)) {
    fail(ErrorCode::MissingInput, "missing input " + path.string() + " (run gvf first)");
  }
  const CsvTable t = read_csv(path);
  check_schema(t, "area-table");
  std::vector<size_t> xcols;
  for (size_t i = 0; i < t.header.size(); ++i) {
    if (t.header[i].rfind("x_", 0) == 0) xcols.push_back(i);
  }
  const Index D = static_cast<Index>(t.rows.size());
  AreaInput in;
  in.data.y.resize(D);
  in.y_raw.resize(D);
  in.data.v.resize(D);
  in.data.n_tilde.resize(D);
  Matrix<double> cov(D, static_cast<Index>(xcols.size()));
  const size_t c_dom = t.column("domain"), c_y = t.column("y_direct"),
               c_v = t.column("v_smoothed"), c_n = t.column("n_tilde");
  for (Index d = 0; d < D; ++d) {
    const size_t r = static_cast<size_t>(d);
    in.data.domains.push_back(t.rows[r][c_dom]);
    in.y_raw[d] = t.number(r, c_y);
    in.data.y[d] = std::clamp(in.y_raw[d], kClampLow, kClampHigh);
    in.data.v[d] = t.number(r, c_v);
    in.data.n_tilde[d] = t.number(r, c_n);
    for (size_t j = 0; j < xcols.size(); ++j) cov(d, static_cast<Index>(j)) = t.number(r, xcols[j]);
  }
  in.data.x = standardized_design(cov);
  const fs::path meta = cfg.out / "gvf.json";
  in.index_label = fs::exists(meta) ? read_json(meta).value("index", "") : "";
  return in;
}

json summary_json(const QuantitySummary& s) {
  return json{{"name", s.name},          {"mean", s.mean},
              {"sd", s.sd},              {"q2.5", s.q025},
              {"q50", s.q50},            {"q97.5", s.q975},
              {"rhat", number_or_null(s.rhat)}, {"ess", number_or_null(s.ess)}};
}

}  // namespace

void run_fit(const PipelineConfig& cfg) {
  const AreaInput in = load_area_table(cfg);
  SamplerConfig sc = cfg.sampler;
  if (cfg.seed) sc.seed = *cfg.seed;
  const AreaFit fit = fit_area_model(cfg.model, in.data, cfg.priors, sc);
  const FitDiagnostics diag = diagnose(fit, in.data);
  const ConsistencyReport cons = consistency_report(in.data.y, fit.theta_mean, in.data.n_tilde);
  const std::string m = model_kind_name(cfg.model);
  const Index D = in.data.size();

  CsvWriter est("fit-estimates", {"domain", "y_direct", "v", "n_tilde", "theta_mean", "theta_sd",
                                  "q2.5", "q97.5", "cvr", "residual"});
  for (Index d = 0; d < D; ++d) {
    est.add_row({in.data.domains[static_cast<size_t>(d)], format_number(in.y_raw[d]),
                 format_number(in.data.v[d]), format_number(in.data.n_tilde[d]),
                 format_number(fit.theta_mean[d]), format_number(fit.theta_sd[d]),
                 format_number(fit.theta_lo[d]), format_number(fit.theta_hi[d]),
                 format_number(diag.cvr[d]), format_number(diag.residual[d])});
  }

  CsvWriter draws("draws", {"chain", "iter", "param", "value"});
  const PosteriorDraws& pd = fit.draws;
  for (int c = 0; c < pd.chains(); ++c) {
    for (int i = 0; i < pd.draws_per_chain(); ++i) {
      for (size_t j = 0; j < pd.param_names.size(); ++j) {
        draws.add_row({std::to_string(c), std::to_string(i), pd.param_names[j],
                       format_number(pd.params[static_cast<size_t>(c)](i, static_cast<Index>(j)))});
      }
      for (Index d = 0; d < D; ++d) {
        draws.add_row({std::to_string(c), std::to_string(i),
                       pd.generated_names[static_cast<size_t>(d)],
                       format_number(pd.generated[static_cast<size_t>(c)](i, d))});
      }
    }
  }

  json summary;
  summary["model"] = m;
  summary["index"] = in.index_label;
  summary["sampler"] = {{"algorithm", algorithm_name(sc.algorithm)}, {"chains", sc.chains},
                        {"iterations", sc.iterations}, {"warmup", sc.warmup}, {"seed", sc.seed}};
  summary["params"] = json::array();
  for (const auto& s : fit.summary.params) summary["params"].push_back(summary_json(s));
  summary["generated"] = json::array();
  for (const auto& s : fit.summary.generated) summary["generated"].push_back(summary_json(s));
  summary["converged"] = fit.summary.converged;

  json dj;
  dj["model"] = m;
  dj["looic"] = diag.looic;
  dj["looic_se"] = diag.looic_se;
  dj["acvr"] = diag.acvr;
  dj["max_rhat"] = number_or_null(diag.max_rhat);
  dj["min_ess"] = number_or_null(diag.min_ess);
  dj["converged"] = diag.converged;
  dj["divergences"] = diag.divergences;
  dj["out_of_range"] = diag.out_of_range;
  dj["residual_size_spearman"] = number_or_null(cons.spearman);
  if (!diag.converged) dj["warning"] = "R-hat above 1.05 for at least one parameter";

  write_atomic(cfg.out / ("fit_" + m + "_estimates.csv"), est.str());
  write_atomic(cfg.out / ("fit_" + m + "_draws.csv"), draws.str());
  write_atomic(cfg.out / ("fit_" + m + "_summary.json"), dump(summary, "fit-summary"));
  write_atomic(cfg.out / ("fit_" + m + "_diagnostics.json"), dump(dj, "diagnostics"));
}

void run_simulate(const PipelineConfig& cfg) {
  if (!cfg.seed) fail(ErrorCode::InvalidArgument, "simulate requires --seed");
  SimConfig sc = cfg.simulation;
  sc.seed = *cfg.seed;
  sc.index = cfg.index;

  Population pop;
  Matrix<double> cov;
  if (cfg.population.empty()) {
    SyntheticSpec sp = cfg.synthetic;
    sp.seed = mix64(*cfg.seed + 0x5eed);
    SyntheticPopulation synth = synthetic_population(sp);
    pop = std::move(synth.population);
    cov = synth.covariates;
  } else {
    if (cfg.covariates.empty()) fail(ErrorCode::MissingInput, "a population needs --covariates");
    pop = parse_population(cfg.population, cfg.take_all_strata);
    cov = read_covariates(cfg.covariates, cfg.covariate_names).matrix(pop.domains());
  }
  const SimResult r = run_design_simulation(pop, cov, sc);

  CsvWriter table("simulation", {"measure", "scenario", "estimator", "ARB%", "RB%", "RMSE%", "AEFF",
                                 "Coverage%", "used", "excluded"});
  for (const auto& e : r.estimators) {
    table.add_row({sc.index.label(), scenario_name(sc.scenario), e.estimator,
                   format_number(100.0 * e.mean_arb), format_number(100.0 * e.mean_rb),
                   format_number(100.0 * e.mean_rmse), format_number(e.aeff),
                   format_number(100.0 * e.mean_coverage), std::to_string(e.used),
                   std::to_string(e.excluded)});
  }
  CsvWriter dom("simulation-domains",
                {"domain", "estimator", "n_tilde", "theta", "rb", "mse", "rmse", "coverage"});
  for (const auto& e : r.estimators) {
    for (size_t d = 0; d < r.domains.size(); ++d) {
      const Index i = static_cast<Index>(d);
      dom.add_row({r.domains[d], e.estimator, format_number(r.mean_sample_size[i]),
                   format_number(r.theta[i]), format_number(e.rb[i]), format_number(e.mse[i]),
                   format_number(e.rmse[i]), format_number(e.coverage[i])});
    }
  }
  write_atomic(cfg.out / "simulation.csv", table.str());
  write_atomic(cfg.out / "simulation_domains.csv", dom.str());
}

namespace {

// Gaussian kernel density on a regular grid, Silverman bandwidth.
std::vector<std::pair<double, double>> kde(const Vec<double>& x, int points = 128) {
  const Index n = x.size();
  const double mean = x.mean();
  const double sd = n > 1 ? std::sqrt((x.array() - mean).square().sum() / double(n - 1)) : 0.0;
  const double iqr = quantile(x, 0.75) - quantile(x, 0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) spread = sd > 0.0 ? sd : 1e-3;
  const double h = 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
  const double lo = x.minCoeff() - 3.0 * h, hi = x.maxCoeff() + 3.0 * h;
  std::vector<std::pair<double, double>> out;
  for (int k = 0; k < points; ++k) {
    const double g = lo + (hi - lo) * k / (points - 1);
    const double dens =
        ((-0.5 * ((x.array() - g) / h).square()).exp()).sum() / (double(n) * h * std::sqrt(2.0 * M_PI));
    out.emplace_back(g, dens);
  }
  return out;
}

}  // namespace

void run_report(const PipelineConfig& cfg) {
  std::vector<std::pair<std::string, CsvTable>> fits;
  for (const char* m : {"beta", "fb"}) {
    const fs::path p = cfg.out / ("fit_" + std::string(m) + "_estimates.csv");
    if (fs::exists(p)) {
      CsvTable t = read_csv(p);
      check_schema(t, "fit-estimates");
      fits.emplace_back(m, std::move(t));
    }
  }
  if (fits.empty()) {
    fail(ErrorCode::MissingInput, "no fit outputs in " + cfg.out.string() + " (run fit first)");
  }

  CsvWriter scatter("report-scatter", {"domain", "model", "y_direct", "theta_hat", "n_tilde"});
  CsvWriter resid("report-residuals", {"domain", "model", "n_tilde", "residual"});
  CsvWriter cv("report-cv", {"domain", "model", "n_tilde", "cv_direct", "cv_model", "cvr"});
  CsvWriter dens("report-density", {"source", "x", "density"});
  bool direct_done = false;
  for (const auto& [m, t] : fits) {
    const size_t c_dom = t.column("domain"), c_y = t.column("y_direct"), c_v = t.column("v"),
                 c_n = t.column("n_tilde"), c_th = t.column("theta_mean"),
                 c_sd = t.column("theta_sd"), c_cvr = t.column("cvr"), c_res = t.column("residual");
    Vec<double> y(static_cast<Index>(t.rows.size())), th(y.size());
    for (size_t r = 0; r < t.rows.size(); ++r) {
      const double yd = t.number(r, c_y), v = t.number(r, c_v), n = t.number(r, c_n);
      const double thd = t.number(r, c_th), sd = t.number(r, c_sd);
      y[static_cast<Index>(r)] = yd;
      th[static_cast<Index>(r)] = thd;
      scatter.add_row({t.rows[r][c_dom], m, format_number(yd), format_number(thd), format_number(n)});
      resid.add_row({t.rows[r][c_dom], m, format_number(n), t.rows[r][c_res]});
      cv.add_row({t.rows[r][c_dom], m, format_number(n), format_number(std::sqrt(v) / yd),
                  format_number(sd / thd), t.rows[r][c_cvr]});
    }
    if (!direct_done) {
      for (const auto& [g, f] : kde(y)) dens.add_row({"direct", format_number(g), format_number(f)});
      direct_done = true;
    }
    for (const auto& [g, f] : kde(th)) dens.add_row({m, format_number(g), format_number(f)});
  }
  write_atomic(cfg.out / "report_scatter.csv", scatter.str());
  write_atomic(cfg.out / "report_residuals.csv", resid.str());
  write_atomic(cfg.out / "report_cv.csv", cv.str());
  write_atomic(cfg.out / "report_density.csv", dens.str());

  const fs::path fb_summary = cfg.out / "fit_fb_summary.json";
  if (fs::exists(fb_summary)) {
    const json s = read_json(fb_summary);
    std::map<std::string, std::map<std::string, double>> by_domain;
    double p_mean = std::numeric_limits<double>::quiet_NaN();
    for (const auto& g : s.at("generated")) {
      const std::string name = g.at("name");
      const double mean = g.at("mean");
      if (name == "p") p_mean = mean;
      const auto open = name.find('[');
      if (open == std::string::npos) continue;
      const std::string base = name.substr(0, open);
      const std::string dom = name.substr(open + 1, name.size() - open - 2);
      by_domain[dom][base] = mean;
    }
    CsvWriter mix("report-mixture", {"domain", "lambda1", "lambda2", "theta", "p"});
    for (const auto& [dom, vals] : by_domain) {
      mix.add_row({dom, format_number(vals.at("lambda1")), format_number(vals.at("lambda2")),
                   format_number(vals.at("theta")), format_number(p_mean)});
    }
    write_atomic(cfg.out / "report_mixture.csv", mix.str());
  }

  const fs::path sim = cfg.out / "simulation_domains.csv";
  if (fs::exists(sim)) {
    const CsvTable t = read_csv(sim);
    check_schema(t, "simulation-domains");
    CsvWriter w("report-coverage", {"domain", "estimator", "n_tilde", "coverage", "mse"});
    for (size_t r = 0; r < t.rows.size(); ++r) {
      w.add_row({t.rows[r][t.column("domain")], t.rows[r][t.column("estimator")],
                 t.rows[r][t.column("n_tilde")], t.rows[r][t.column("coverage")],
                 t.rows[r][t.column("mse")]});
    }
    write_atomic(cfg.out / "report_coverage.csv", w.str());
  }
}

}  // namespace ineq
