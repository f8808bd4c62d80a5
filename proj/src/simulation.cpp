#include "ineq/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <random>

#include "ineq/gvf.hpp"
#include "ineq/parallel.hpp"
#include "ineq/rng.hpp"

namespace ineq {

Scenario parse_scenario(const std::string& name) {
  if (name == "rate3") return Scenario::Rate3;
  if (name == "rate5") return Scenario::Rate5;
  if (name == "evt") return Scenario::Evt;
  fail(ErrorCode::InvalidArgument, "unknown scenario '" + name + "' (rate3, rate5, evt)");
}

std::string scenario_name(Scenario s) {
  switch (s) {
    case Scenario::Rate3: return "rate3";
    case Scenario::Rate5: return "rate5";
    case Scenario::Evt: return "evt";
  }
  return "?";
}

namespace {

std::string padded(int v, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%0*d", width, v);
  return buf;
}

}  // namespace

SyntheticPopulation synthetic_population(const SyntheticSpec& spec) {
  if (spec.domains < 1 || spec.regular_strata < 0 || spec.psus_per_stratum < 2 ||
      spec.take_all_psus < 1 || spec.households_per_psu < 1 || !(spec.phi2 > 0.0) ||
      !(spec.household_share >= 0.0 && spec.household_share < 1.0)) {
    fail(ErrorCode::InvalidArgument, "invalid synthetic population settings");
  }
  SyntheticPopulation out;
  out.covariates.resize(spec.domains, 2);
  out.phi2.resize(spec.domains);
  const double rho = spec.household_share;
  for (int d = 0; d < spec.domains; ++d) {
    CounterRng rng(spec.seed, 0x706f70ULL, static_cast<std::uint64_t>(d));
    std::normal_distribution<double> normal;
    const std::string dom = "D" + padded(d + 1, 3);
    out.domains.push_back(dom);
    const double x1 = normal(rng), x2 = normal(rng), e = normal(rng);
    out.covariates(d, 0) = x1;
    out.covariates(d, 1) = x2;
    const double phi2 = spec.phi2 * std::exp(spec.phi2_spread * (0.8 * x1 + 0.6 * e));
    out.phi2[d] = phi2;
    const double mu = spec.mean_log_income + 0.3 * x2;
    const double sd = std::sqrt(phi2);
    const double size_factor = std::exp(-1.2 + 2.0 * rng.uniform());

    auto add_stratum = [&](const std::string& sid, int psus) {
      for (int p = 0; p < psus; ++p) {
        const std::string pid = sid + "-P" + padded(p, 2);
        const double jitter = 0.7 + 0.6 * rng.uniform();
        const int n_hh = std::max(
            4, static_cast<int>(std::lround(spec.households_per_psu * size_factor * jitter)));
        for (int h = 0; h < n_hh; ++h) {
          const std::string hid = pid + "-H" + padded(h, 3);
          const double u = rng.uniform();
          const int members = u < 0.3 ? 1 : u < 0.6 ? 2 : u < 0.8 ? 3 : 4;
          const double shared = normal(rng);
          for (int k = 0; k < members; ++k) {
            const double g = std::sqrt(rho) * shared + std::sqrt(1.0 - rho) * normal(rng);
            out.population.units.push_back(
                {hid + "-" + std::to_string(k), hid, dom, sid, pid, std::exp(mu + sd * g)});
          }
        }
      }
    };
    const std::string take_all = dom + "-T";
    out.population.take_all_strata.insert(take_all);
    add_stratum(take_all, spec.take_all_psus);
    for (int s = 0; s < spec.regular_strata; ++s) {
      add_stratum(dom + "-S" + std::to_string(s), spec.psus_per_stratum);
    }
  }
  return out;
}

Population winsorize(const Population& pop, double tail) {
  if (!(tail >= 0.0 && tail < 0.5)) fail(ErrorCode::InvalidArgument, "tail must be in [0, 0.5)");
  Population out = pop;
  std::map<std::string, std::pair<double, double>> bounds;
  for (const auto& d : pop.domains()) {
    const Vec<double> z = pop.domain_incomes(d);
    bounds[d] = {quantile(z, tail), quantile(z, 1.0 - tail)};
  }
  for (auto& u : out.units) {
    const auto& [lo, hi] = bounds[u.domain_id];
    u.income = std::clamp(u.income, lo, hi);
  }
  return out;
}

Vec<double> population_theta(const Population& pop, const std::vector<std::string>& domains,
                             const IndexSpec& spec) {
  Vec<double> theta(static_cast<Index>(domains.size()));
  for (size_t d = 0; d < domains.size(); ++d) {
    theta[static_cast<Index>(d)] = index_iid(pop.domain_incomes(domains[d]), spec);
  }
  return theta;
}

void SimConfig::validate() const {
  if (replicates < 2) fail(ErrorCode::InvalidArgument, "simulation needs at least 2 replicates");
  if (bootstrap_replicates < 2) fail(ErrorCode::InvalidArgument, "bootstrap needs >= 2 replicates");
  if (psus_per_stratum < 2) fail(ErrorCode::InvalidArgument, "need >= 2 PSUs per stratum");
  index.validate();
  sampler.validate();
  priors.validate();
}

double SimConfig::sampling_rate() const { return scenario == Scenario::Rate3 ? 0.03 : 0.05; }

EstimatorMetrics compute_metrics(const Vec<double>& theta, const Matrix<double>& estimates,
                                 const Matrix<double>& lower, const Matrix<double>& upper,
                                 const std::vector<bool>& valid, const Vec<double>& reference_mse) {
  const Index D = theta.size(), S = estimates.rows();
  if (estimates.cols() != D) fail(ErrorCode::LengthMismatch, "estimates do not match theta");
  const bool intervals = lower.size() > 0 || upper.size() > 0;
  if (intervals && (lower.rows() != S || upper.rows() != S || lower.cols() != D ||
                    upper.cols() != D)) {
    fail(ErrorCode::LengthMismatch, "interval bounds do not match the estimates");
  }
  if (!valid.empty() && static_cast<Index>(valid.size()) != S) {
    fail(ErrorCode::LengthMismatch, "validity flags do not match the replicates");
  }
  if (reference_mse.size() != 0 && reference_mse.size() != D) {
    fail(ErrorCode::LengthMismatch, "reference MSE does not match theta");
  }
  for (Index d = 0; d < D; ++d) {
    if (!(theta[d] > 0.0)) fail(ErrorCode::DomainError, "population values must be positive");
  }

  EstimatorMetrics m;
  m.rb = Vec<double>::Zero(D);
  m.mse = Vec<double>::Zero(D);
  m.coverage = Vec<double>::Zero(D);
  for (Index s = 0; s < S; ++s) {
    if (!valid.empty() && !valid[static_cast<size_t>(s)]) {
      ++m.excluded;
      continue;
    }
    ++m.used;
    for (Index d = 0; d < D; ++d) {
      const double e = estimates(s, d);
      m.rb[d] += e / theta[d] - 1.0;
      m.mse[d] += (e - theta[d]) * (e - theta[d]);
      if (intervals && lower(s, d) <= theta[d] && theta[d] <= upper(s, d)) m.coverage[d] += 1.0;
    }
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (m.used == 0) {
    m.rb.setConstant(nan);
    m.mse.setConstant(nan);
    m.coverage.setConstant(nan);
  } else {
    m.rb /= m.used;
    m.mse /= m.used;
    m.coverage /= m.used;
  }
  m.coverage_defined = intervals && m.used > 0;
  if (!m.coverage_defined) m.coverage.setConstant(nan);
  m.arb = m.rb.cwiseAbs();
  m.rmse = m.mse.array() / theta.array().square();
  m.mean_rb = m.rb.mean();
  m.mean_arb = m.arb.mean();
  m.mean_rmse = m.rmse.mean();
  m.mean_coverage = m.coverage.mean();
  const double own = m.mse.sum();
  if (reference_mse.size() == 0) {
    m.aeff = m.used > 0 ? 1.0 : nan;
  } else {
    m.aeff = own > 0.0 ? std::sqrt(reference_mse.sum() / own)
                       : std::numeric_limits<double>::infinity();
  }
  return m;
}

namespace {

struct ReplicateOutput {
  // row 0 direct, then one row per model
  std::vector<Vec<double>> est, lo, hi;
  std::vector<bool> ok;
  Vec<double> n_tilde;
};

}  // namespace

SimResult run_design_simulation(const Population& pop_in, const Matrix<double>& covariates,
                                const SimConfig& cfg) {
  cfg.validate();
  pop_in.validate();
  const Population pop = cfg.scenario == Scenario::Evt ? winsorize(pop_in) : pop_in;
  const PopulationFrame frame = build_frame(pop);

  SimResult res;
  res.scenario = cfg.scenario;
  res.index = cfg.index;
  res.domains = pop.domains();
  const Index D = static_cast<Index>(res.domains.size());
  if (covariates.rows() != D) fail(ErrorCode::LengthMismatch, "one covariate row per domain needed");
  res.theta = population_theta(pop, res.domains, cfg.index);
  const Matrix<double> x = standardized_design(covariates);
  const DomainSizes sizes = pop.domain_sizes();

  const size_t E = 1 + cfg.models.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<ReplicateOutput> outs(static_cast<size_t>(cfg.replicates));

  parallel_for(cfg.replicates, [&](int s) {
    ReplicateOutput& o = outs[static_cast<size_t>(s)];
    o.est.assign(E, Vec<double>::Constant(D, nan));
    o.lo = o.est;
    o.hi = o.est;
    o.ok.assign(E, false);
    o.n_tilde = Vec<double>::Constant(D, nan);
    const std::uint64_t rs = mix64(cfg.seed ^ mix64(static_cast<std::uint64_t>(s) + 1));

    BootstrapResult boot;
    try {
      const SurveySample sample =
          draw_sample(frame, DesignSpec{cfg.sampling_rate(), cfg.psus_per_stratum, rs});
      boot = bootstrap_variance(sample, cfg.index, cfg.bootstrap_replicates, mix64(rs + 1), sizes);
    } catch (const Error&) {
      return;
    }
    if (boot.domains != res.domains) return;
    o.n_tilde = boot.n_tilde;
    const Vec<double>& y = boot.estimate;
    if (y.allFinite() && boot.variance.allFinite()) {
      o.est[0] = y;
      const Vec<double> half = 1.959963984540054 * boot.variance.cwiseSqrt();
      o.lo[0] = y - half;
      o.hi[0] = y + half;
      o.ok[0] = true;
    } else {
      return;
    }

    AreaDataset data;
    data.domains = res.domains;
    data.y = y.unaryExpr([](double v) { return std::clamp(v, kClampLow, kClampHigh); });
    data.x = x;
    data.n_tilde = boot.n_tilde;
    try {
      data.v = gvf_fit(y, boot.variance, boot.n_tilde, cfg.index).v_smoothed;
      data.validate();
    } catch (const Error&) {
      return;
    }
    for (size_t k = 0; k < cfg.models.size(); ++k) {
      SamplerConfig sc = cfg.sampler;
      sc.seed = mix64(rs + 2 + k);
      try {
        const AreaFit fit = fit_area_model(cfg.models[k], data, cfg.priors, sc);
        if (cfg.require_convergence && !fit.summary.converged) continue;
        o.est[k + 1] = fit.theta_mean;
        o.lo[k + 1] = fit.theta_lo;
        o.hi[k + 1] = fit.theta_hi;
        o.ok[k + 1] = true;
      } catch (const Error&) {
      }
    }
  });

  const Index S = cfg.replicates;
  res.mean_sample_size = Vec<double>::Zero(D);
  Index counted = 0;
  for (const auto& o : outs) {
    if (o.n_tilde.allFinite()) {
      res.mean_sample_size += o.n_tilde;
      ++counted;
    }
  }
  if (counted > 0) res.mean_sample_size /= static_cast<double>(counted);

  Vec<double> direct_mse;
  for (size_t e = 0; e < E; ++e) {
    Matrix<double> est(S, D), lo(S, D), hi(S, D);
    std::vector<bool> valid(static_cast<size_t>(S));
    for (Index s = 0; s < S; ++s) {
      const auto& o = outs[static_cast<size_t>(s)];
      est.row(s) = o.est[e].transpose();
      lo.row(s) = o.lo[e].transpose();
      hi.row(s) = o.hi[e].transpose();
      valid[static_cast<size_t>(s)] = o.ok[e];
    }
    EstimatorMetrics m = compute_metrics(res.theta, est, lo, hi, valid, direct_mse);
    m.estimator = e == 0 ? "direct" : model_kind_name(cfg.models[e - 1]);
    if (e == 0) direct_mse = m.mse;
    res.estimators.push_back(std::move(m));
  }
  return res;
}

}  // namespace ineq
