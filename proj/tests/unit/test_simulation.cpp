#include "doctest.h"

#include "ineq/simulation.hpp"
#include "test_util.hpp"

using namespace ineq;
using ineq::test::vec;

TEST_CASE("metrics for perfect and scaled estimates") {
  const Vec<double> theta = vec({0.1, 0.2, 0.4});
  Matrix<double> est(5, 3);
  for (Index s = 0; s < 5; ++s) est.row(s) = theta.transpose();
  const EstimatorMetrics m = compute_metrics(theta, est, {}, {});
  CHECK(m.mean_rb == 0.0);
  CHECK(m.mean_arb == 0.0);
  CHECK(m.mean_rmse == 0.0);
  CHECK_FALSE(m.coverage_defined);
  CHECK(std::isnan(m.mean_coverage));
  CHECK(m.aeff == 1.0);
  CHECK(m.used == 5);

  const EstimatorMetrics up = compute_metrics(theta, 1.1 * est, {}, {});
  for (Index d = 0; d < 3; ++d) {
    CHECK(up.rb[d] == doctest::Approx(0.10).epsilon(1e-12));
    CHECK(up.arb[d] == doctest::Approx(0.10).epsilon(1e-12));
    CHECK(up.mse[d] == doctest::Approx(0.01 * theta[d] * theta[d]).epsilon(1e-12));
  }
}

TEST_CASE("coverage and exclusions") {
  const Vec<double> theta = vec({0.1, 0.2});
  const Matrix<double> est = Matrix<double>::Constant(4, 2, 0.15);
  const Matrix<double> lo = Matrix<double>::Zero(4, 2);
  Matrix<double> hi = Matrix<double>::Ones(4, 2);
  EstimatorMetrics m = compute_metrics(theta, est, lo, hi);
  CHECK(m.coverage_defined);
  CHECK(m.mean_coverage == 1.0);

  hi(0, 0) = 0.05;  // one miss in domain 0
  m = compute_metrics(theta, est, lo, hi);
  CHECK(m.coverage[0] == doctest::Approx(0.75));
  CHECK(m.coverage[1] == 1.0);

  m = compute_metrics(theta, est, lo, hi, {false, true, true, true});
  CHECK(m.used == 3);
  CHECK(m.excluded == 1);
  CHECK(m.coverage[0] == 1.0);

  CHECK_ERROR_CODE(compute_metrics(theta, Matrix<double>::Zero(4, 3), {}, {}),
                   ErrorCode::LengthMismatch);
  CHECK_ERROR_CODE(compute_metrics(theta, est, lo, Matrix<double>::Ones(3, 2)),
                   ErrorCode::LengthMismatch);
  CHECK_ERROR_CODE(compute_metrics(theta, est, {}, {}, {true}), ErrorCode::LengthMismatch);
}

TEST_CASE("property: metric invariants") {
  CounterRng rng(81);
  std::normal_distribution<double> z(0.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    const Index D = 6, S = 30;
    Vec<double> theta(D);
    for (Index d = 0; d < D; ++d) theta[d] = 0.05 + 0.4 * rng.uniform();
    Matrix<double> est(S, D), lo(S, D), hi(S, D), est2(S, D);
    for (Index s = 0; s < S; ++s) {
      for (Index d = 0; d < D; ++d) {
        est(s, d) = theta[d] * (1.0 + 0.2 * z(rng));
        est2(s, d) = theta[d] * (1.0 + 0.1 * z(rng));
        lo(s, d) = est(s, d) - 0.05;
        hi(s, d) = est(s, d) + 0.05;
      }
    }
    const EstimatorMetrics direct = compute_metrics(theta, est, lo, hi);
    const EstimatorMetrics model = compute_metrics(theta, est2, lo, hi, {}, direct.mse);
    for (const auto* m : {&direct, &model}) {
      CHECK((m->arb - m->rb.cwiseAbs()).cwiseAbs().maxCoeff() == 0.0);
      CHECK(m->mse.minCoeff() >= 0.0);
      CHECK(m->coverage.minCoeff() >= 0.0);
      CHECK(m->coverage.maxCoeff() <= 1.0);
    }
    CHECK(model.aeff > 0.0);
    CHECK((model.aeff > 1.0) == (model.mse.sum() < direct.mse.sum()));
    CHECK(compute_metrics(theta, est, lo, hi, {}, direct.mse).aeff == doctest::Approx(1.0));

    // reordering domains leaves the averages unchanged
    Eigen::PermutationMatrix<Eigen::Dynamic> perm(D);
    perm.setIdentity();
    std::reverse(perm.indices().data(), perm.indices().data() + D);
    const Vec<double> theta_p = perm * theta;
    const Matrix<double> est_p = est * perm.transpose(), lo_p = lo * perm.transpose(),
                         hi_p = hi * perm.transpose();
    const EstimatorMetrics p = compute_metrics(theta_p, est_p, lo_p, hi_p);
    CHECK(p.mean_rb == doctest::Approx(direct.mean_rb).epsilon(1e-12));
    CHECK(p.mean_rmse == doctest::Approx(direct.mean_rmse).epsilon(1e-12));
    CHECK(p.mean_coverage == doctest::Approx(direct.mean_coverage).epsilon(1e-12));
  }
}

TEST_CASE("synthetic population layout") {
  SyntheticSpec spec;
  spec.domains = 6;
  spec.households_per_psu = 6;
  spec.seed = 3;
  const SyntheticPopulation a = synthetic_population(spec);
  const SyntheticPopulation b = synthetic_population(spec);
  CHECK(a.population.units == b.population.units);
  CHECK(a.domains.size() == 6);
  CHECK(a.covariates.rows() == 6);
  CHECK(a.covariates.cols() == 2);
  CHECK(a.population.take_all_strata.size() == 6);
  for (const auto& u : a.population.units) CHECK(u.income > 0.0);

  const Population w = winsorize(a.population);
  CHECK(w.units.size() == a.population.units.size());
  CHECK_ERROR_CODE(winsorize(a.population, 0.6), ErrorCode::InvalidArgument);
}

TEST_CASE("small design-based simulation end to end") {
  SyntheticSpec spec;
  spec.domains = 8;
  spec.households_per_psu = 8;
  spec.seed = 4;
  const SyntheticPopulation pop = synthetic_population(spec);
  SimConfig cfg;
  cfg.replicates = 3;
  cfg.bootstrap_replicates = 20;
  cfg.models = {ModelKind::Beta};
  cfg.seed = 9;
  cfg.sampler.chains = 2;
  cfg.sampler.iterations = 400;
  cfg.sampler.warmup = 200;
  cfg.sampler.algorithm = Algorithm::Hmc;
  cfg.require_convergence = false;
  const SimResult r = run_design_simulation(pop.population, pop.covariates, cfg);
  REQUIRE(r.estimators.size() == 2);
  CHECK(r.estimators[0].aeff == 1.0);
  CHECK(r.theta.size() == 8);
  CHECK(r.estimators[1].used + r.estimators[1].excluded == 3);
  CHECK(r.estimators[1].aeff > 0.0);
  CHECK((r.mean_sample_size.array() > 0.0).all());

  cfg.replicates = 1;
  CHECK_ERROR_CODE(run_design_simulation(pop.population, pop.covariates, cfg),
                   ErrorCode::InvalidArgument);
}
