#include "doctest.h"

#include "ineq/mcmc.hpp"
#include "test_util.hpp"

using namespace ineq;

namespace {

Target standard_normal(int dim) {
  Target t;
  t.dim = dim;
  for (int i = 0; i < dim; ++i) t.param_names.push_back("x" + std::to_string(i));
  t.log_density = [](const Vec<double>& q) { return -0.5 * q.squaredNorm(); };
  t.log_density_gradient = [](const Vec<double>& q, Vec<double>& g) {
    g = -q;
    return -0.5 * q.squaredNorm();
  };
  return t;
}

// Beta(3, 7) on the logit scale, with p reported as a generated quantity.
Target beta_3_7() {
  Target t;
  t.dim = 1;
  t.param_names = {"logit_p"};
  auto lp = [](double u) { return 3.0 * log_inv_logit(u) + 7.0 * log_inv_logit(-u); };
  t.log_density = [lp](const Vec<double>& q) { return lp(q[0]); };
  t.log_density_gradient = [lp](const Vec<double>& q, Vec<double>& g) {
    g.resize(1);
    g[0] = 3.0 - 10.0 * inv_logit(q[0]);
    return lp(q[0]);
  };
  t.generated_names = {"p"};
  t.generated = [](const Vec<double>& q, Vec<double>& out) {
    out.resize(1);
    out[0] = inv_logit(q[0]);
  };
  return t;
}

SamplerConfig config(Algorithm a, int chains, int iterations, int warmup, std::uint64_t seed) {
  SamplerConfig c;
  c.algorithm = a;
  c.chains = chains;
  c.iterations = iterations;
  c.warmup = warmup;
  c.seed = seed;
  return c;
}

std::vector<Vec<double>> iid_chains(CounterRng& rng, int m, int n, double shift_step = 0.0) {
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<Vec<double>> out;
  for (int c = 0; c < m; ++c) {
    Vec<double> x(n);
    for (int i = 0; i < n; ++i) x[i] = z(rng) + shift_step * c;
    out.push_back(x);
  }
  return out;
}

}  // namespace

TEST_CASE("samplers recover a standard normal") {
  for (Algorithm a : {Algorithm::AdaptiveMetropolis, Algorithm::Hmc}) {
    CAPTURE(algorithm_name(a));
    const PosteriorDraws d = run_sampler(standard_normal(3), config(a, 4, 5000, 2000, 61));
    CHECK(d.chains() == 4);
    CHECK(d.draws_per_chain() == 3000);
    for (int j = 0; j < 3; ++j) {
      const QuantitySummary s = summarize_quantity("x", d.param_chains(j));
      CHECK(std::abs(s.mean) < 0.05);
      CHECK(s.sd > 0.95);
      CHECK(s.sd < 1.05);
      CHECK(s.rhat < 1.01);
    }
  }
}

TEST_CASE("conjugate Beta posterior mean") {
  for (Algorithm a : {Algorithm::AdaptiveMetropolis, Algorithm::Hmc}) {
    CAPTURE(algorithm_name(a));
    const PosteriorDraws d = run_sampler(beta_3_7(), config(a, 4, 5000, 2000, 62));
    const Vec<double> p = d.generated_pooled(0);
    CHECK(std::abs(p.mean() - 0.3) < 0.02);
    const PosteriorSummary s = summarize(d);
    CHECK(s.generated.size() == 1);
    CHECK(s.generated[0].q025 < 0.3);
    CHECK(s.generated[0].q975 > 0.3);
  }
}

TEST_CASE("sampler runs are reproducible") {
  for (Algorithm a : {Algorithm::AdaptiveMetropolis, Algorithm::Hmc}) {
    const SamplerConfig c = config(a, 2, 400, 200, 63);
    const PosteriorDraws x = run_sampler(standard_normal(2), c);
    const PosteriorDraws y = run_sampler(standard_normal(2), c);
    for (int k = 0; k < 2; ++k) CHECK(x.params[k] == y.params[k]);
    const PosteriorDraws z = run_sampler(standard_normal(2), config(a, 2, 400, 200, 64));
    CHECK_FALSE(x.params[0] == z.params[0]);
  }
}

TEST_CASE("sampler failures") {
  Target dead = standard_normal(2);
  dead.log_density = [](const Vec<double>&) { return kNegInf; };
  CHECK_ERROR_CODE(run_sampler(dead, config(Algorithm::AdaptiveMetropolis, 1, 100, 50, 1)),
                   ErrorCode::NonFiniteInit);

  // finite only at the origin, so every proposal is rejected
  Target point = standard_normal(2);
  point.log_density = [](const Vec<double>& q) { return q.squaredNorm() == 0.0 ? 0.0 : kNegInf; };
  point.initial_point = [](CounterRng&) { return Vec<double>::Zero(2); };
  CHECK_ERROR_CODE(run_sampler(point, config(Algorithm::AdaptiveMetropolis, 1, 400, 200, 1)),
                   ErrorCode::AllRejected);

  Target no_grad = standard_normal(2);
  no_grad.log_density_gradient = nullptr;
  CHECK_ERROR_CODE(run_sampler(no_grad, config(Algorithm::Hmc, 1, 100, 50, 1)),
                   ErrorCode::InvalidArgument);
  CHECK_ERROR_CODE(config(Algorithm::Hmc, 1, 100, 100, 1).validate(), ErrorCode::InvalidArgument);
}

TEST_CASE("split R-hat") {
  CounterRng rng(65);
  const double iid = rhat(iid_chains(rng, 4, 1000));
  CHECK(iid > 0.99);
  CHECK(iid < 1.01);
  CHECK(rhat(iid_chains(rng, 4, 1000, 3.0)) > 1.5);
  // a single chain is split in halves, so a trend shows up
  Vec<double> trend = Vec<double>::LinSpaced(400, 0.0, 10.0);
  CHECK(rhat({trend}) > 1.5);
  CHECK_ERROR_CODE(rhat(std::vector<Vec<double>>{}), ErrorCode::TooFewChains);
  CHECK_ERROR_CODE(rhat({Vec<double>::Zero(3)}), ErrorCode::TooFewDraws);
}

TEST_CASE("effective sample size") {
  CounterRng rng(66);
  CHECK(ess(iid_chains(rng, 4, 1000)) == doctest::Approx(4000.0).epsilon(0.10));

  std::normal_distribution<double> z(0.0, 1.0);
  const double rho = 0.9;
  std::vector<Vec<double>> ar;
  for (int c = 0; c < 4; ++c) {
    Vec<double> x(5000);
    x[0] = z(rng) / std::sqrt(1 - rho * rho);
    for (int i = 1; i < 5000; ++i) x[i] = rho * x[i - 1] + z(rng);
    ar.push_back(x);
  }
  const double expected = 20000.0 * (1 - rho) / (1 + rho);
  CHECK(ess(ar) == doctest::Approx(expected).epsilon(0.25));

  CHECK(std::isnan(ess({Vec<double>::Constant(200, 2.0), Vec<double>::Constant(200, 2.0)})));
  CHECK_ERROR_CODE(ess({Vec<double>::Zero(50)}), ErrorCode::TooFewDraws);
  CHECK_ERROR_CODE(ess(std::vector<Vec<double>>{}), ErrorCode::TooFewChains);
}

TEST_CASE("quantiles") {
  const Vec<double> x = ineq::test::vec({4, 1, 3, 2});
  CHECK(quantile(x, 0.5) == doctest::Approx(2.5));
  CHECK(quantile(x, 0.25) == doctest::Approx(1.75));
  CHECK(quantile(x, 0.0) == 1.0);
  CHECK(quantile(x, 1.0) == 4.0);
  CounterRng rng(67);
  const Vec<double> y = iid_chains(rng, 1, 500)[0];
  double prev = -1e300;
  for (double p = 0.0; p <= 1.0; p += 0.05) {
    const double q = quantile(y, p);
    CHECK(q >= prev);
    prev = q;
  }
  CHECK_ERROR_CODE(quantile(Vec<double>(), 0.5), ErrorCode::EmptyOrDegenerate);
}
