#include "doctest.h"

#include "ineq/diagnostics.hpp"
#include "test_util.hpp"

using namespace ineq;
using ineq::test::vec;

TEST_CASE("coefficient of variation reduction") {
  const Vec<double> flat = Vec<double>::Constant(10, 0.2);
  CHECK(cvr(0.2, 0.0004, flat) == doctest::Approx(1.0));
  // two draws at 0.18 and 0.22: mean 0.2, sd 0.02 * sqrt(2)
  const Vec<double> two = vec({0.18, 0.22});
  CHECK(cvr(0.2, 0.0008, two) == doctest::Approx(0.0).scale(1.0));
  CHECK(cvr(0.2, 0.0002, two) == doctest::Approx(-1.0));
  CHECK_ERROR_CODE(cvr(0.2, 0.0, two), ErrorCode::DegenerateDirect);
  CHECK_ERROR_CODE(cvr(0.2, -1.0, two), ErrorCode::DomainError);
  CHECK_ERROR_CODE(cvr(0.2, 0.01, Vec<double>()), ErrorCode::EmptyOrDegenerate);
}

TEST_CASE("LOO on constant log-likelihoods") {
  Matrix<double> ll(20, 3);
  ll.col(0).setConstant(-1.0);
  ll.col(1).setConstant(-2.0);
  ll.col(2).setConstant(-3.0);
  const LooResult r = loo_ic(ll);
  CHECK(r.elpd[0] == doctest::Approx(-1.0));
  CHECK(r.looic == doctest::Approx(12.0));
  CHECK(r.se == doctest::Approx(2.0 * std::sqrt(3.0) * 1.0));
  CHECK(r.reliable);
}

TEST_CASE("LOO boundaries") {
  Matrix<double> one(1, 4);
  one << -1.0, -0.5, -2.0, -0.3;
  const LooResult r = loo_ic(one);
  CHECK_FALSE(r.reliable);
  CHECK(r.looic == doctest::Approx(2.0 * 3.8));

  Matrix<double> dead = Matrix<double>::Constant(5, 2, -1.0);
  dead.col(1).setConstant(kNegInf);
  CHECK_ERROR_CODE(loo_ic(dead), ErrorCode::DegenerateWeights);
  CHECK_ERROR_CODE(loo_ic(Matrix<double>(0, 3)), ErrorCode::EmptyOrDegenerate);
}

TEST_CASE("property: LOO is invariant to domain order and identical models tie") {
  CounterRng rng(71);
  std::normal_distribution<double> z(0.0, 1.0);
  Matrix<double> ll(300, 12);
  for (Index i = 0; i < ll.rows(); ++i)
    for (Index j = 0; j < ll.cols(); ++j) ll(i, j) = -1.0 - 0.3 * std::abs(z(rng));
  const LooResult a = loo_ic(ll);
  const LooResult b = loo_ic(ll);
  CHECK(a.looic == b.looic);
  Matrix<double> perm = ll;
  for (Index j = 0; j < ll.cols(); ++j) perm.col(j) = ll.col(ll.cols() - 1 - j);
  const LooResult c = loo_ic(perm);
  CHECK(c.looic == doctest::Approx(a.looic).epsilon(1e-13));
  CHECK(c.se == doctest::Approx(a.se).epsilon(1e-12));
  CHECK(c.elpd[0] == doctest::Approx(a.elpd[11]).epsilon(1e-14));
}

TEST_CASE("LOO prefers the model that generated the data") {
  CounterRng rng(72);
  std::normal_distribution<double> z(0.0, 1.0);
  const Index D = 40, S = 400;
  Vec<double> y(D);
  for (Index d = 0; d < D; ++d) y[d] = z(rng);
  auto loglik = [&](double centre) {
    Matrix<double> ll(S, D);
    for (Index s = 0; s < S; ++s) {
      const double mu = centre + 0.1 * z(rng);
      for (Index d = 0; d < D; ++d) ll(s, d) = -0.5 * (y[d] - mu) * (y[d] - mu) - 0.9189385332;
    }
    return ll;
  };
  CHECK(loo_ic(loglik(0.0)).looic < loo_ic(loglik(1.5)).looic);
}

TEST_CASE("Spearman correlation and the consistency report") {
  CHECK(spearman_correlation(vec({1, 2, 3, 4}), vec({10, 20, 25, 100})) == doctest::Approx(1.0));
  CHECK(spearman_correlation(vec({1, 2, 3, 4}), vec({4, 3, 2, 1})) == doctest::Approx(-1.0));
  CHECK(std::isnan(spearman_correlation(vec({1, 1, 1}), vec({1, 2, 3}))));
  CHECK(std::isnan(spearman_correlation(vec({1}), vec({2}))));
  CHECK_ERROR_CODE(spearman_correlation(vec({1, 2}), vec({1})), ErrorCode::LengthMismatch);

  const ConsistencyReport one = consistency_report(vec({0.3}), vec({0.25}), vec({40}));
  CHECK_FALSE(one.trend_defined);
  CHECK(one.residual[0] == doctest::Approx(0.05));

  // residuals shrinking with size give a negative trend
  const ConsistencyReport r = consistency_report(vec({0.3, 0.3, 0.3, 0.3}), vec({0.1, 0.2, 0.25, 0.29}),
                                                 vec({10, 40, 90, 300}));
  CHECK(r.trend_defined);
  CHECK(r.spearman == doctest::Approx(-1.0));
}
