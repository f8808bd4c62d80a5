#include "doctest.h"

#include "ineq/gvf.hpp"
#include "test_util.hpp"

using namespace ineq;

TEST_CASE("variance function values") {
  CHECK(variance_function_value(IndexSpec::relative_theil(), 0.1, 100) ==
        doctest::Approx(2.0e-4).epsilon(1e-14));
  CHECK(variance_function_value(IndexSpec::relative_entropy(2.0), 0.1, 10) ==
        doctest::Approx(0.002 * std::exp(1.8)).epsilon(1e-14));
  CHECK(variance_function_value(IndexSpec::atkinson(0.5), 0.3, 50) ==
        doctest::Approx(2 * 0.09 * std::exp(-0.6) / 50).epsilon(1e-14));
  // no dependence on epsilon
  CHECK(variance_function_value(IndexSpec::atkinson(2.0), 0.3, 50) ==
        variance_function_value(IndexSpec::atkinson(0.5), 0.3, 50));
  CHECK(variance_function_value(IndexSpec::gini(), 1e-6, 10) < 1e-12);
  CHECK(variance_function_value(IndexSpec::gini(), 1 - 1e-9, 10) < 1e-8);
  CHECK_ERROR_CODE(variance_function_value(IndexSpec::gini(), 1.0, 10), ErrorCode::DomainError);
  CHECK_ERROR_CODE(variance_function_value(IndexSpec::gini(), 0.5, 1.0), ErrorCode::DomainError);
  CHECK(proportion_variance(0.2, 4) == doctest::Approx(0.04));
}

TEST_CASE("property: variance function shapes") {
  double prev_t = 0.0, prev_a = 0.0, best = 0.0, argmax = 0.0;
  for (int k = 1; k < 1000; ++k) {
    const double t = k / 1000.0;
    const double vt = variance_function_value(IndexSpec::relative_theil(), t, 30);
    const double va = variance_function_value(IndexSpec::atkinson(1.0), t, 30);
    const double vg = variance_function_value(IndexSpec::gini(), t, 30);
    CHECK(vt > prev_t);
    CHECK(va > prev_a);
    prev_t = vt;
    prev_a = va;
    if (vg > best) {
      best = vg;
      argmax = t;
    }
  }
  CHECK(argmax == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(2e-3));

  for (const IndexSpec& s : {IndexSpec::relative_theil(), IndexSpec::atkinson(1.0), IndexSpec::gini()}) {
    CHECK(variance_function_value(s, 0.3, 40) / variance_function_value(s, 0.3, 80) ==
          doctest::Approx(2.0).epsilon(1e-14));
  }
  const IndexSpec re = IndexSpec::relative_entropy(2.0);
  const double ratio = variance_function_value(re, 0.3, 40) / variance_function_value(re, 0.3, 80);
  CHECK(ratio == doctest::Approx(2.0 * std::exp(2 * 0.3 * (39.0 - 79.0))).epsilon(1e-12));
}

TEST_CASE("GVF recovers a known deflating factor") {
  CounterRng rng(41);
  std::normal_distribution<double> noise(0.0, 0.15);
  const Index D = 50;
  Vec<double> y(D), n(D), v(D);
  const IndexSpec spec = IndexSpec::atkinson(1.0);
  for (Index d = 0; d < D; ++d) {
    y[d] = 0.1 + 0.3 * rng.uniform();
    n[d] = 20.0 + std::floor(200.0 * rng.uniform());
    const double ratio = 0.5 * n[d] * (1.0 + noise(rng));
    v[d] = variance_numerator(spec, y[d], n[d]) / ratio;
  }
  const GvfFit fit = gvf_fit(y, v, n, spec);
  CHECK(fit.psi_hat >= 0.45);
  CHECK(fit.psi_hat <= 0.55);
  for (Index d = 0; d < D; ++d) {
    CHECK(fit.v_smoothed[d] > 0.0);
    CHECK(fit.n_eff[d] == doctest::Approx(fit.psi_hat * n[d]));
  }
}

TEST_CASE("noiseless GVF input") {
  const Index D = 12;
  Vec<double> y(D), n(D), v(D);
  const IndexSpec spec = IndexSpec::relative_theil();
  for (Index d = 0; d < D; ++d) {
    y[d] = 0.05 + 0.02 * d;
    n[d] = 10.0 + 7.0 * d;
    v[d] = variance_numerator(spec, y[d], n[d]) / (0.7 * n[d]);
  }
  const GvfFit fit = gvf_fit(y, v, n, spec);
  CHECK(fit.psi_hat == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(fit.pseudo_r2 == doctest::Approx(1.0).epsilon(1e-12));
  for (Index d = 0; d < D; ++d) CHECK(fit.v_smoothed[d] == doctest::Approx(v[d]).epsilon(1e-10));
}

TEST_CASE("GVF is robust to a near-zero raw variance") {
  const Index D = 20;
  Vec<double> y(D), n(D), v(D);
  const IndexSpec spec = IndexSpec::gini();
  for (Index d = 0; d < D; ++d) {
    y[d] = 0.25 + 0.01 * d;
    n[d] = 30.0 + 5.0 * d;
    v[d] = variance_numerator(spec, y[d], n[d]) / (0.6 * n[d]) * (1.0 + 0.05 * ((d % 3) - 1));
  }
  v[4] = 1e-14;
  const GvfFit fit = gvf_fit(y, v, n, spec);
  CHECK(std::isfinite(fit.psi_hat));
  CHECK(fit.psi_hat == doctest::Approx(0.6).epsilon(0.05));
  CHECK(fit.fit_weight[4] < 0.01);
  CHECK(fit.v_smoothed.allFinite());
}

TEST_CASE("GVF needs usable domains") {
  const Vec<double> y = Vec<double>::Constant(5, 0.3);
  const Vec<double> n = Vec<double>::Constant(5, 40.0);
  CHECK_ERROR_CODE(gvf_fit(y, Vec<double>::Zero(5), n, IndexSpec::gini()), ErrorCode::SingularFit);
  CHECK_ERROR_CODE(gvf_fit(y, Vec<double>::Constant(5, 1e-3), Vec<double>::Zero(5), IndexSpec::gini()),
                   ErrorCode::SingularFit);
  CHECK_ERROR_CODE(gvf_fit(y, Vec<double>::Constant(4, 1e-3), n, IndexSpec::gini()),
                   ErrorCode::LengthMismatch);
}

TEST_CASE("smoothed variances stay positive for clamped extremes") {
  Vec<double> y(6);
  y << 0.0, 1e-9, 0.5, 1.0 - 1e-9, 1.0, 0.3;
  const Vec<double> n = Vec<double>::Constant(6, 50.0);
  Vec<double> v = Vec<double>::Constant(6, 1e-3);
  for (const IndexSpec& s : {IndexSpec::gini(), IndexSpec::atkinson(1.0), IndexSpec::relative_theil()}) {
    const GvfFit fit = gvf_fit(y, v, n, s);
    CHECK((fit.v_smoothed.array() > 0.0).all());
    CHECK(fit.v_smoothed.allFinite());
  }
}

TEST_CASE("Monte Carlo variance check runs and validates input") {
  const McValidation m =
      mc_validate_variance_function(IndexSpec::atkinson(1.0), {0.0, 0.18, 200}, 2000, 3);
  CHECK(m.ratio > 0.8);
  CHECK(m.ratio < 1.2);
  CHECK_ERROR_CODE(mc_validate_variance_function(IndexSpec::atkinson(1.0), {0.0, 0.18, 200}, 10, 3),
                   ErrorCode::InvalidArgument);
}
