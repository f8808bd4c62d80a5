#include "doctest.h"

#include <random>

#include "ineq/gvf.hpp"
#include "ineq/hb_model.hpp"
#include "test_util.hpp"

using namespace ineq;

namespace {

AreaDataset one_area(double y, double v) {
  AreaDataset d;
  d.y = Vec<double>::Constant(3, y);
  d.v = Vec<double>::Constant(3, v);
  d.x = Matrix<double>::Ones(3, 1);
  return d;
}

AreaDataset random_dataset(CounterRng& rng, Index D) {
  AreaDataset d;
  d.y.resize(D);
  d.v.resize(D);
  Matrix<double> cov(D, 2);
  for (Index i = 0; i < D; ++i) {
    d.y[i] = 0.15 + 0.2 * rng.uniform();
    d.v[i] = (0.0002 + 0.002 * rng.uniform());
    cov(i, 0) = rng.uniform();
    cov(i, 1) = rng.uniform();
  }
  d.x = standardized_design(cov);
  return d;
}

// Composite Simpson on (lo, hi).
template <typename F>
double simpson(F f, double lo, double hi, int n = 200000) {
  const double h = (hi - lo) / n;
  double s = f(lo) + f(hi);
  for (int i = 1; i < n; ++i) s += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

Vec<double> random_point(CounterRng& rng, ModelKind kind, Index P, Index D) {
  Vec<double> q(unconstrained_size(kind, P, D));
  for (Index i = 0; i < q.size(); ++i) q[i] = 0.4 * rng.uniform() - 0.2;
  q[0] = -1.3;
  q[P] = std::log(0.3);
  return q;
}

}  // namespace

TEST_CASE("threshold c at n = 2") {
  CHECK(c_threshold(IndexSpec::relative_theil(), 2.0) == doctest::Approx(0.50).epsilon(1e-15));
  CHECK(c_threshold(IndexSpec::gini(), 2.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(c_threshold(IndexSpec::atkinson(1.0), 2.0) - 0.84) <= 0.01);
  CHECK(c_threshold(IndexSpec::atkinson(0.5), 2.0) == c_threshold(IndexSpec::atkinson(1.0), 2.0));
  CHECK(c_threshold(IndexSpec::relative_theil(), 10.0) == doctest::Approx(10.0 / 12.0));
  CHECK_ERROR_CODE(c_threshold(IndexSpec::gini(), 1.0), ErrorCode::DomainError);
}

TEST_CASE("threshold bounds the positive-dispersion region") {
  for (double n : {2.0, 5.0, 30.0}) {
    const double c = c_threshold(IndexSpec::atkinson(1.0), n);
    const double below = variance_function_value(IndexSpec::atkinson(1.0), 0.9 * c, n);
    const double above = variance_function_value(IndexSpec::atkinson(1.0), std::min(0.999, 1.05 * c), n);
    CHECK(below < 0.9 * c * (1 - 0.9 * c));
    if (1.05 * c < 0.999) CHECK(above > 1.05 * c * (1 - 1.05 * c));
  }
}

TEST_CASE("wtilde bound") {
  CHECK(wtilde_bound(0.9, 0.5, 1.0) == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(wtilde_bound(0.1, 0.5, 0.01) == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(wtilde_bound(0.3, 0.4, 1e-12) < 1e-5);
  CHECK_ERROR_CODE(wtilde_bound(0.3, 1.0, 0.1), ErrorCode::DomainError);
}

TEST_CASE("derive_area hand case") {
  AreaDataset data = one_area(0.2, 0.0016);
  FbParams p;
  p.beta = Vec<double>::Constant(1, logit(0.2));
  p.v = Vec<double>::Zero(3);
  p.p = 0.5;
  p.w = 0.5;
  const DerivedArea a = derive_area(p, 0, data);
  CHECK(a.lambda2 == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(a.wtilde == doctest::Approx(0.04).epsilon(1e-12));
  CHECK(a.theta == doctest::Approx(0.22).epsilon(1e-12));
  CHECK(a.phi == doctest::Approx(0.17 / 0.0012).epsilon(1e-10));
  CHECK(a.lambda1 == doctest::Approx(0.24).epsilon(1e-12));

  p.w = 1e-9;
  CHECK(derive_area(p, 0, data).theta == doctest::Approx(0.2).epsilon(1e-8));

  // V above theta(1 - theta)
  AreaDataset bad = one_area(0.2, 0.3);
  p.w = 0.5;
  CHECK_ERROR_CODE(derive_area(p, 0, bad), ErrorCode::NonPositivePhi);
}

TEST_CASE("property: theta increases with w when the variance bound binds") {
  AreaDataset data = one_area(0.2, 0.0016);
  FbParams p;
  p.beta = Vec<double>::Constant(1, logit(0.2));
  p.v = Vec<double>::Zero(3);
  p.p = 0.3;
  double prev = 0.0;
  for (int k = 1; k < 100; ++k) {
    p.w = k / 100.0;
    const DerivedArea a = derive_area(p, 0, data);
    CHECK(a.theta > prev);
    CHECK(a.phi > 0.0);
    CHECK(a.lambda2 < a.theta);
    CHECK(a.theta < a.lambda1);
    prev = a.theta;
  }
}

TEST_CASE("FB likelihood special cases") {
  DerivedArea a;
  a.lambda2 = 0.2;
  a.lambda1 = 0.35;
  a.phi = 40.0;
  const double y = 0.27;
  const double single_hi = beta_log_likelihood(y, 0.35, 0.35 * 0.65 / 41.0);
  CHECK(fb_log_likelihood(y, a, 1.0) == doctest::Approx(single_hi).epsilon(1e-12));
  DerivedArea same = a;
  same.lambda1 = same.lambda2;
  const double single_lo = beta_log_likelihood(y, 0.2, 0.2 * 0.8 / 41.0);
  for (double p : {0.1, 0.5, 0.9}) {
    CHECK(fb_log_likelihood(y, same, p) == doctest::Approx(single_lo).epsilon(1e-12));
  }
  CHECK(fb_log_likelihood(0.0, a, 0.5) == kNegInf);
  CHECK(fb_log_likelihood(1.0, a, 0.5) == kNegInf);

  const double mass = simpson([&](double u) { return std::exp(fb_log_likelihood(u, a, 0.7)); },
                              1e-12, 1.0 - 1e-12);
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("Beta likelihood moments") {
  const double theta = 0.3, v = 0.004;
  auto dens = [&](double u) { return std::exp(beta_log_likelihood(u, theta, v)); };
  const double m0 = simpson(dens, 1e-12, 1 - 1e-12);
  const double m1 = simpson([&](double u) { return u * dens(u); }, 1e-12, 1 - 1e-12);
  const double m2 = simpson([&](double u) { return (u - theta) * (u - theta) * dens(u); }, 1e-12,
                            1 - 1e-12);
  CHECK(m0 == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(m1 == doctest::Approx(theta).epsilon(1e-8));
  CHECK(m2 == doctest::Approx(v).epsilon(1e-7));
  CHECK_ERROR_CODE(beta_log_likelihood(0.5, 0.5, 0.25), ErrorCode::NonPositivePhi);
}

TEST_CASE("property: FB mixture mean and variance match the area identities") {
  AreaDataset data = one_area(0.25, 0.003);
  FbParams p;
  p.beta = Vec<double>::Constant(1, logit(0.22));
  p.v = Vec<double>::Zero(3);
  p.p = 0.8;
  p.w = 0.5;
  const DerivedArea a = derive_area(p, 0, data);
  CounterRng rng(51);
  std::gamma_distribution<double> g1a(a.lambda1 * a.phi), g1b((1 - a.lambda1) * a.phi);
  std::gamma_distribution<double> g2a(a.lambda2 * a.phi), g2b((1 - a.lambda2) * a.phi);
  const int n = 1000000;
  double s = 0.0, ss = 0.0;
  for (int i = 0; i < n; ++i) {
    double x, y;
    if (rng.uniform() < p.p) {
      x = g1a(rng);
      y = g1b(rng);
    } else {
      x = g2a(rng);
      y = g2b(rng);
    }
    const double b = x / (x + y);
    s += b;
    ss += b * b;
  }
  const double mean = s / n;
  const double var = ss / n - mean * mean;
  const double V = data.v[0];
  CHECK(std::abs(mean - a.theta) < 3.0 * std::sqrt(V / n));
  // se of a sample variance is about V sqrt(2/n) for near-normal draws; use 4 for the mixture tails
  CHECK(std::abs(var - V) < 3.0 * V * std::sqrt(4.0 / n));
}

TEST_CASE("parameter transforms") {
  CounterRng rng(52);
  for (ModelKind kind : {ModelKind::Beta, ModelKind::FlexibleBeta}) {
    FbParams p;
    p.beta = Vec<double>::Random(3);
    p.sigma_v = 0.1 + rng.uniform();
    p.v = Vec<double>::Random(7);
    p.p = 0.05 + 0.9 * rng.uniform();
    p.w = 0.05 + 0.9 * rng.uniform();
    const FbParams r = from_unconstrained(kind, to_unconstrained(kind, p), 3);
    CHECK((r.beta - p.beta).norm() < 1e-12);
    CHECK((r.v - p.v).norm() < 1e-12);
    CHECK(r.sigma_v == doctest::Approx(p.sigma_v).epsilon(1e-12));
    if (kind == ModelKind::FlexibleBeta) {
      CHECK(r.p == doctest::Approx(p.p).epsilon(1e-12));
      CHECK(r.w == doctest::Approx(p.w).epsilon(1e-12));
    }
  }
  FbParams p;
  p.beta = Vec<double>::Zero(1);
  p.v = Vec<double>::Zero(3);
  p.sigma_v = 1.0;
  p.p = 0.5;
  p.w = 0.5;
  const Vec<double> q = to_unconstrained(ModelKind::FlexibleBeta, p);
  CHECK(q[1] == 0.0);
  CHECK(q[5] == 0.0);
  CHECK(q[6] == 0.0);
  p.sigma_v = 0.0;
  CHECK_ERROR_CODE(to_unconstrained(ModelKind::Beta, p), ErrorCode::NonFinite);
  Vec<double> nan_q = q;
  nan_q[0] = std::nan("");
  CHECK_ERROR_CODE(from_unconstrained(ModelKind::FlexibleBeta, nan_q, 1), ErrorCode::NonFinite);
}

TEST_CASE("area dataset validation") {
  CounterRng rng(53);
  AreaDataset d = random_dataset(rng, 6);
  d.domains = {"a", "b", "c", "d", "e", "f"};
  CHECK_NOTHROW(d.validate());
  AreaDataset bad = d;
  bad.v[2] = bad.y[2] * (1 - bad.y[2]);
  try {
    bad.validate();
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DomainError);
    CHECK(std::string(e.what()).find("domain c") != std::string::npos);
  }
  AreaDataset small = random_dataset(rng, 4);
  CHECK_ERROR_CODE(small.validate(), ErrorCode::InvalidArgument);
}

TEST_CASE("log posterior is additive over domains") {
  CounterRng rng(54);
  for (ModelKind kind : {ModelKind::Beta, ModelKind::FlexibleBeta}) {
    const AreaDataset full = random_dataset(rng, 10);
    AreaDataset part = full;
    const Index drop = 9;
    part.y.conservativeResize(9);
    part.v.conservativeResize(9);
    part.x.conservativeResize(9, Eigen::NoChange);
    FbParams p;
    p.beta = Vec<double>::Zero(3);
    p.beta[0] = logit(0.2);
    p.sigma_v = 0.3;
    p.v = 0.1 * Vec<double>::Random(10);
    p.p = 0.7;
    p.w = 0.3;
    FbParams pp = p;
    pp.v.conservativeResize(9);
    const PriorSpec pr;
    const double delta = log_posterior(kind, p, full, pr) - log_posterior(kind, pp, part, pr);
    const Vec<double> ll = pointwise_loglik(kind, to_unconstrained(kind, p), full);
    const double vd = p.v[drop];
    const double prior_v = -0.5 * vd * vd / (0.09) - std::log(0.3) - 0.5 * std::log(2 * M_PI);
    CHECK(delta == doctest::Approx(ll[drop] + prior_v).epsilon(1e-10));
  }
}

TEST_CASE("FB at vanishing w matches the Beta posterior up to prior terms") {
  CounterRng rng(55);
  const AreaDataset data = random_dataset(rng, 8);
  FbParams p;
  p.beta = Vec<double>::Zero(3);
  p.beta[0] = logit(0.25);
  p.sigma_v = 0.4;
  p.v = 0.1 * Vec<double>::Random(8);
  p.p = 0.6;
  p.w = 1e-9;
  const PriorSpec pr;
  const double fb = log_posterior(ModelKind::FlexibleBeta, p, data, pr);
  const double beta = log_posterior(ModelKind::Beta, p, data, pr);
  const double prior_pw = std::log(p.p * (1 - p.p)) + std::log(p.w * (1 - p.w));
  CHECK(fb - beta == doctest::Approx(prior_pw).epsilon(1e-6));
}

TEST_CASE("gradients match finite differences") {
  CounterRng rng(56);
  const AreaDataset data = random_dataset(rng, 12);
  for (ModelKind kind : {ModelKind::Beta, ModelKind::FlexibleBeta}) {
    for (bool nc : {false, true}) {
      for (PPrior pp : {PPrior::Uniform, PPrior::Beta22}) {
        PriorSpec pr;
        pr.p_prior = pp;
        const Target t = make_target(kind, data, pr, nc);
        CounterRng init(57);
        Vec<double> q = t.initial_point(init);
        Vec<double> g;
        const double lp = t.log_density_gradient(q, g);
        REQUIRE(std::isfinite(lp));
        CHECK(lp == doctest::Approx(t.log_density(q)).epsilon(1e-12));
        for (Index i = 0; i < q.size(); ++i) {
          const double h = 1e-6;
          Vec<double> a = q, b = q;
          a[i] += h;
          b[i] -= h;
          const double fd = (t.log_density(a) - t.log_density(b)) / (2 * h);
          CHECK(g[i] == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
        }
      }
    }
  }
}

TEST_CASE("constraint violations give -inf, not exceptions") {
  CounterRng rng(58);
  const AreaDataset data = random_dataset(rng, 6);
  Vec<double> q = random_point(rng, ModelKind::FlexibleBeta, 3, 6);
  q[0] = 12.0;  // lambda2 near 1: theta(1-theta) falls below V
  CHECK(log_posterior_unconstrained(ModelKind::FlexibleBeta, q, data, PriorSpec{}) == kNegInf);
  q[0] = std::nan("");
  CHECK(log_posterior_unconstrained(ModelKind::FlexibleBeta, q, data, PriorSpec{}) == kNegInf);
}

TEST_CASE("property: accepted FB points keep the component means ordered") {
  CounterRng rng(59);
  const AreaDataset data = random_dataset(rng, 10);
  const Target t = make_target(ModelKind::FlexibleBeta, data, PriorSpec{}, false);
  const GeneratedLayout gl = generated_layout(ModelKind::FlexibleBeta, 10);
  int accepted = 0;
  for (int k = 0; k < 500; ++k) {
    Vec<double> q(t.dim);
    for (Index i = 0; i < q.size(); ++i) q[i] = 3.0 * rng.uniform() - 1.5;
    q[0] -= 1.0;
    if (!std::isfinite(t.log_density(q))) continue;
    ++accepted;
    Vec<double> gen;
    t.generated(q, gen);
    for (Index d = 0; d < 10; ++d) {
      CHECK(gen[gl.lambda2 + d] > 0.0);
      CHECK(gen[gl.lambda2 + d] < gen[gl.lambda1 + d]);
      CHECK(gen[gl.lambda1 + d] < 1.0);
      CHECK(gen[gl.theta + d] > gen[gl.lambda2 + d]);
      CHECK(gen[gl.theta + d] < gen[gl.lambda1 + d]);
    }
  }
  CHECK(accepted > 20);
}
