#include "doctest.h"

#include "ineq/design.hpp"
#include "ineq/survey.hpp"
#include "test_util.hpp"

using namespace ineq;

namespace {

// strata S0..S{n_strata-1}, each with `psus` PSUs of `hh` two-person households
Population small_population(int n_strata, int psus, int hh, std::uint64_t seed,
                            bool constant = false) {
  Population p;
  CounterRng rng(seed);
  int id = 0;
  for (int s = 0; s < n_strata; ++s) {
    for (int k = 0; k < psus; ++k) {
      for (int h = 0; h < hh; ++h) {
        for (int m = 0; m < 2; ++m) {
          const std::string sid = "S" + std::to_string(s);
          p.units.push_back({"u" + std::to_string(id++),
                             sid + "-" + std::to_string(k) + "-" + std::to_string(h),
                             s % 2 == 0 ? "A" : "B", sid, sid + "-P" + std::to_string(k),
                             constant ? 100.0 : std::exp(3.0 + rng.uniform() * 2.0)});
        }
      }
    }
  }
  return p;
}

}  // namespace

TEST_CASE("census design gives unit weights") {
  const Population pop = small_population(2, 3, 4, 1);
  const SurveySample s = draw_sample(pop, {1.0, 3, 9});
  CHECK(s.units.size() == pop.units.size());
  for (const auto& u : s.units) CHECK(u.weight == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("sample draws are deterministic for a fixed seed") {
  const Population pop = small_population(3, 6, 10, 2);
  const SurveySample a = draw_sample(pop, {0.2, 2, 77});
  const SurveySample b = draw_sample(pop, {0.2, 2, 77});
  CHECK(a.units == b.units);
  const SurveySample c = draw_sample(pop, {0.2, 2, 78});
  CHECK_FALSE(a.units == c.units);
}

TEST_CASE("whole households enter the sample") {
  const Population pop = small_population(2, 5, 8, 3);
  const SurveySample s = draw_sample(pop, {0.3, 2, 5});
  std::map<std::string, int> members;
  for (const auto& u : s.units) ++members[u.household_id];
  for (const auto& [h, n] : members) CHECK(n == 2);
}

TEST_CASE("Horvitz-Thompson totals are unbiased") {
  const Population pop = small_population(3, 7, 11, 4);
  const PopulationFrame frame = build_frame(pop);
  double total = 0.0;
  const int reps = 500;
  for (int r = 0; r < reps; ++r) {
    const SurveySample s = draw_sample(frame, {0.1, 2, static_cast<std::uint64_t>(r)});
    for (const auto& u : s.units) total += u.weight;
  }
  CHECK(total / reps == doctest::Approx(static_cast<double>(pop.units.size())).epsilon(0.02));
}

TEST_CASE("infeasible designs are rejected") {
  const Population pop = small_population(1, 2, 3, 5);
  CHECK_ERROR_CODE(draw_sample(pop, {0.5, 3, 1}), ErrorCode::InfeasibleDesign);
  CHECK_ERROR_CODE(draw_sample(pop, {0.0, 2, 1}), ErrorCode::InvalidArgument);
}

TEST_CASE("Rao-Wu multipliers") {
  const Population pop = small_population(2, 6, 6, 6);
  const SurveySample s = draw_sample(pop, {0.5, 4, 3});
  Vec<double> sum = Vec<double>::Zero(static_cast<Index>(s.units.size()));
  const int reps = 4000;
  for (int b = 0; b < reps; ++b) {
    const Vec<double> m = rao_wu_multipliers(s, 11, b);
    CHECK(m.minCoeff() >= 0.0);
    sum += m;
  }
  // every replicate unit keeps its weight in expectation
  const Vec<double> mean = sum / reps;
  CHECK((mean.array() - 1.0).abs().maxCoeff() < 0.08);
  // replicates are addressable independently
  CHECK(rao_wu_multipliers(s, 11, 17) == rao_wu_multipliers(s, 11, 17));
}

TEST_CASE("bootstrap variance boundaries") {
  const Population flat = small_population(2, 6, 6, 7, true);
  const SurveySample s = draw_sample(flat, {0.5, 3, 1});
  const BootstrapResult r = bootstrap_variance(s, IndexSpec::gini(), 20, 1);
  for (Index d = 0; d < r.variance.size(); ++d) CHECK(r.variance[d] == doctest::Approx(0.0));

  const SurveySample t = draw_sample(small_population(2, 6, 6, 8), {0.5, 3, 1});
  const BootstrapResult two = bootstrap_variance(t, IndexSpec::atkinson(1.0), 2, 1);
  CHECK(two.replicates == 2);
  for (Index d = 0; d < two.variance.size(); ++d) CHECK(two.variance[d] >= 0.0);
  CHECK_ERROR_CODE(bootstrap_variance(t, IndexSpec::gini(), 1, 1), ErrorCode::InvalidArgument);

  SurveySample lonely = t;
  for (auto& u : lonely.units) {
    if (u.stratum_id == "S0") u.psu_id = "S0-only";
  }
  CHECK_ERROR_CODE(bootstrap_variance(lonely, IndexSpec::gini(), 10, 1), ErrorCode::InsufficientPsus);
}

TEST_CASE("srs bootstrap variance of Gini tracks the Monte Carlo variance") {
  const Index n = 200;
  CounterRng rng(31);
  auto srs = [&](CounterRng& g) {
    const Vec<double> z = ineq::test::lognormal_sample(g, n, 0.0, 0.18);
    SurveySample s;
    for (Index i = 0; i < n; ++i) {
      const std::string id = std::to_string(i);
      s.units.push_back({id, id, "A", "S", id, 50.0, z[i]});
    }
    return s;
  };
  // Monte Carlo truth
  std::vector<double> est;
  for (int r = 0; r < 1500; ++r) {
    const SurveySample s = srs(rng);
    est.push_back(direct_estimate(extract_domain(s, "A"), IndexSpec::gini()).value);
  }
  const double m = std::accumulate(est.begin(), est.end(), 0.0) / est.size();
  double v = 0.0;
  for (double e : est) v += (e - m) * (e - m);
  v /= static_cast<double>(est.size() - 1);

  // average over a few samples to keep the check about bias, not noise
  double boot = 0.0;
  const int samples = 4;
  for (int k = 0; k < samples; ++k) {
    boot += bootstrap_variance(srs(rng), IndexSpec::gini(), 1000, 100 + k).variance[0];
  }
  boot /= samples;
  CHECK(boot == doctest::Approx(v).epsilon(0.20));
}

TEST_CASE("bootstrap variance does not depend on B in expectation") {
  const SurveySample s = draw_sample(small_population(2, 8, 10, 9), {0.4, 4, 2});
  const BootstrapResult a = bootstrap_variance(s, IndexSpec::atkinson(1.0), 400, 5);
  const BootstrapResult b = bootstrap_variance(s, IndexSpec::atkinson(1.0), 800, 5);
  for (Index d = 0; d < a.variance.size(); ++d) {
    // standard error of a variance estimate from B draws is about v*sqrt(2/B)
    const double se = a.variance[d] * std::sqrt(2.0 / 400.0);
    CHECK(std::abs(a.variance[d] - b.variance[d]) < 3.0 * se);
  }
}
