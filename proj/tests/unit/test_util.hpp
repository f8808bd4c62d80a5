#ifndef INEQ_TEST_UTIL_HPP
#define INEQ_TEST_UTIL_HPP

#include <random>

#include "ineq/common.hpp"
#include "ineq/rng.hpp"

namespace ineq::test {

inline Vec<double> lognormal_sample(CounterRng& rng, Index n, double mu, double phi2) {
  std::normal_distribution<double> nd(mu, std::sqrt(phi2));
  Vec<double> z(n);
  for (Index i = 0; i < n; ++i) z[i] = std::exp(nd(rng));
  return z;
}

inline Vec<double> vec(std::initializer_list<double> v) {
  Vec<double> out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

// Expects the call to throw ineq::Error with the given code.
#define CHECK_ERROR_CODE(expr, expected)                       \
  do {                                                         \
    bool thrown_ = false;                                      \
    try {                                                      \
      (void)(expr);                                            \
    } catch (const ::ineq::Error& e_) {                        \
      thrown_ = true;                                          \
      CHECK(e_.code() == (expected));                          \
    }                                                          \
    CHECK_MESSAGE(thrown_, "expected an ineq::Error");         \
  } while (0)

}  // namespace ineq::test

#endif
