#ifndef INEQ_INDICES_HPP
#define INEQ_INDICES_HPP

// Inequality indices for iid samples and their population values under
// log-normal income.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "ineq/common.hpp"

namespace ineq {

enum class IndexKind { Gini, RelativeTheil, Atkinson, GeneralizedEntropy, RelativeEntropy };

struct IndexSpec {
  IndexKind kind = IndexKind::Gini;
  std::optional<double> epsilon;          // Atkinson only
  std::optional<double> alpha;            // entropy family only
  std::optional<double> population_size;  // normalization N where used

  static IndexSpec gini() { return {IndexKind::Gini, {}, {}, {}}; }
  static IndexSpec relative_theil() { return {IndexKind::RelativeTheil, {}, {}, {}}; }
  static IndexSpec atkinson(double eps) { return {IndexKind::Atkinson, eps, {}, {}}; }
  static IndexSpec generalized_entropy(double a) {
    return {IndexKind::GeneralizedEntropy, {}, a, {}};
  }
  static IndexSpec relative_entropy(double a) {
    return {IndexKind::RelativeEntropy, {}, a, {}};
  }

  void validate() const;
  bool needs_positive_income() const { return kind != IndexKind::Gini; }
  std::string label() const;
};

IndexSpec parse_index_spec(const std::string& name, std::optional<double> epsilon,
                           std::optional<double> alpha);
std::string index_kind_name(IndexKind kind);

struct LogNormalParams {
  double mu = 0.0;
  double phi2 = 0.0;  // variance of log-income
  double n = 2.0;     // domain sample size
};

// Throws unless z is non-empty, finite, >= 0 (and > 0 when strictly_positive).
template <typename S>
void check_incomes(const Vec<S>& z, bool strictly_positive, Index min_size = 1) {
  if (z.size() < min_size) {
    fail(ErrorCode::EmptyOrDegenerate,
         "need at least " + std::to_string(min_size) + " incomes, got " +
             std::to_string(z.size()));
  }
  for (Index i = 0; i < z.size(); ++i) {
    if (!std::isfinite(z[i])) fail(ErrorCode::NonFinite, "income is not finite");
    if (z[i] < 0.0 || (strictly_positive && z[i] <= 0.0)) {
      fail(ErrorCode::NonPositiveIncome,
           "income at position " + std::to_string(i) + " must be > 0");
    }
  }
}

// Average ranks (1-based); ties share the mean of the ranks they span.
template <typename S>
Vec<double> average_ranks(const Vec<S>& z) {
  const Index n = z.size();
  std::vector<Index> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return z[a] < z[b]; });
  Vec<double> r(n);
  Index i = 0;
  while (i < n) {
    Index j = i;
    while (j + 1 < n && z[order[j + 1]] == z[order[i]]) ++j;
    double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (Index k = i; k <= j; ++k) r[order[k]] = avg;
    i = j + 1;
  }
  return r;
}

template <typename S>
S gini_iid(const Vec<S>& z) {
  check_incomes(z, false, 2);
  const double n = static_cast<double>(z.size());
  const S mu = z.mean();
  if (!(mu > 0.0)) fail(ErrorCode::EmptyOrDegenerate, "mean income is zero");
  const Vec<double> r = average_ranks(z);
  S acc = z.dot(r.template cast<S>());
  return 2.0 * acc / (n * n * mu) - (n + 1.0) / n;
}

// Unnormalized Theil T = (1/n) sum (z/mu) log(z/mu).
template <typename S>
S theil_iid(const Vec<S>& z) {
  using std::log;
  check_incomes(z, true, 1);
  const S mu = z.mean();
  S acc = 0.0;
  for (Index i = 0; i < z.size(); ++i) {
    S s = z[i] / mu;
    acc += s * log(s);
  }
  return acc / static_cast<double>(z.size());
}

template <typename S>
S relative_theil_iid(const Vec<S>& z) {
  check_incomes(z, true, 2);
  return theil_iid(z) / std::log(static_cast<double>(z.size()));
}

// epsilon == 1 uses exp(mean log z) for the geometric mean.
template <typename S>
S atkinson_iid(const Vec<S>& z, double epsilon) {
  using std::exp;
  using std::log;
  using std::pow;
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    fail(ErrorCode::InvalidArgument, "Atkinson epsilon must be finite and >= 0");
  }
  check_incomes(z, true, 1);
  const S mu = z.mean();
  if (epsilon == 1.0) {
    S mean_log = z.array().log().mean();
    return 1.0 - exp(mean_log) / mu;
  }
  const double e = 1.0 - epsilon;
  S power_mean = pow(z.array().pow(e).mean(), 1.0 / e);
  return 1.0 - power_mean / mu;
}

inline void check_alpha(double alpha) {
  if (!std::isfinite(alpha) || alpha == 0.0 || alpha == 1.0) {
    fail(ErrorCode::AlphaDegenerate, "entropy order alpha must not be 0 or 1");
  }
}

// Normalized by the realized sample size n, so equal incomes give 0 exactly.
template <typename S>
S generalized_entropy_iid(const Vec<S>& z, double alpha) {
  using std::pow;
  check_alpha(alpha);
  check_incomes(z, true, 1);
  const S mu = z.mean();
  S acc = 0.0;
  for (Index i = 0; i < z.size(); ++i) acc += pow(z[i] / mu, alpha) - 1.0;
  return acc / (static_cast<double>(z.size()) * alpha * (alpha - 1.0));
}

// Upper end of the GE(alpha) support for n units: (n^(alpha-1) - 1)/(alpha(alpha-1)).
inline double entropy_max_support(double alpha, double n) {
  check_alpha(alpha);
  return std::expm1((alpha - 1.0) * std::log(n)) / (alpha * (alpha - 1.0));
}

template <typename S>
S relative_entropy_iid(const Vec<S>& z, double alpha, double n) {
  if (!(n >= 2.0)) fail(ErrorCode::EmptyOrDegenerate, "normalization size must be >= 2");
  return generalized_entropy_iid(z, alpha) / entropy_max_support(alpha, n);
}

template <typename S>
S relative_entropy_iid(const Vec<S>& z, double alpha) {
  return relative_entropy_iid(z, alpha, static_cast<double>(z.size()));
}

// Dispatch on an IndexSpec.
template <typename S>
S index_iid(const Vec<S>& z, const IndexSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case IndexKind::Gini:
      return gini_iid(z);
    case IndexKind::RelativeTheil:
      return relative_theil_iid(z);
    case IndexKind::Atkinson:
      return atkinson_iid(z, *spec.epsilon);
    case IndexKind::GeneralizedEntropy:
      return generalized_entropy_iid(z, *spec.alpha);
    case IndexKind::RelativeEntropy:
      return relative_entropy_iid(z, *spec.alpha,
                                  spec.population_size.value_or(static_cast<double>(z.size())));
  }
  fail(ErrorCode::UnsupportedIndex, "unknown index kind");
}

// Population index value when log-income is N(mu, phi2) and the relative
// indices are normalized by the sample size p.n.
double lognormal_theta(const LogNormalParams& p, const IndexSpec& spec);

// Index computed from a log-normal fit: phi2 replaced by the sample
// variance of log-income. This is the estimator the variance functions
// describe.
template <typename S>
double lognormal_plugin_index(const Vec<S>& z, const IndexSpec& spec) {
  check_incomes(z, true, 2);
  Vec<double> lz = z.array().log().template cast<double>();
  const double m = lz.mean();
  const double s2 = (lz.array() - m).square().sum() / static_cast<double>(lz.size() - 1);
  return lognormal_theta({m, s2, static_cast<double>(z.size())}, spec);
}

}  // namespace ineq

#endif
