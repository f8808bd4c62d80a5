#ifndef INEQ_COMMON_HPP
#define INEQ_COMMON_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace ineq {

template <typename S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

template <typename S>
using Matrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

using Index = Eigen::Index;

enum class ErrorCode {
  EmptyOrDegenerate,
  NonPositiveIncome,
  AlphaDegenerate,
  UnsupportedIndex,
  InvalidArgument,
  EmptyDomain,
  DegenerateMean,
  TooFewEffectiveUnits,
  InsufficientPsus,
  InfeasibleDesign,
  DomainError,
  SingularFit,
  NoRoot,
  NonPositivePhi,
  NonFinite,
  AllRejected,
  NonFiniteInit,
  TooFewChains,
  TooFewDraws,
  DegenerateWeights,
  DegenerateDirect,
  LengthMismatch,
  SchemaMismatch,
  NonFiniteValue,
  MissingInput,
  IoError,
};

std::string_view error_code_name(ErrorCode code) noexcept;

// Numeric failures map to CLI exit status 2, everything else to 1.
bool is_numeric_failure(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

template <typename S>
S logit(const S& x) {
  using std::log;
  return log(x / (1.0 - x));
}

template <typename S>
S inv_logit(const S& u) {
  using std::exp;
  if (u >= 0.0) {
    return 1.0 / (1.0 + exp(-u));
  }
  S e = exp(u);
  return e / (1.0 + e);
}

// log(inv_logit(u)), stable for large |u|.
inline double log_inv_logit(double u) {
  return u >= 0.0 ? -std::log1p(std::exp(-u)) : u - std::log1p(std::exp(u));
}

inline double log_sum_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  double m = std::fmax(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

}  // namespace ineq

#endif
