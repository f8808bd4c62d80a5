#ifndef INEQ_DUAL_HPP
#define INEQ_DUAL_HPP

// Forward-mode dual numbers with a fixed-size gradient. The per-domain
// log-likelihood terms only depend on a handful of scalars, so a small
// fixed N keeps gradients allocation-free.

#include <cmath>

#include <Eigen/Dense>
#include <unsupported/Eigen/SpecialFunctions>

namespace ineq {

template <int N>
struct Dual {
  using Grad = Eigen::Matrix<double, N, 1>;
  double v = 0.0;
  Grad d = Grad::Zero();

  Dual() = default;
  Dual(double value) : v(value) {}  // NOLINT: constants promote implicitly
  Dual(double value, const Grad& grad) : v(value), d(grad) {}

  static Dual variable(double value, int i) {
    Dual x(value);
    x.d[i] = 1.0;
    return x;
  }

  Dual& operator+=(const Dual& o) { v += o.v; d += o.d; return *this; }
  Dual& operator-=(const Dual& o) { v -= o.v; d -= o.d; return *this; }
  Dual& operator*=(const Dual& o) { d = d * o.v + o.d * v; v *= o.v; return *this; }
  Dual& operator/=(const Dual& o) {
    d = (d * o.v - o.d * v) / (o.v * o.v);
    v /= o.v;
    return *this;
  }
};

template <int N> Dual<N> operator-(const Dual<N>& a) { return {-a.v, -a.d}; }
template <int N> Dual<N> operator+(Dual<N> a, const Dual<N>& b) { return a += b; }
template <int N> Dual<N> operator-(Dual<N> a, const Dual<N>& b) { return a -= b; }
template <int N> Dual<N> operator*(Dual<N> a, const Dual<N>& b) { return a *= b; }
template <int N> Dual<N> operator/(Dual<N> a, const Dual<N>& b) { return a /= b; }
template <int N> Dual<N> operator+(Dual<N> a, double b) { a.v += b; return a; }
template <int N> Dual<N> operator+(double b, Dual<N> a) { a.v += b; return a; }
template <int N> Dual<N> operator-(Dual<N> a, double b) { a.v -= b; return a; }
template <int N> Dual<N> operator-(double b, const Dual<N>& a) { return {b - a.v, -a.d}; }
template <int N> Dual<N> operator*(Dual<N> a, double b) { a.v *= b; a.d *= b; return a; }
template <int N> Dual<N> operator*(double b, Dual<N> a) { a.v *= b; a.d *= b; return a; }
template <int N> Dual<N> operator/(Dual<N> a, double b) { a.v /= b; a.d /= b; return a; }
template <int N> Dual<N> operator/(double b, const Dual<N>& a) {
  return {b / a.v, (-b / (a.v * a.v)) * a.d};
}

template <int N> bool operator<(const Dual<N>& a, const Dual<N>& b) { return a.v < b.v; }
template <int N> bool operator<(const Dual<N>& a, double b) { return a.v < b; }
template <int N> bool operator>(const Dual<N>& a, double b) { return a.v > b; }
template <int N> bool operator<=(const Dual<N>& a, double b) { return a.v <= b; }
template <int N> bool operator>=(const Dual<N>& a, double b) { return a.v >= b; }

template <int N> Dual<N> exp(const Dual<N>& a) {
  const double e = std::exp(a.v);
  return {e, e * a.d};
}
template <int N> Dual<N> log(const Dual<N>& a) { return {std::log(a.v), a.d / a.v}; }
template <int N> Dual<N> log1p(const Dual<N>& a) {
  return {std::log1p(a.v), a.d / (1.0 + a.v)};
}
template <int N> Dual<N> sqrt(const Dual<N>& a) {
  const double s = std::sqrt(a.v);
  return {s, a.d / (2.0 * s)};
}
template <int N> Dual<N> lgamma(const Dual<N>& a) {
  return {std::lgamma(a.v), Eigen::numext::digamma(a.v) * a.d};
}
template <int N> Dual<N> min(const Dual<N>& a, const Dual<N>& b) { return b < a ? b : a; }

inline double value_of(double x) { return x; }
template <int N> double value_of(const Dual<N>& x) { return x.v; }

}  // namespace ineq

#endif
