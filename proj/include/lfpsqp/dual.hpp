#pragma once
#ifndef LFPSQP_DUAL_HPP
#define LFPSQP_DUAL_HPP

#include <Eigen/Core>

#include <cmath>
#include <type_traits>

namespace lfpsqp {

/// Forward-mode dual number v + d*eps with eps^2 = 0. Nesting
/// Dual<Dual<double>> yields mixed second derivatives.
template <class T>
struct Dual {
  T v{};
  T d{};

  Dual() = default;
  Dual(const T& value, const T& deriv = T(0)) : v(value), d(deriv) {}
  template <class S>
    requires(std::is_arithmetic_v<S> && !std::is_same_v<S, T>)
  Dual(S value) : v(T(value)), d(T(0)) {}

  Dual& operator+=(const Dual& o) { v += o.v; d += o.d; return *this; }
  Dual& operator-=(const Dual& o) { v -= o.v; d -= o.d; return *this; }
  Dual& operator*=(const Dual& o) { *this = *this * o; return *this; }
  Dual& operator/=(const Dual& o) { *this = *this / o; return *this; }

  friend Dual operator+(const Dual& a) { return a; }
  friend Dual operator-(const Dual& a) { return {-a.v, -a.d}; }
  friend Dual operator+(const Dual& a, const Dual& b) { return {a.v + b.v, a.d + b.d}; }
  friend Dual operator-(const Dual& a, const Dual& b) { return {a.v - b.v, a.d - b.d}; }
  friend Dual operator*(const Dual& a, const Dual& b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
  friend Dual operator/(const Dual& a, const Dual& b) {
    T inv = T(1) / b.v;
    return {a.v * inv, (a.d - a.v * inv * b.d) * inv};
  }

  friend bool operator<(const Dual& a, const Dual& b) { return a.v < b.v; }
  friend bool operator>(const Dual& a, const Dual& b) { return a.v > b.v; }
  friend bool operator<=(const Dual& a, const Dual& b) { return a.v <= b.v; }
  friend bool operator>=(const Dual& a, const Dual& b) { return a.v >= b.v; }
  friend bool operator==(const Dual& a, const Dual& b) { return a.v == b.v; }
  friend bool operator!=(const Dual& a, const Dual& b) { return a.v != b.v; }

  friend Dual sin(const Dual& a) { using std::sin, std::cos; return {sin(a.v), a.d * cos(a.v)}; }
  friend Dual cos(const Dual& a) { using std::sin, std::cos; return {cos(a.v), -a.d * sin(a.v)}; }
  friend Dual tan(const Dual& a) {
    using std::tan;
    T t = tan(a.v);
    return {t, a.d * (T(1) + t * t)};
  }
  friend Dual exp(const Dual& a) { using std::exp; T e = exp(a.v); return {e, a.d * e}; }
  friend Dual log(const Dual& a) { using std::log; return {log(a.v), a.d / a.v}; }
  friend Dual sqrt(const Dual& a) {
    using std::sqrt;
    T s = sqrt(a.v);
    return {s, a.d / (T(2) * s)};
  }
  friend Dual abs(const Dual& a) { return a.v < T(0) ? -a : a; }
  friend Dual pow(const Dual& a, double p) {
    using std::pow;
    return {pow(a.v, p), a.d * T(p) * pow(a.v, p - 1.0)};
  }
  friend bool isfinite(const Dual& a) {
    using std::isfinite;
    return isfinite(a.v) && isfinite(a.d);
  }
};

template <class T>
using DualVec = Eigen::Matrix<Dual<T>, Eigen::Dynamic, 1>;

}  // namespace lfpsqp

namespace Eigen {

template <class T>
struct NumTraits<lfpsqp::Dual<T>> : NumTraits<double> {
  using Real = lfpsqp::Dual<T>;
  using NonInteger = lfpsqp::Dual<T>;
  using Nested = lfpsqp::Dual<T>;
  using Literal = lfpsqp::Dual<T>;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 2 * NumTraits<T>::ReadCost,
    AddCost = 2 * NumTraits<T>::AddCost,
    MulCost = 3 * NumTraits<T>::MulCost + NumTraits<T>::AddCost,
  };
};

}  // namespace Eigen

#endif  // LFPSQP_DUAL_HPP
