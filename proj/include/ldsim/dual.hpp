#pragma once

#include <array>
#include <cmath>

namespace ldsim {

/// Forward-mode dual number carrying N partial derivatives.
///
/// The local residual kernels (edge fluxes, node sources, boundary rows) are
/// written once as templates over the scalar type. Evaluating them with
/// `Dual<N>` seeded on the local unknowns yields the exact Jacobian block of
/// that kernel, which the assembler scatters into the global matrix.
template <int N>
struct Dual {
  double v = 0.0;
  std::array<double, N> d{};

  constexpr Dual() = default;
  constexpr Dual(double value) : v(value) {}  // NOLINT: implicit constants

  static constexpr Dual variable(double value, int slot) {
    Dual x(value);
    x.d[slot] = 1.0;
    return x;
  }

  Dual& operator+=(const Dual& o) {
    v += o.v;
    for (int i = 0; i < N; ++i) d[i] += o.d[i];
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    v -= o.v;
    for (int i = 0; i < N; ++i) d[i] -= o.d[i];
    return *this;
  }
  Dual& operator*=(const Dual& o) {
    for (int i = 0; i < N; ++i) d[i] = d[i] * o.v + v * o.d[i];
    v *= o.v;
    return *this;
  }
  Dual& operator/=(const Dual& o) {
    const double inv = 1.0 / o.v;
    const double r = v * inv;
    for (int i = 0; i < N; ++i) d[i] = (d[i] - r * o.d[i]) * inv;
    v = r;
    return *this;
  }
};

template <int N> Dual<N> operator-(Dual<N> a) {
  a.v = -a.v;
  for (auto& x : a.d) x = -x;
  return a;
}
template <int N> Dual<N> operator+(Dual<N> a, const Dual<N>& b) { return a += b; }
template <int N> Dual<N> operator-(Dual<N> a, const Dual<N>& b) { return a -= b; }
template <int N> Dual<N> operator*(Dual<N> a, const Dual<N>& b) { return a *= b; }
template <int N> Dual<N> operator/(Dual<N> a, const Dual<N>& b) { return a /= b; }
template <int N> Dual<N> operator+(Dual<N> a, double b) { a.v += b; return a; }
template <int N> Dual<N> operator+(double b, Dual<N> a) { a.v += b; return a; }
template <int N> Dual<N> operator-(Dual<N> a, double b) { a.v -= b; return a; }
template <int N> Dual<N> operator-(double b, const Dual<N>& a) { return -a + b; }
template <int N> Dual<N> operator*(Dual<N> a, double b) {
  a.v *= b;
  for (auto& x : a.d) x *= b;
  return a;
}
template <int N> Dual<N> operator*(double b, Dual<N> a) { return a * b; }
template <int N> Dual<N> operator/(Dual<N> a, double b) { return a * (1.0 / b); }
template <int N> Dual<N> operator/(double b, const Dual<N>& a) { return Dual<N>(b) / a; }

template <int N> bool operator<(const Dual<N>& a, const Dual<N>& b) { return a.v < b.v; }
template <int N> bool operator<(const Dual<N>& a, double b) { return a.v < b; }
template <int N> bool operator>(const Dual<N>& a, double b) { return a.v > b; }

namespace detail {
template <int N> Dual<N> chain(const Dual<N>& a, double value, double slope) {
  Dual<N> r(value);
  for (int i = 0; i < N; ++i) r.d[i] = slope * a.d[i];
  return r;
}
}  // namespace detail

template <int N> Dual<N> exp(const Dual<N>& a) {
  const double e = std::exp(a.v);
  return detail::chain(a, e, e);
}
template <int N> Dual<N> expm1(const Dual<N>& a) {
  return detail::chain(a, std::expm1(a.v), std::exp(a.v));
}
template <int N> Dual<N> log(const Dual<N>& a) { return detail::chain(a, std::log(a.v), 1.0 / a.v); }
template <int N> Dual<N> sqrt(const Dual<N>& a) {
  const double s = std::sqrt(a.v);
  return detail::chain(a, s, 0.5 / s);
}
template <int N> Dual<N> pow(const Dual<N>& a, double e) {
  const double p = std::pow(a.v, e);
  return detail::chain(a, p, e * p / a.v);
}
template <int N> Dual<N> asinh(const Dual<N>& a) {
  return detail::chain(a, std::asinh(a.v), 1.0 / std::sqrt(1.0 + a.v * a.v));
}
template <int N> Dual<N> abs(const Dual<N>& a) { return a.v < 0.0 ? -a : a; }

inline double value_of(double x) { return x; }
template <int N> double value_of(const Dual<N>& x) { return x.v; }

}  // namespace ldsim
