#pragma once

#include <array>
#include <cmath>

namespace carnot {

// Truncated multivariate Taylor number with M nilpotent directions e_m, e_m^2 = 0.
// Component S (a bitmask) holds the coefficient of prod_{m in S} e_m, so the
// top component of f(x0 + e_1 v_1 + ... ) is the mixed derivative along v_1..v_M.
template <int M>
struct Jet {
  static constexpr int size = 1 << M;
  std::array<double, size> v{};

  Jet() = default;
  Jet(double c) { v[0] = c; }  // NOLINT: implicit lift of constants

  static Jet variable(double x, int direction) {
    Jet j(x);
    j.v[1 << direction] = 1.0;
    return j;
  }

  double value() const { return v[0]; }
  double top() const { return v[size - 1]; }

  Jet& operator+=(const Jet& o) {
    for (int s = 0; s < size; ++s) v[s] += o.v[s];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    for (int s = 0; s < size; ++s) v[s] -= o.v[s];
    return *this;
  }
  Jet& operator*=(double c) {
    for (double& x : v) x *= c;
    return *this;
  }
};

template <int M>
Jet<M> operator+(Jet<M> a, const Jet<M>& b) { return a += b; }
template <int M>
Jet<M> operator-(Jet<M> a, const Jet<M>& b) { return a -= b; }
template <int M>
Jet<M> operator-(Jet<M> a) { return a *= -1.0; }
template <int M>
Jet<M> operator+(Jet<M> a, double c) { a.v[0] += c; return a; }
template <int M>
Jet<M> operator+(double c, Jet<M> a) { a.v[0] += c; return a; }
template <int M>
Jet<M> operator-(Jet<M> a, double c) { a.v[0] -= c; return a; }
template <int M>
Jet<M> operator-(double c, const Jet<M>& a) { return -a + c; }
template <int M>
Jet<M> operator*(Jet<M> a, double c) { return a *= c; }
template <int M>
Jet<M> operator*(double c, Jet<M> a) { return a *= c; }

template <int M>
Jet<M> operator*(const Jet<M>& a, const Jet<M>& b) {
  Jet<M> c;
  for (int s = 0; s < Jet<M>::size; ++s) {
    double acc = 0.0;
    // all submasks A of s, including s itself and 0
    for (int A = s;; A = (A - 1) & s) {
      acc += a.v[A] * b.v[s ^ A];
      if (A == 0) break;
    }
    c.v[s] = acc;
  }
  return c;
}

// f(a) from the derivatives d[k] = f^(k)(a0), k = 0..M.
template <int M>
Jet<M> lift(const Jet<M>& a, const std::array<double, M + 1>& d) {
  Jet<M> n = a;
  n.v[0] = 0.0;
  Jet<M> out(d[0]);
  Jet<M> power(1.0);
  double fact = 1.0;
  for (int k = 1; k <= M; ++k) {
    power = power * n;
    fact *= k;
    out += power * (d[k] / fact);
  }
  return out;
}

template <int M>
Jet<M> operator/(const Jet<M>& a, const Jet<M>& b) {
  double x = b.v[0];
  std::array<double, M + 1> d{};
  double r = 1.0 / x, term = r, sign = 1.0, fact = 1.0;
  for (int k = 0; k <= M; ++k) {
    d[k] = sign * fact * term;
    term *= r;
    sign = -sign;
    fact *= (k + 1);
  }
  return a * lift(b, d);
}
template <int M>
Jet<M> operator/(const Jet<M>& a, double c) { return a * (1.0 / c); }
template <int M>
Jet<M> operator/(double c, const Jet<M>& b) { return Jet<M>(c) / b; }

// Elementary functions overloaded for double and jets, so closed-form
// evaluators can be written once as generic lambdas.
namespace jm {

inline double value(double x) { return x; }
template <int M>
double value(const Jet<M>& x) { return x.v[0]; }

inline double exp(double x) { return std::exp(x); }
inline double sin(double x) { return std::sin(x); }
inline double cos(double x) { return std::cos(x); }
inline double sqrt(double x) { return std::sqrt(x); }
inline double log(double x) { return std::log(x); }
inline double pow(double x, double e) { return std::pow(x, e); }

template <int M>
Jet<M> exp(const Jet<M>& a) {
  std::array<double, M + 1> d;
  d.fill(std::exp(a.v[0]));
  return lift(a, d);
}

template <int M>
Jet<M> sin(const Jet<M>& a) {
  double s = std::sin(a.v[0]), c = std::cos(a.v[0]);
  std::array<double, 4> cyc{s, c, -s, -c};
  std::array<double, M + 1> d;
  for (int k = 0; k <= M; ++k) d[k] = cyc[k % 4];
  return lift(a, d);
}

template <int M>
Jet<M> cos(const Jet<M>& a) {
  double s = std::sin(a.v[0]), c = std::cos(a.v[0]);
  std::array<double, 4> cyc{c, -s, -c, s};
  std::array<double, M + 1> d;
  for (int k = 0; k <= M; ++k) d[k] = cyc[k % 4];
  return lift(a, d);
}

template <int M>
Jet<M> pow(const Jet<M>& a, double e) {
  double x = a.v[0];
  std::array<double, M + 1> d;
  double coef = 1.0;
  for (int k = 0; k <= M; ++k) {
    d[k] = coef * std::pow(x, e - k);
    coef *= (e - k);
  }
  return lift(a, d);
}

template <int M>
Jet<M> sqrt(const Jet<M>& a) { return pow(a, 0.5); }

template <int M>
Jet<M> log(const Jet<M>& a) {
  double x = a.v[0];
  std::array<double, M + 1> d;
  d[0] = std::log(x);
  double coef = 1.0;
  for (int k = 1; k <= M; ++k) {
    d[k] = coef / std::pow(x, k);
    coef *= -static_cast<double>(k);
  }
  return lift(a, d);
}

}  // namespace jm

}  // namespace carnot
