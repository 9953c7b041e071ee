#pragma once

#include <array>
#include <chrono>
#include <functional>
#include <map>
#include <numbers>
#include <optional>

#include "carnot/verify.hpp"

namespace carnot::detail {

constexpr double kQ = 4.0;
constexpr double kUnitBall = std::numbers::pi * std::numbers::pi / 8.0;

inline double ball_measure(double r) { return kUnitBall * r * r * r * r; }

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

// Index pairs in the order X1X1, X1X2, X2X1, X2X2.
inline const std::array<MultiIndex, 4>& second_pairs() {
  static const std::array<MultiIndex, 4> P{MultiIndex{0, 0}, MultiIndex{0, 1}, MultiIndex{1, 0}, MultiIndex{1, 1}};
  return P;
}

inline std::array<double, 4> second_derivatives(const TestFunction& u, const Vec3& p) {
  std::array<double, 4> d{};
  for (int n = 0; n < 4; ++n) d[n] = u.derivative(second_pairs()[n], p);
  return d;
}

// sum a_ij d_ij with a = (a11, a12, a22).
inline double contract(const std::array<double, 3>& a, const std::array<double, 4>& d) {
  return a[0] * d[0] + a[1] * (d[1] + d[2]) + a[2] * d[3];
}

inline std::array<double, 3> entries_of(const EllipticMatrix& a) { return {a(0, 0), a(0, 1), a(1, 1)}; }

using Coefficients = std::function<std::array<double, 3>(const Vec3&)>;

// Quadratures reused across balls of equal radius.
class QuadratureCache {
 public:
  explicit QuadratureCache(int cells) : cells_(cells) {}
  const BallQuadrature& get(double r) {
    auto it = cache_.find(r);
    if (it == cache_.end()) it = cache_.emplace(r, BallQuadrature(r, cells_)).first;
    return it->second;
  }
  int cells() const { return cells_; }

 private:
  int cells_;
  std::map<double, BallQuadrature> cache_;
};

// Visits the quadrature points of B(c, rho) for an integrand vanishing outside
// `support` and returns the point weight. When the support ball is the smaller
// one its own quadrature is used with the indicator of B(c, rho), so tiny
// supports inside big balls stay resolved.
double ball_points(QuadratureCache& quads, const Vec3& c, double rho, const std::optional<Ball>& support,
                   const std::function<void(const Vec3&)>& fn);
// Integral of f over the same points; `covered` gets their total volume.
double integrate_ball(QuadratureCache& quads, const Vec3& c, double rho, const std::optional<Ball>& support,
                      const std::function<double(const Vec3&)>& f, double* covered = nullptr);

// Terms of the oscillation estimate on one ball, shared by the model-operator and
// variable-coefficient checks: osc_ij = avg_{B(c,r)} |X_iX_j u - mean|, lhs = max_ij,
// t1 = (1/k) sum_ij avg_{B(c,kr)} |X_iX_j u|, t2 = k^{2+Q/p} (avg_{B(c,kr)} |sum a_ij X_iX_j u|^p)^{1/p}.
struct BallTerms {
  std::array<double, 4> osc{};
  double lhs = 0.0;
  double t1 = 0.0;
  double t2 = 0.0;
};
BallTerms ball_terms(QuadratureCache& quads, const TestFunction& u, const Coefficients& a, const Vec3& c, double r,
                     double k, double p);

// Mean oscillation of f over a ball, shift-stable (constants give exactly 0).
double quadrature_oscillation(const BallQuadrature& q, const Vec3& c, const std::function<double(const Vec3&)>& f);

}  // namespace carnot::detail
