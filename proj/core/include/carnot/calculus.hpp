#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "carnot/grid.hpp"
#include "carnot/group.hpp"
#include "carnot/jet.hpp"

namespace carnot {

// Sequence of generator indices, 0 for X1 and 1 for X2; X_I = X_{I[0]} X_{I[1]} ...
using MultiIndex = std::vector<int>;

template <int M>
using JetPoint = std::array<Jet<M>, 3>;

// Closed-form function on H1 with exact horizontal derivatives up to order 3.
// The evaluator is written once as a generic callable and instantiated for
// doubles and for jets; X_I u(p) is the mixed jet coefficient of
// u(p o s_1 e_{I[0]} o s_2 e_{I[1]} o ...), which uses nothing but the group law.
class TestFunction {
 public:
  template <class F>
  static TestFunction make(std::string id, F f, std::optional<Ball> support = std::nullopt) {
    TestFunction u;
    u.id_ = std::move(id);
    u.support_ = support;
    auto impl = std::make_shared<Impl>();
    impl->f0 = [f](const Vec3& p) { return static_cast<double>(f(p)); };
    impl->f1 = [f](const JetPoint<1>& p) { return Jet<1>(f(p)); };
    impl->f2 = [f](const JetPoint<2>& p) { return Jet<2>(f(p)); };
    impl->f3 = [f](const JetPoint<3>& p) { return Jet<3>(f(p)); };
    u.impl_ = std::move(impl);
    return u;
  }

  const std::string& id() const { return id_; }
  const std::optional<Ball>& support() const { return support_; }
  const MultiIndex& applied() const { return applied_; }

  // Value of the function, including any fields already applied.
  double operator()(const Vec3& p) const;
  // X_I applied to this function.
  double derivative(const MultiIndex& I, const Vec3& p) const;
  double dt(const Vec3& p) const;

  TestFunction apply(int field) const;

  // Combinators; they require no pending fields.
  TestFunction plus_affine(double c0, double c1, double c2) const;
  TestFunction dilated(double lambda) const;          // u o D(lambda)
  TestFunction translated(const Vec3& z) const;       // u o L_z
  TestFunction scaled(double c) const;
  TestFunction times(const TestFunction& other) const;
  TestFunction plus(const TestFunction& other) const;
  // u o phi, phi(x,y,t) = (M(x,y), det(M) t)
  TestFunction pulled_back(const std::array<double, 4>& m) const;
  TestFunction with_id(std::string id) const;

  double raw(const Vec3& p) const { return impl_->f0(p); }
  Jet<1> raw(const JetPoint<1>& p) const { return impl_->f1(p); }
  Jet<2> raw(const JetPoint<2>& p) const { return impl_->f2(p); }
  Jet<3> raw(const JetPoint<3>& p) const { return impl_->f3(p); }

 private:
  struct Impl {
    std::function<double(const Vec3&)> f0;
    std::function<Jet<1>(const JetPoint<1>&)> f1;
    std::function<Jet<2>(const JetPoint<2>&)> f2;
    std::function<Jet<3>(const JetPoint<3>&)> f3;
  };
  void require_plain(const char* what) const;

  std::string id_;
  std::optional<Ball> support_;
  MultiIndex applied_;
  std::shared_ptr<const Impl> impl_;
};

// X_i on sampled data: centred differences of the Euclidean partials combined
// with the polynomial coefficients, one-sided on the box faces.
SampledFunction apply_field(int i, const SampledFunction& u);
TestFunction apply_field(int i, const TestFunction& u);
SampledFunction apply_fields(const MultiIndex& I, const SampledFunction& u);

// max |(X_iX_j - X_jX_i)u - [X_i,X_j]u| over the nodes of `grid`.
double commutator_check(int i, int j, const TestFunction& u, const GridSpec& grid);

using Region = std::variant<Ball, Box>;

// sum_{h<=k} ||D^h u||_{L^p(region)}, k <= 2 on sampled data.
double sobolev_norm(const SampledFunction& u, int k, double p, const Region& region);
// Same with exact derivatives, k <= 3, by fitted ball quadrature.
double sobolev_norm(const TestFunction& u, int k, double p, const Ball& region, int cells = 48);

// ||D^h u||_{L^p(ball)} for a single order h.
double seminorm(const TestFunction& u, int h, double p, const Ball& ball, int cells = 48);

// Smooth phi = 1 on B(0, sigma r), supported in B(0, sigma' r), sigma' = (1+sigma)/2.
TestFunction make_cutoff(double sigma, double r);

struct AffineNormalization {
  SampledFunction u;
  double c0 = 0.0;
  std::array<double, 2> c{0.0, 0.0};
};

// u + c0 + c1 x + c2 y with int_{B4} = 0 and int_{B_{4 Lambda}} X_i = 0.
AffineNormalization normalize_affine(const SampledFunction& u, double Lambda);

// Analytic corpus.
namespace corpus {

TestFunction gauge_bump(double R, const Vec3& center = {0, 0, 0});
TestFunction poly_bump(int which, double R);  // which in {0,1,2}
TestFunction oscillatory_bump(double omega, double R);
TestFunction anisotropic_bump(double R, double elongation);
TestFunction gaussian();  // exp(-rho^4), not compactly supported
TestFunction polynomial(const std::string& name);  // x, y, t, x2+y2, harmonic3, xt, x3, ...

// Compactly supported members in B(0, R): bumps, polynomial x bump,
// sin(omega x) bump for omega in {2,4,8}, and t-elongated bumps.
std::vector<TestFunction> compact(double R = 1.0);

}  // namespace corpus

}  // namespace carnot
