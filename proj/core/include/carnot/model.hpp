#pragma once

#include <array>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "carnot/calculus.hpp"
#include "carnot/grid.hpp"

namespace carnot {

// Symmetric 2x2 matrix with eigenvalues in [mu, 1/mu].
class EllipticMatrix {
 public:
  EllipticMatrix(double a11, double a12, double a22, double mu);
  static EllipticMatrix identity(double mu = 1.0);
  // Eigenvalues uniform in [mu, 1/mu], uniformly random eigenbasis.
  static EllipticMatrix random(double mu, std::mt19937_64& rng);

  double operator()(int i, int j) const { return i == j ? (i == 0 ? a11_ : a22_) : a12_; }
  double mu() const { return mu_; }
  std::array<double, 2> eigenvalues() const;
  // Lower Cholesky factor A (row-major 2x2) with a = A A^T.
  std::array<double, 4> cholesky() const;

 private:
  double a11_, a12_, a22_, mu_;
};

// Spatially varying symmetric coefficients a_ij(x).
struct CoefficientField {
  std::function<std::array<double, 3>(const Vec3&)> entries;  // a11, a12, a22
  double mu = 1.0;
  std::string vmo_class;

  EllipticMatrix at(const Vec3& x) const;
  double entry(int i, int j, const Vec3& x) const;

  static CoefficientField constant(const EllipticMatrix& a);
  // (1 - amplitude psi(scale x)) I with psi = (1 + sin(log(1 + log(1/rho))))/2
  // for rho < 1 and psi = 1/2 beyond: VMO, discontinuous at the origin.
  // Elliptic with constant mu whenever amplitude <= 1 - mu.
  static CoefficientField loglog(double amplitude, double scale, double mu);
  static double loglog_profile(double rho);
};

// c in Gamma_I = -c rho^-2, from the flux of the horizontal gradient of rho^-2
// through the unit gauge sphere. Computed once and cached.
double gamma_normalization();

class FundamentalSolution {
 public:
  explicit FundamentalSolution(const EllipticMatrix& abar);

  // Gamma_abar(p) = Gamma_I(phi_{A^-1} p) / det(A)^2, phi_A(x,y,t) = (A(x,y), det(A) t).
  double operator()(const Vec3& p) const;
  const EllipticMatrix& matrix() const { return abar_; }
  double normalization() const { return c_; }
  double det() const { return det_; }
  // Pulled-back squared horizontal size |A^-1 z|^2 and gauge of phi_{A^-1} p.
  double pulled_gauge4(const Vec3& p) const;
  // sup of |Gamma| on the unit gauge sphere (sampled).
  double sphere_sup() const;

 private:
  EllipticMatrix abar_;
  std::array<double, 4> Ainv_{};
  double det_ = 1.0;
  double c_ = 0.0;
};

double fundamental_solution(const EllipticMatrix& abar, const GroupPoint& p);

// sum abar_ij X_i X_j u with composed centred differences.
SampledFunction model_apply(const EllipticMatrix& abar, const SampledFunction& u);
// Exact second derivatives sampled on the grid.
SampledFunction model_apply(const EllipticMatrix& abar, const TestFunction& u, const GridSpec& grid);
double model_apply_at(const EllipticMatrix& abar, const TestFunction& u, const Vec3& p);

SampledFunction variable_apply(const CoefficientField& a, const SampledFunction& u);
SampledFunction variable_apply(const CoefficientField& a, const TestFunction& u, const GridSpec& grid);
double variable_apply_at(const CoefficientField& a, const TestFunction& u, const Vec3& p);

// Centred-difference L u at an arbitrary point with spacing h along each axis.
double model_apply_fd(const EllipticMatrix& abar, const std::function<double(const Vec3&)>& u, const Vec3& p,
                      double h);

// u(x) = int Gamma(y^-1 x) f(y) dy by node quadrature over supp f. The cell
// holding the pole is integrated exactly in t and with a Duffy rule in (x,y);
// the 26 neighbouring cells use tensor Gauss rules.
SampledFunction newtonian_potential(const FundamentalSolution& G, const SampledFunction& f);
// Same quadrature evaluated at arbitrary points.
std::vector<double> newtonian_potential_at(const FundamentalSolution& G, const SampledFunction& f,
                                           const std::vector<Vec3>& points);

}  // namespace carnot
