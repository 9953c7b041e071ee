#include <cmath>
#include <random>

#include "carnot/errors.hpp"
#include "carnot/model.hpp"
#include "doctest.h"

using namespace carnot;

namespace {

Vec3 random_point(std::mt19937_64& rng, double scale = 2.0) {
  std::uniform_real_distribution<double> d(-scale, scale);
  return {d(rng), d(rng), d(rng)};
}

std::vector<EllipticMatrix> matrices(std::mt19937_64& rng) {
  std::vector<EllipticMatrix> out{EllipticMatrix::identity(0.5)};
  for (int n = 0; n < 3; ++n) out.push_back(EllipticMatrix::random(0.5, rng));
  return out;
}

GridSpec potential_grid(int cells) {
  return GridSpec::cells(Box{{-0.75, -0.75, -0.15}, {0.75, 0.75, 0.15}}, cells);
}

}  // namespace

TEST_CASE("elliptic matrix validation") {
  CHECK_THROWS_AS(EllipticMatrix(1, 0, -1, 0.5), DomainError);
  CHECK_THROWS_AS(EllipticMatrix(3, 0, 1, 0.5), DomainError);
  CHECK_NOTHROW(EllipticMatrix(2, 0.5, 1, 0.4));
  std::mt19937_64 rng(3);
  for (int n = 0; n < 200; ++n) {
    auto a = EllipticMatrix::random(0.5, rng);
    auto ev = a.eigenvalues();
    CHECK(ev[0] >= 0.5 - 1e-12);
    CHECK(ev[1] <= 2.0 + 1e-12);
    CHECK(a(0, 1) == a(1, 0));
    auto A = a.cholesky();
    CHECK(A[0] * A[0] == doctest::Approx(a(0, 0)));
    CHECK(A[2] * A[0] == doctest::Approx(a(1, 0)));
    CHECK(A[2] * A[2] + A[3] * A[3] == doctest::Approx(a(1, 1)));
  }
}

TEST_CASE("coefficient fields") {
  CHECK_THROWS_AS(CoefficientField::loglog(0.6, 1.0, 0.5), DomainError);
  auto a = CoefficientField::loglog(0.4, 1.0, 0.5);
  std::mt19937_64 rng(5);
  for (int n = 0; n < 1000; ++n) {
    auto m = a.at(random_point(rng, 1.5));
    CHECK(m.eigenvalues()[0] >= 0.5);
  }
  CHECK(CoefficientField::loglog_profile(2.0) == 0.5);
  CHECK(CoefficientField::loglog_profile(1.0) == doctest::Approx(0.5));
  // oscillates without limit as rho -> 0
  double lo = 1, hi = 0;
  for (double e = 1; e < 300; e *= 1.1) {
    double v = CoefficientField::loglog_profile(std::exp(-e));
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(lo < 0.05);
  CHECK(hi > 0.95);
}

TEST_CASE("normalization constant is 1/(2 pi)") {
  CHECK(gamma_normalization() == doctest::Approx(1.0 / (2.0 * M_PI)).epsilon(1e-9));
}

TEST_CASE("fundamental solution: homogeneity, sign, symmetry") {
  std::mt19937_64 rng(7);
  for (const auto& a : matrices(rng)) {
    FundamentalSolution G(a);
    CHECK_THROWS_AS(G({0, 0, 0}), SingularityError);
    for (int n = 0; n < 10000; ++n) {
      Vec3 p = random_point(rng);
      double g = G(p);
      CHECK(g <= 0.0);
      auto q = h1::dilate(2.0, p);
      CHECK(std::abs(G(q) / g - 0.25) <= 1e-12);
      auto pi = h1::inverse(p);
      CHECK(std::abs(G(pi) - g) <= 1e-12 * std::abs(g));
    }
  }
  FundamentalSolution G(EllipticMatrix::identity());
  Vec3 p{0.3, -0.4, 0.2};
  CHECK(G(p) == doctest::Approx(-gamma_normalization() / std::pow(h1::gauge(p), 2)));
  CHECK(fundamental_solution(EllipticMatrix::identity(), GroupPoint(0.3, -0.4, 0.2)) == doctest::Approx(G(p)));
}

TEST_CASE("fundamental solution: uniform bound over the ellipticity class") {
  std::mt19937_64 rng(11);
  double worst = 0;
  for (int m = 0; m < 100; ++m) {
    FundamentalSolution G(EllipticMatrix::random(0.5, rng));
    for (int n = 0; n < 200; ++n) {
      Vec3 p = random_point(rng);
      worst = std::max(worst, std::abs(G(p)) * std::pow(h1::gauge(p), 2));
    }
  }
  // |Gamma_abar| rho^2 <= c(mu); for mu = 1/2 the pulled-back gauge is within a factor 2 of rho
  CHECK(worst < 4.0 * 4.0 * gamma_normalization());
  CHECK(worst > 0.0);
}

TEST_CASE("fundamental solution is annihilated at second order") {
  std::mt19937_64 rng(13);
  std::vector<Vec3> pts{{1, 0, 0}, {0, 0.8, 0.1}, {0.3, 0.3, 0.2}, {-0.5, 0.2, -0.2}};
  for (const auto& a : matrices(rng)) {
    FundamentalSolution G(a);
    auto fn = [&](const Vec3& q) { return G(q); };
    std::vector<double> res;
    for (double h : {0.04, 0.02, 0.01}) {
      double worst = 0;
      for (const auto& p : pts) worst = std::max(worst, std::abs(model_apply_fd(a, fn, p, h)));
      res.push_back(worst);
    }
    for (size_t n = 1; n < res.size(); ++n) {
      double ratio = res[n - 1] / res[n];
      CHECK(ratio >= 3.0);
      CHECK(ratio <= 5.0);
    }
  }
}

TEST_CASE("model_apply examples") {
  auto g = GridSpec::cells(Box{{-1, -1, -1}, {1, 1, 1}}, 16);
  auto r2 = corpus::polynomial("x2+y2");
  auto L = model_apply(EllipticMatrix::identity(), r2, g);
  for (double v : L.values()) CHECK(v == doctest::Approx(4.0));
  auto Lfd = model_apply(EllipticMatrix::identity(), SampledFunction::sample(g, [&](const Vec3& p) { return r2(p); }));
  for (int i = 2; i < 15; ++i)
    for (int j = 2; j < 15; ++j)
      for (int k = 2; k < 15; ++k) CHECK(Lfd.at(i, j, k) == doctest::Approx(4.0).epsilon(1e-9));

  std::mt19937_64 rng(17);
  auto x = corpus::polynomial("x");
  for (int n = 0; n < 5; ++n) {
    auto a = EllipticMatrix::random(0.5, rng);
    auto L0 = model_apply(a, x, g);
    for (double v : L0.values()) CHECK(std::abs(v) <= 1e-12);
  }

  // random matrix: composed differences converge at second order in the interior
  auto a = EllipticMatrix::random(0.5, rng);
  auto interior_error = [&](const TestFunction& u, int cells) {
    auto grid = GridSpec::cells(Box{{-1, -1, -0.4}, {1, 1, 0.4}}, cells);
    auto exact = model_apply(a, u, grid);
    auto fd = model_apply(a, SampledFunction::sample(grid, [&](const Vec3& p) { return u(p); }));
    double e = 0;
    for (int i = 2; i < grid.n[0] - 2; ++i)
      for (int j = 2; j < grid.n[1] - 2; ++j)
        for (int k = 2; k < grid.n[2] - 2; ++k) e += std::pow(fd.at(i, j, k) - exact.at(i, j, k), 2);
    return std::sqrt(e * grid.weight());
  };
  auto gauss = corpus::gaussian();
  double e16 = interior_error(gauss, 16), e32 = interior_error(gauss, 32), e64 = interior_error(gauss, 64);
  CHECK(std::log2(e16 / e32) > 1.7);
  CHECK(std::log2(e32 / e64) > 1.7);
  // compact bumps are steep in t and only reach the asymptotic rate on finer grids
  auto bump = corpus::gauge_bump(0.8);
  double b32 = interior_error(bump, 32), b64 = interior_error(bump, 64);
  CHECK(b64 < 0.5 * b32);
}

TEST_CASE("variable_apply examples") {
  auto g = GridSpec::cells(Box{{-1, -1, -1}, {1, 1, 1}}, 12);
  auto u = corpus::gauge_bump(0.9);
  auto I = CoefficientField::constant(EllipticMatrix::identity());
  auto lhs = variable_apply(I, u, g);
  auto rhs = model_apply(EllipticMatrix::identity(), u, g);
  for (size_t n = 0; n < g.size(); ++n) CHECK(lhs[n] == rhs[n]);

  CoefficientField scalar{[](const Vec3& p) {
                            double s = 1 + p[0] * p[0] / (1 + p[0] * p[0]);
                            return std::array<double, 3>{s, 0, s};
                          },
                          0.5, "smooth"};
  auto L = variable_apply(scalar, corpus::polynomial("x2+y2"), g);
  for (size_t n = 0; n < g.size(); ++n) {
    double x = g.node(n)[0];
    CHECK(L[n] == doctest::Approx(4 * (1 + x * x / (1 + x * x))));
  }

  // |Lu - Lbar u| <= sum |a_ij - abar_ij| |X_i X_j u|
  auto a = CoefficientField::loglog(0.4, 1.0, 0.5);
  std::mt19937_64 rng(19);
  auto abar = EllipticMatrix::random(0.5, rng);
  auto v = corpus::oscillatory_bump(4, 1.0);
  for (int n = 0; n < 500; ++n) {
    Vec3 p = random_point(rng, 1.0);
    double diff = std::abs(variable_apply_at(a, v, p) - model_apply_at(abar, v, p));
    double bound = 0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) bound += std::abs(a.entry(i, j, p) - abar(i, j)) * std::abs(v.derivative({i, j}, p));
    CHECK(diff <= bound + 1e-12);
  }
}

TEST_CASE("newtonian potential: trivial, linear, sign") {
  FundamentalSolution G(EllipticMatrix::identity(0.5));
  auto g = potential_grid(12);
  SampledFunction zero(g, 0.0);
  auto u0 = newtonian_potential(G, zero);
  for (double v : u0.values()) CHECK(v == 0.0);

  auto f1 = SampledFunction::sample(g, [](const Vec3& p) { return corpus::gauge_bump(0.5)(p); });
  auto f2 = SampledFunction::sample(g, [](const Vec3& p) { return corpus::poly_bump(1, 0.5)(p); });
  auto u1 = newtonian_potential(G, f1), u2 = newtonian_potential(G, f2);
  auto sum = f1;
  sum += f2;
  auto u12 = newtonian_potential(G, sum);
  double scale = 0;
  for (double v : u1.values()) scale = std::max(scale, std::abs(v));
  for (size_t n = 0; n < g.size(); ++n) CHECK(std::abs(u12[n] - u1[n] - u2[n]) <= 1e-12 * scale);
  for (double v : u1.values()) CHECK(v <= 0.0);

  auto wide = SampledFunction::sample(g, [](const Vec3& p) { return corpus::gauge_bump(0.74)(p); });
  CHECK_THROWS_AS(newtonian_potential(G, wide), DomainError);

  auto at = newtonian_potential_at(G, f1, {g.node(3, 4, 5)});
  CHECK(at[0] == doctest::Approx(u1.at(3, 4, 5)).epsilon(1e-12));
}

TEST_CASE("newtonian potential: far field of a mollified point mass") {
  std::mt19937_64 rng(23);
  auto g = GridSpec::cells(Box{{-0.12, -0.12, -0.004}, {0.12, 0.12, 0.004}}, 32);
  auto f = SampledFunction::sample(g, [](const Vec3& p) { return corpus::gauge_bump(0.1)(p); });
  double mass = 0;
  for (double v : f.values()) mass += v;
  mass *= g.weight();
  std::vector<Vec3> pts{{1, 0, 0}, {0, 0.8, 0.1}, {0.3, 0.3, 0.2}, {-0.5, 0.2, -0.2}};
  for (const auto& a : matrices(rng)) {
    FundamentalSolution G(a);
    auto u = newtonian_potential_at(G, f, pts);
    for (size_t n = 0; n < pts.size(); ++n) CHECK(std::abs(u[n] / (mass * G(pts[n])) - 1) < 0.02);
  }
}

TEST_CASE("newtonian potential: residual decreases under refinement") {
  FundamentalSolution G(EllipticMatrix::identity(0.5));
  std::vector<double> res;
  for (int cells : {12, 16, 24}) {
    auto g = potential_grid(cells);
    auto f = SampledFunction::sample(g, [](const Vec3& p) { return corpus::gauge_bump(0.5)(p); });
    auto L = model_apply(G.matrix(), newtonian_potential(G, f));
    double num = 0, den = 0;
    for (int i = 2; i < g.n[0] - 2; ++i)
      for (int j = 2; j < g.n[1] - 2; ++j)
        for (int k = 2; k < g.n[2] - 2; ++k) {
          size_t n = g.index(i, j, k);
          num += std::pow(L[n] - f[n], 2);
          den += f[n] * f[n];
        }
    res.push_back(std::sqrt(num / den));
  }
  CHECK(res[1] < res[0]);
  CHECK(res[2] < res[1]);
  CHECK(res[2] < 0.15);
}
