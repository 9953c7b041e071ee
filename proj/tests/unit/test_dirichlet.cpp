#include <cmath>
#include <random>

#include "carnot/dirichlet.hpp"
#include "carnot/errors.hpp"
#include "doctest.h"

using namespace carnot;

namespace {

GridSpec unit_grid(int cells) { return GridSpec::cells(Box{{-1.1, -1.1, -0.3}, {1.1, 1.1, 0.3}}, cells); }

const Ball unit_ball(GroupPoint(0, 0, 0), 1.0);

GridSpec lattice_grid() { return group_lattice_grid(unit_ball, 24); }

double interior_max_error(const SampledFunction& h, const std::function<double(const Vec3&)>& u, const Ball& b) {
  auto in = interior_mask(h.grid(), b);
  double e = 0;
  for (size_t n = 0; n < h.size(); ++n)
    if (in[n]) e = std::max(e, std::abs(h[n] - u(h.grid().node(n))));
  return e;
}

}  // namespace

TEST_CASE("problem validation") {
  auto g = unit_grid(32);
  auto one = corpus::polynomial("1");
  CHECK_THROWS_AS(solve_dirichlet(DiscreteDirichletProblem::make(Ball(GroupPoint(0.5, 0, 0), 1.0),
                                                                 EllipticMatrix::identity(), g, one)),
                  DomainError);
  CHECK_THROWS_AS(solve_dirichlet(DiscreteDirichletProblem::make(unit_ball, EllipticMatrix::identity(), unit_grid(20), one)),
                  DomainError);
  CHECK_THROWS_AS(EllipticMatrix(1.0, 2.0, 1.0, 0.5), DomainError);
  SolverConfig bad;
  bad.tolerance = 0;
  CHECK_THROWS_AS(bad.validate(), DomainError);
  SolverConfig lattice;
  lattice.scheme = Scheme::group_lattice;
  CHECK_FALSE(group_lattice_compatible(g));
  CHECK_THROWS_AS(solve_dirichlet(DiscreteDirichletProblem::make(unit_ball, EllipticMatrix::identity(), g, one), lattice),
                  DomainError);
  CHECK_THROWS_AS(group_lattice_grid(unit_ball, 16), DomainError);
}

TEST_CASE("group lattice grid") {
  for (const Ball& b : {unit_ball, Ball(GroupPoint(0.3, -0.7, 0.2), 0.5)}) {
    auto g = group_lattice_grid(b, 24);
    CHECK(group_lattice_compatible(g));
    CHECK(ball_fits(g, b));
    CHECK(g.h[0] == doctest::Approx(2 * b.radius / 24));
    auto s = solve_dirichlet(DiscreteDirichletProblem::make(b, EllipticMatrix::identity(), g, corpus::polynomial("1")));
    CHECK(s.scheme == Scheme::group_lattice);
  }
  auto s = solve_dirichlet(DiscreteDirichletProblem::make(unit_ball, EllipticMatrix::identity(), unit_grid(32),
                                                          corpus::polynomial("1")));
  CHECK(s.scheme == Scheme::averaged);
}

TEST_CASE("constant and affine data are reproduced") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 4; ++trial) {
    auto g = trial % 2 ? lattice_grid() : unit_grid(32);
    auto a = trial < 2 ? EllipticMatrix::identity() : EllipticMatrix::random(0.5, rng);
    auto five = TestFunction::make("5", [](const auto&) { return 5.0; });
    for (const auto& u : {five, corpus::polynomial("x"), corpus::polynomial("y"), corpus::polynomial("t")}) {
      auto prob = DiscreteDirichletProblem::make(unit_ball, a, g, u);
      auto s = solve_dirichlet(prob);
      CHECK(s.diagnostics.residual <= 1e-8);
      CHECK(interior_max_error(s.solution, [&](const Vec3& p) { return u(p); }, unit_ball) <= 1e-8);
      // from a zero start the solver has to do the work
      SolverConfig cold;
      cold.warm_start = false;
      auto c = solve_dirichlet(prob, cold);
      CHECK(c.diagnostics.iterations > 10);
      CHECK(c.diagnostics.residual <= 1e-8);
      CHECK(interior_max_error(c.solution, [&](const Vec3& p) { return u(p); }, unit_ball) <= 1e-6);
    }
  }
}

TEST_CASE("boundary layer keeps the data exactly") {
  auto g = unit_grid(32);
  auto u = corpus::gauge_bump(1.4);
  auto prob = DiscreteDirichletProblem::make(unit_ball, EllipticMatrix::identity(), g, u);
  auto s = solve_dirichlet(prob);
  auto layer = boundary_layer(prob);
  auto in = interior_mask(g, unit_ball);
  CHECK(layer == s.boundary);
  CHECK(in == s.interior);
  size_t count = 0;
  size_t overlap = 0, changed = 0;
  for (size_t n = 0; n < g.size(); ++n) {
    overlap += layer[n] && in[n];
    changed += !in[n] && s.solution[n] != u(g.node(n));
    count += layer[n];
  }
  CHECK(overlap == 0);
  CHECK(changed == 0);
  CHECK(count > 0);
}

namespace {

double gamma_data_error(const GridSpec& g, const EllipticMatrix& a) {
  FundamentalSolution G(a);
  const Vec3 p0{1.3, 0.2, 0.1};
  auto data = SampledFunction::sample(g, [&](const Vec3& q) { return G(h1::compose(h1::inverse(p0), q)); });
  auto s = solve_dirichlet({unit_ball, a, data, SampledFunction(g, 0.0)});
  CHECK(max_principle_check(s).violation <= 1e-6);
  double num = 0, den = 0;
  for (size_t n = 0; n < g.size(); ++n)
    if (s.interior[n]) {
      num += std::pow(s.solution[n] - data[n], 2);
      den += data[n] * data[n];
    }
  return std::sqrt(num / den);
}

}  // namespace

TEST_CASE("fundamental solution data converges under refinement") {
  std::mt19937_64 rng(9);
  auto a = EllipticMatrix::random(0.5, rng);
  double e32 = gamma_data_error(unit_grid(32), a), e64 = gamma_data_error(unit_grid(64), a);
  MESSAGE("averaged stencil: relative interior errors " << e32 << " " << e64);
  CHECK(e64 < e32);
  CHECK(std::log2(e32 / e64) >= 1.0);

  double l24 = gamma_data_error(group_lattice_grid(unit_ball, 24), a);
  double l32 = gamma_data_error(group_lattice_grid(unit_ball, 32), a);
  MESSAGE("group lattice: relative interior errors " << l24 << " " << l32);
  CHECK(l32 < l24);
  CHECK(std::log(l24 / l32) / std::log(32.0 / 24.0) >= 1.0);
}

TEST_CASE("lattice stencil is exact on quadratics") {
  std::mt19937_64 rng(30);
  auto g = lattice_grid();
  for (int trial = 0; trial < 4; ++trial) {
    auto a = EllipticMatrix::random(0.5, rng);
    auto q = TestFunction::make("q", [](const auto& p) { return p[0] * p[0] + 3 * p[0] * p[1] - p[1] * p[1] + p[2]; });
    const double Lq = 2 * a(0, 0) + 6 * a(0, 1) - 2 * a(1, 1);
    auto s = solve_dirichlet(DiscreteDirichletProblem::make(unit_ball, a, g, q, [&](const Vec3&) { return Lq; }));
    CHECK(interior_max_error(s.solution, [&](const Vec3& p) { return q(p); }, unit_ball) <= 1e-10);
  }
}

TEST_CASE("harmonic replacement") {
  auto g = lattice_grid();
  std::mt19937_64 rng(4);
  auto a = EllipticMatrix::random(0.5, rng);
  auto x = corpus::polynomial("x");
  auto hx = harmonic_replacement(x, unit_ball, a, g);
  CHECK(interior_max_error(hx, [&](const Vec3& p) { return x(p); }, unit_ball) <= 1e-8);

  // data vanishing near the boundary gives zero
  auto bump = corpus::gauge_bump(0.5);
  auto hb = harmonic_replacement(bump, unit_ball, a, g);
  auto in = interior_mask(g, unit_ball);
  double worst = 0;
  for (size_t n = 0; n < g.size(); ++n)
    if (in[n]) worst = std::max(worst, std::abs(hb[n]));
  CHECK(worst <= 1e-6);

  // Dirichlet principle
  for (const auto& u : corpus::compact(1.3)) {
    auto prob = DiscreteDirichletProblem::make(unit_ball, a, g, u);
    auto s = solve_dirichlet(prob);
    CHECK(s.diagnostics.energy <= dirichlet_energy(prob, prob.boundary) + 1e-12);
    CHECK(s.diagnostics.energy == doctest::Approx(dirichlet_energy(prob, s.solution)));
  }
}

TEST_CASE("discrete maximum principle across the corpus") {
  auto g = lattice_grid();
  std::mt19937_64 rng(12);
  double worst = 0;
  for (int trial = 0; trial < 3; ++trial) {
    auto a = trial == 0 ? EllipticMatrix::identity() : EllipticMatrix::random(0.5, rng);
    for (const auto& u : corpus::compact(1.3)) {
      auto s = solve_dirichlet(DiscreteDirichletProblem::make(unit_ball, a, g, u));
      worst = std::max(worst, max_principle_check(s).violation);
    }
    auto sx = solve_dirichlet(DiscreteDirichletProblem::make(unit_ball, a, g, corpus::polynomial("x")));
    auto rep = max_principle_check(sx);
    CHECK(rep.interior_min >= rep.boundary_min - 1e-8);
    CHECK(rep.interior_max <= rep.boundary_max + 1e-8);
  }
  MESSAGE("worst maximum-principle violation " << worst);
  CHECK(worst <= 1e-6);
  SampledFunction c(g, 2.0);
  auto in = interior_mask(g, unit_ball);
  CHECK(max_principle_check(c, in, in).violation == 0.0);
}

TEST_CASE("averaged stencil keeps affine data within range") {
  // not monotone: steep data can undershoot by O(h), so only affine data is asserted
  auto g = unit_grid(32);
  std::mt19937_64 rng(12);
  auto a = EllipticMatrix::random(0.5, rng);
  auto s = solve_dirichlet(DiscreteDirichletProblem::make(unit_ball, a, g, corpus::polynomial("x")));
  CHECK(max_principle_check(s).violation <= 1e-8);
}

TEST_CASE("solve is linear and order preserving") {
  auto g = lattice_grid();
  std::mt19937_64 rng(21);
  auto a = EllipticMatrix::random(0.5, rng);
  auto d1 = corpus::poly_bump(1, 1.3), d2 = corpus::oscillatory_bump(4, 1.3);
  auto g1 = [](const Vec3& p) { return std::cos(p[0]) * (1 + p[2]); };
  auto g2 = [](const Vec3& p) { return 1.0 + p[1] * p[1]; };
  SolverConfig tight;
  tight.tolerance = 1e-11;
  auto s1 = solve_dirichlet(DiscreteDirichletProblem::make(unit_ball, a, g, d1, g1), tight);
  auto s2 = solve_dirichlet(DiscreteDirichletProblem::make(unit_ball, a, g, d2, g2), tight);
  auto s12 = solve_dirichlet(DiscreteDirichletProblem::make(unit_ball, a, g, d1.plus(d2),
                                                            [&](const Vec3& p) { return g1(p) + g2(p); }),
                             tight);
  double scale = 0;
  for (double v : s12.solution.values()) scale = std::max(scale, std::abs(v));
  double defect = 0;
  for (size_t n = 0; n < g.size(); ++n)
    defect = std::max(defect, std::abs(s12.solution[n] - s1.solution[n] - s2.solution[n]));
  CHECK(defect <= 1e-8 * scale);

  // g1 <= g2 with equal data gives h1 >= h2
  for (const auto& u : corpus::compact(1.3)) {
    auto lo = solve_dirichlet(DiscreteDirichletProblem::make(unit_ball, a, g, u, g2), tight);
    auto hi = solve_dirichlet(
        DiscreteDirichletProblem::make(unit_ball, a, g, u, [&](const Vec3& p) { return g2(p) + 0.5 + p[0] * p[0]; }),
        tight);
    double worst = 0;
    for (size_t n = 0; n < g.size(); ++n) worst = std::max(worst, hi.solution[n] - lo.solution[n]);
    CHECK(worst <= 1e-10);
  }
}

TEST_CASE("iteration cap reports non-convergence") {
  auto g = unit_grid(32);
  SolverConfig cfg;
  cfg.max_iterations = 3;
  cfg.warm_start = false;
  try {
    solve_dirichlet(DiscreteDirichletProblem::make(unit_ball, EllipticMatrix::identity(), g, corpus::polynomial("x")),
                    cfg);
    FAIL("expected a convergence failure");
  } catch (const ConvergenceError& e) {
    CHECK(e.iterations == 3);
    CHECK(e.residual > 1e-8);
  }
}
