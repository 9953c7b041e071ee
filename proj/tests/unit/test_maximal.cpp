#include <cmath>
#include <random>
#include <sstream>

#include "carnot/calculus.hpp"
#include "carnot/errors.hpp"
#include "carnot/maximal.hpp"
#include "doctest.h"

using namespace carnot;

namespace {

GridSpec unit_grid(int cells) { return GridSpec::cells(Box{{-1.1, -1.1, -0.3}, {1.1, 1.1, 0.3}}, cells); }

SampledFunction sample(const GridSpec& g, const TestFunction& u) {
  return SampledFunction::sample(g, [&](const Vec3& p) { return u(p); });
}

MaximalConfig config(const GridSpec& g, double r_max = 0.5) {
  return MaximalConfig{BallLattice::geometric(2.0 * g.h[0], r_max, 2.0 * g.h[0]), 2.0, {1.5, 2.0, 3.0}};
}

// Independent enumeration of the lattice: every node congruent to the middle
// node modulo the strides, every radius, every node tested for membership.
template <class Stat>
double brute_force(const SampledFunction& f, const Vec3& x, const MaximalConfig& cfg, double r_cap,
                   const std::function<bool(const Vec3&)>& center_ok, Stat stat) {
  const GridSpec& g = f.grid();
  auto s = cfg.lattice.node_strides(g);
  double best = -1;
  for (int i = 0; i < g.n[0]; ++i)
    for (int j = 0; j < g.n[1]; ++j)
      for (int k = 0; k < g.n[2]; ++k) {
        if ((i - (g.n[0] - 1) / 2) % s[0] || (j - (g.n[1] - 1) / 2) % s[1] || (k - (g.n[2] - 1) / 2) % s[2]) continue;
        Vec3 c = g.node(i, j, k);
        if (!center_ok(c)) continue;
        for (double r : cfg.lattice.radii) {
          if (r > r_cap) break;
          Ball b(GroupPoint(c), r);
          if (!b.contains(x) || !g.box.contains(Box::around(b))) continue;
          std::vector<double> vals;
          for (size_t n = 0; n < g.size(); ++n)
            if (b.contains(g.node(n))) vals.push_back(f[n]);
          best = std::max(best, stat(vals));
        }
      }
  return best;
}

double mean_abs(const std::vector<double>& v) {
  double s = 0;
  for (double a : v) s += std::abs(a);
  return s / v.size();
}

double oscillation(const std::vector<double>& v) {
  double m = 0;
  for (double a : v) m += a;
  m /= v.size();
  double s = 0;
  for (double a : v) s += std::abs(a - m);
  return s / v.size();
}

double grid_lp(const SampledFunction& f, double p) {
  double s = 0;
  for (double v : f.values()) s += std::pow(std::abs(v), p);
  return std::pow(s * f.grid().weight(), 1 / p);
}

}  // namespace

TEST_CASE("domain chain nesting") {
  DomainChain chain(1.0, 6);
  CHECK(chain.nesting_holds());
  CHECK(chain.margin(2) == doctest::Approx(0.025));
  CHECK(chain.domain(3).radius == doctest::Approx(1.3));
  CHECK(DomainChain(2.0, 4, 0.05).nesting_holds());
  CHECK_THROWS_AS(DomainChain(1.0, 4, 0.08), DomainError);
  CHECK_THROWS_AS(chain.domain(6), DomainError);
}

TEST_CASE("ball lattice") {
  auto L = BallLattice::geometric(0.1, 1.0, 0.2);
  CHECK(L.radii.front() == 0.1);
  CHECK(L.radii.back() <= 1.0);
  CHECK(L.radii.size() == 11);
  auto R = L.refined();
  CHECK(R.stride == 0.1);
  CHECK(R.radii.size() == 21);
  for (double r : L.radii) CHECK(std::find(R.radii.begin(), R.radii.end(), r) != R.radii.end());
  CHECK_THROWS_AS(BallLattice::geometric(0.0, 1.0, 0.1), DomainError);
  CHECK_THROWS_AS((BallLattice{0.1, {0.3, 0.2}}.validate()), DomainError);
  CHECK_THROWS_AS((MaximalConfig{L, 1.0, {2.0}}.validate()), DomainError);
}

TEST_CASE("ball averages") {
  auto g = unit_grid(32);
  SampledFunction c(g, 2.5);
  Ball b(GroupPoint(0.1, -0.2, 0.05), 0.5);
  CHECK(ball_average(c, b) == 2.5);
  CHECK(ball_oscillation(c, b) == 0.0);
  auto x = sample(g, corpus::polynomial("x"));
  CHECK(std::abs(ball_average(x, Ball(GroupPoint(0, 0, 0), 0.6))) < 1e-14);
  CHECK_THROWS_AS(ball_average(c, Ball(GroupPoint(0.9, 0, 0), 0.5)), DomainError);
  CHECK_THROWS_AS(ball_average(c, Ball(GroupPoint(0.01, 0.01, 0.001), 1e-3)), DomainError);

  // against the same average on a grid four times finer
  auto fine = unit_grid(128);
  for (Vec3 ctr : {Vec3{0, 0, 0}, Vec3{0.2, -0.1, 0.03}}) {
    auto u = corpus::gauge_bump(0.8, {-0.1, 0.15, -0.02});
    Ball ball(GroupPoint(ctr), 0.55);
    double coarse_avg = ball_average(sample(unit_grid(32), u), ball);
    double fine_avg = ball_average(sample(fine, u), ball);
    CHECK(std::abs(coarse_avg - fine_avg) <= 0.01 * std::abs(fine_avg));
  }
}

TEST_CASE("maximal function basics") {
  auto g = unit_grid(24);
  auto cfg = config(g);
  SampledFunction c(g, -1.5);
  auto Mc = hl_maximal_field(c, cfg);
  size_t covered = 0;
  for (size_t n = 0; n < g.size(); ++n)
    if (Mc.covered[n]) {
      ++covered;
      CHECK(Mc.values[n] == 1.5);
    }
  CHECK(covered > g.size() / 4);
  CHECK(hl_maximal(c, {0.1, 0.1, 0.0}, cfg) == 1.5);
  CHECK_THROWS_AS(hl_maximal(c, {1.09, 1.09, 0.29}, cfg), DomainError);

  // pointwise and field versions agree
  auto f = sample(g, corpus::poly_bump(1, 0.8));
  auto Mf = hl_maximal_field(f, cfg);
  for (Vec3 x : {Vec3{0, 0, 0}, g.node(10, 13, 9), g.node(7, 12, 15)}) {
    int i = static_cast<int>(std::lround((x[0] + 1.1) / g.h[0]));
    int j = static_cast<int>(std::lround((x[1] + 1.1) / g.h[1]));
    int k = static_cast<int>(std::lround((x[2] + 0.3) / g.h[2]));
    CHECK(hl_maximal(f, x, cfg) == doctest::Approx(Mf.values.at(i, j, k)).epsilon(1e-12));
  }
}

TEST_CASE("maximal function dominates at Lebesgue points") {
  auto u = corpus::gauge_bump(0.8);
  std::vector<double> deficit;
  for (int cells : {16, 32}) {
    auto g = unit_grid(cells);
    auto f = sample(g, u);
    auto M = hl_maximal_field(f, config(g));
    double worst = 0;
    for (size_t n = 0; n < g.size(); ++n)
      if (M.covered[n]) worst = std::max(worst, std::abs(f[n]) - M.values[n]);
    deficit.push_back(worst);
  }
  CHECK(deficit[0] > 0);
  CHECK(deficit[1] < deficit[0]);
}

TEST_CASE("maximal function of an indicator against brute force") {
  auto g = GridSpec::cells(Box{{-3, -3, -2.5}, {3, 3, 2.5}}, 20);
  Ball unit(GroupPoint(0, 0, 0), 1.0);
  auto f = SampledFunction::sample(g, [&](const Vec3& p) { return unit.contains(p) ? 1.0 : 0.0; });
  MaximalConfig cfg{BallLattice::geometric(0.7, 2.2, 0.6), 2.0, {2.0}};
  Vec3 x{2, 0, 0};
  double oracle = brute_force(f, x, cfg, 1e9, [](const Vec3&) { return true; }, mean_abs);
  CHECK(oracle > 0);
  CHECK(hl_maximal(f, x, cfg) == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("sharp maximal function") {
  auto g = unit_grid(20);
  auto cfg = config(g, 0.45);
  DomainChain chain(10.0, 4);  // eps = 0.25, Omega_m covers the grid box
  SampledFunction c(g, 3.0);
  auto S = local_sharp_maximal_field(c, 0, chain, cfg);
  for (size_t n = 0; n < g.size(); ++n)
    if (S.covered[n]) CHECK(S.values[n] == 0.0);
  CHECK(local_sharp_maximal(c, {0, 0, 0}, 0, chain, cfg) == 0.0);

  // f# <= 2 Mf on every node covered by both
  for (const auto& u : corpus::compact(0.9)) {
    auto f = sample(g, u);
    auto M = hl_maximal_field(f, cfg);
    auto Sf = local_sharp_maximal_field(f, 0, chain, cfg);
    for (size_t n = 0; n < g.size(); ++n)
      if (M.covered[n] && Sf.covered[n]) CHECK(Sf.values[n] <= 2 * M.values[n] * (1 + 1e-12));
  }

  // sign(x) at the origin, against brute force
  auto sgn = SampledFunction::sample(g, [](const Vec3& p) { return p[0] > 0 ? 1.0 : (p[0] < 0 ? -1.0 : 0.0); });
  Vec3 o{0, 0, 0};
  double oracle = brute_force(sgn, o, cfg, chain.margin(0), [&](const Vec3& p) { return chain.contains(0, p); },
                              oscillation);
  CHECK(oracle > 0.5);
  CHECK(local_sharp_maximal(sgn, o, 0, chain, cfg) == doctest::Approx(oracle).epsilon(1e-12));

  DomainChain small(0.2, 3);
  CHECK_THROWS_AS(local_sharp_maximal(sgn, {0.5, 0, 0}, 0, small, cfg), DomainError);
}

TEST_CASE("maximal operator is sublinear and homogeneous") {
  auto g = unit_grid(20);
  auto cfg = config(g);
  auto f = sample(g, corpus::oscillatory_bump(4, 0.9));
  auto h = sample(g, corpus::poly_bump(2, 0.8));
  auto sum = f;
  sum += h;
  auto scaled = f;
  scaled *= -3.0;
  auto Mf = hl_maximal_field(f, cfg), Mh = hl_maximal_field(h, cfg);
  auto Ms = hl_maximal_field(sum, cfg), Ml = hl_maximal_field(scaled, cfg);
  for (size_t n = 0; n < g.size(); ++n) {
    if (!Mf.covered[n]) continue;
    CHECK(Ms.values[n] <= Mf.values[n] + Mh.values[n] + 1e-12);
    CHECK(Ml.values[n] == doctest::Approx(3 * Mf.values[n]).epsilon(1e-12));
  }
}

TEST_CASE("maximal operator bounded on Lp, stable under lattice refinement") {
  auto g = unit_grid(24);
  MaximalConfig coarse{BallLattice::geometric(2.0 * g.h[0], 0.5, g.h[0]), 2.0, {1.5, 2.0, 3.0}};
  MaximalConfig fine{coarse.lattice.refined(), 2.0, coarse.p_values};
  for (const auto& u : corpus::compact(0.7)) {
    auto f = sample(g, u);
    auto Mc = hl_maximal_field(f, coarse), Mr = hl_maximal_field(f, fine);
    for (size_t n = 0; n < g.size(); ++n)
      if (Mc.covered[n]) CHECK(Mr.values[n] >= Mc.values[n]);  // superset lattice
    for (double p : coarse.p_values) {
      double sc = 0, sr = 0;
      for (size_t n = 0; n < g.size(); ++n)
        if (Mc.covered[n] && Mr.covered[n]) {
          sc += std::pow(Mc.values[n], p);
          sr += std::pow(Mr.values[n], p);
        }
      double norm = std::pow(grid_lp(f, p), p) / g.weight();
      double rc = std::pow(sc / norm, 1 / p), rr = std::pow(sr / norm, 1 / p);
      CHECK(rc < 10.0);
      CHECK(std::abs(rr - rc) <= 0.15 * rc);
    }
  }
}

TEST_CASE("vmo modulus") {
  auto g = unit_grid(24);
  DomainChain chain(10.0, 4);
  MaximalConfig cfg{BallLattice::geometric(g.h[0], 0.25, 2.0 * g.h[0]), 2.0, {2.0}};
  std::vector<double> rs;
  for (double r : cfg.lattice.radii) rs.push_back(r);

  SampledFunction c(g, 1.0);
  for (double e : vmo_profile(c, 0, rs, chain, cfg)) CHECK(e == 0.0);
  CHECK_THROWS_AS(vmo_modulus(c, 0, 0.3, chain, cfg), DomainError);
  CHECK_THROWS_AS(vmo_modulus(c, 0, 0.05, chain, cfg), DomainError);

  auto f = sample(g, corpus::oscillatory_bump(8, 0.9));
  auto eta = vmo_profile(f, 0, rs, chain, cfg);
  for (size_t n = 1; n < eta.size(); ++n) CHECK(eta[n] >= eta[n - 1]);
  CHECK(vmo_modulus(f, 0, rs[2], chain, cfg) == eta[2]);

  // log-log profile: the mean oscillation at scale r is about |cos(log(1 + L))|/(1 + L),
  // L = log(1/r), which peaks near L = 22; the decay shows below that scale
  DomainChain unit(1.0, 4, 0.05);
  MaximalConfig acfg{BallLattice::geometric(1e-40, 0.05, 0.25, 10.0), 2.0, {2.0}};
  std::vector<double> ar{1e-40, 1e-20, 1e-12, 1e-8, 1e-2};
  auto psi = [](const Vec3& p) { return CoefficientField::loglog_profile(h1::gauge(p)); };
  auto loglog = vmo_profile(psi, 0, ar, unit, acfg, 8);
  for (size_t n = 1; n < loglog.size(); ++n) CHECK(loglog[n] >= loglog[n - 1]);
  CHECK(loglog[0] < 0.1 * loglog.back());
  CHECK(loglog[1] < loglog[2]);
  CHECK(loglog[2] < loglog[3]);
  MESSAGE("log-log eta: " << loglog[0] << " " << loglog[1] << " " << loglog[2] << " " << loglog[3] << " "
                          << loglog[4]);
}

TEST_CASE("a sharp") {
  DomainChain chain(1.0, 4, 0.05);
  MaximalConfig cfg{BallLattice::geometric(1e-40, 0.05, 0.25, 10.0), 2.0, {2.0}};
  std::vector<double> rs{1e-40, 1e-20, 1e-12, 1e-2};
  std::mt19937_64 rng(2);
  auto constant = CoefficientField::constant(EllipticMatrix::random(0.5, rng));
  for (double v : a_sharp_profile(constant, 0, rs, chain, cfg, 8)) CHECK(v == 0.0);

  // I + small smooth perturbation: bounded by q^2 max_ij eta
  CoefficientField smooth{[](const Vec3& p) {
                            return std::array<double, 3>{1 + 0.1 * std::sin(3 * p[0]), 0.05 * std::cos(2 * p[1]),
                                                         1 + 0.1 * p[2]};
                          },
                          0.5, "smooth"};
  double as = a_sharp(smooth, 0, 0.01, chain, cfg, 8);
  double worst = 0;
  for (int e = 0; e < 3; ++e)
    worst = std::max(worst, vmo_profile([&](const Vec3& p) { return smooth.entries(p)[e]; }, 0, {0.01}, chain, cfg, 8)[0]);
  CHECK(as > 0);
  CHECK(as <= 4 * worst);

  auto loglog = CoefficientField::loglog(0.4, 1.0, 0.5);
  auto prof = a_sharp_profile(loglog, 0, rs, chain, cfg, 8);
  for (size_t n = 1; n < prof.size(); ++n) CHECK(prof[n] > prof[n - 1]);
  CHECK(prof[0] < 0.1 * prof.back());
}

TEST_CASE("Fefferman-Stein ratio") {
  DomainChain chain(10.0, 6);  // eps = 0.25
  auto b = corpus::gauge_bump(0.2);
  auto pair = [&](const Vec3& p) { return b(h1::compose(Vec3{-0.2, 0, 0}, p)) - b(h1::compose(Vec3{0.2, 0, 0}, p)); };
  // balls of radius r are r^2/4 tall, so t needs many more cells than x
  const Box box{{-1.45, -1.45, -0.5}, {1.45, 1.45, 0.5}};
  auto grid = [&](int cells) { return GridSpec(box, {cells + 1, cells + 1, 8 * cells + 1}); };
  auto lattice = [](const GridSpec& g) {
    return MaximalConfig{BallLattice::geometric(2.0 * g.h[0], 0.25, g.h[0]), 2.0, {2.0}};
  };
  auto g0 = grid(24);
  CHECK_FALSE(fefferman_stein_ratio(SampledFunction(g0, 0.0), 0.45, 2.0, 0, chain, lattice(g0)).has_value());

  std::vector<double> ratios;
  for (int cells : {24, 32}) {
    auto g = grid(cells);
    auto f = SampledFunction::sample(g, pair);
    auto r = fefferman_stein_ratio(f, 0.45, 2.0, 0, chain, lattice(g));
    REQUIRE(r.has_value());
    CHECK(std::isfinite(*r));
    ratios.push_back(*r);
  }
  MESSAGE("Fefferman-Stein ratios " << ratios[0] << " " << ratios[1]);
  CHECK(std::abs(ratios[1] - ratios[0]) <= 0.25 * ratios[0]);

  auto one_sided = sample(g0, corpus::gauge_bump(0.3));
  CHECK_THROWS_AS(fefferman_stein_ratio(one_sided, 0.45, 2.0, 0, chain, lattice(g0)), DomainError);
  auto wide = SampledFunction::sample(g0, pair);
  CHECK_THROWS_AS(fefferman_stein_ratio(wide, 0.6, 2.0, 0, chain, lattice(g0)), DomainError);
}

TEST_CASE("maximal csv export") {
  auto g = unit_grid(12);
  auto cfg = config(g, 0.6);
  DomainChain chain(16.0, 3);
  auto f = sample(g, corpus::gauge_bump(0.8));
  auto M = hl_maximal_field(f, cfg);
  auto S = local_sharp_maximal_field(f, 0, chain, cfg);
  std::ostringstream out;
  write_maximal_csv(out, M, S);
  std::string text = out.str();
  CHECK(text.rfind("x,y,t,Mf,fsharp\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') > 10);
}
