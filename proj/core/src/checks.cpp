#include "carnot/checks.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "carnot/errors.hpp"
#include "verify_detail.hpp"

namespace carnot {

namespace {

double rel_diff(const Vec3& a, const Vec3& b) {
  double num = 0.0, den = 0.0;
  for (int i = 0; i < 3; ++i) {
    num = std::max(num, std::abs(a[i] - b[i]));
    den = std::max(den, std::abs(b[i]));
  }
  return num / std::max(den, 1.0);
}

GridSpec centred_unit_grid(int cells) { return centred_ball_grid(1.0, cells); }

void finish(VerificationReport& rep, bool ok, const detail::Stopwatch& clock) {
  rep.verdict = ok ? Verdict::pass : Verdict::fail;
  rep.runtime_seconds = clock.seconds();
  rep.validate();
}

}  // namespace

std::vector<EllipticMatrix> sample_matrices(int count, double mu, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::vector<EllipticMatrix> out{EllipticMatrix::identity()};
  for (int n = 0; n < count; ++n) out.push_back(EllipticMatrix::random(mu, rng));
  return out;
}

VerificationReport check_group(int samples, unsigned seed) {
  if (samples < 1) throw DomainError("group check needs at least one sample");
  detail::Stopwatch clock;
  VerificationReport rep;
  rep.check = "group";
  rep.param("samples", samples);
  rep.param("seed", static_cast<double>(seed));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-2.0, 2.0), L(0.5, 2.0);
  auto point = [&] { return Vec3{U(rng), U(rng), U(rng)}; };
  double assoc = 0.0, inv = 0.0, dil = 0.0, hom = 0.0;
  for (int n = 0; n < samples; ++n) {
    const Vec3 a = point(), b = point(), c = point();
    assoc = std::max(assoc, rel_diff(h1::compose(h1::compose(a, b), c), h1::compose(a, h1::compose(b, c))));
    inv = std::max(inv, rel_diff(h1::compose(a, h1::inverse(a)), {0, 0, 0}));
    inv = std::max(inv, rel_diff(h1::compose(h1::inverse(a), a), {0, 0, 0}));
    const double lam = L(rng);
    dil = std::max(dil, rel_diff(h1::dilate(lam, h1::compose(a, b)), h1::compose(h1::dilate(lam, a), h1::dilate(lam, b))));
    const double g = h1::gauge(a);
    if (g > 0.0) hom = std::max(hom, std::abs(h1::gauge(h1::dilate(lam, a)) / (lam * g) - 1.0));
  }
  rep.measurements.push_back(Measurement{"summary", {}}
                                 .set("associativity", assoc)
                                 .set("inverse", inv)
                                 .set("dilation_automorphism", dil)
                                 .set("norm_homogeneity", hom));
  finish(rep, std::max({assoc, inv, dil, hom}) <= 1e-12, clock);
  return rep;
}

VerificationReport check_volume(int divisor) {
  if (divisor < 4) throw DomainError("volume check needs spacing at most r / 4");
  detail::Stopwatch clock;
  VerificationReport rep;
  rep.check = "volume";
  rep.param("divisor", divisor);
  bool ok = true;
  for (double r : {0.5, 1.0}) {
    const double R = 2.0 * r;
    const Box box{{-1.05 * R, -1.05 * R, -0.27 * R * R}, {1.05 * R, 1.05 * R, 0.27 * R * R}};
    const int cells = static_cast<int>(std::ceil(2.1 * R / (r / divisor)));
    const GridSpec g(box, {cells + 1, cells + 1, cells + 1});
    const double ratio = ball_volume(Ball(GroupPoint(), R), g) / ball_volume(Ball(GroupPoint(), r), g);
    rep.measurements.push_back(Measurement{"doubling@r=" + format_number(r), {}}.set("ratio", ratio));
    ok = ok && std::abs(ratio / 16.0 - 1.0) <= 0.01;
  }
  const GridSpec g(Box{{-2, -2, -1.2}, {2, 2, 1.2}}, {161, 161, 161});
  const double v0 = ball_volume(Ball(GroupPoint(), 1.0), g);
  const double v1 = ball_volume(Ball(GroupPoint(0.6, -0.4, 0.2), 1.0), g);
  const double shift = std::abs(v1 / v0 - 1.0), exact = std::abs(v0 / heisenberg().unit_ball_volume() - 1.0);
  rep.measurements.push_back(Measurement{"translation", {}}.set("relative_change", shift).set("vs_exact", exact));
  finish(rep, ok && shift <= 0.01, clock);
  return rep;
}

VerificationReport check_calculus(const std::vector<int>& cells) {
  if (cells.size() < 3) throw DomainError("convergence order needs three grids");
  for (size_t n = 1; n < cells.size(); ++n)
    if (cells[n] <= cells[n - 1]) throw DomainError("grid sizes must increase");
  detail::Stopwatch clock;
  VerificationReport rep;
  rep.check = "calculus";
  rep.param("cells", std::vector<double>(cells.begin(), cells.end()));

  double comm = 0.0;
  const GridSpec probe = centred_unit_grid(8);
  auto analytic = corpus::compact(1.0);
  analytic.push_back(corpus::gaussian());
  for (const auto& name : {"x", "t", "xt", "x3", "harmonic3", "sinx_cost"}) analytic.push_back(corpus::polynomial(name));
  for (const auto& u : analytic) comm = std::max(comm, commutator_check(0, 1, u, probe));

  // analytic members gate the order; compact bumps are reported alongside and
  // are still pre-asymptotic at desk sizes because of their steep edges
  double worst_order = HUGE_VAL, bump_order = HUGE_VAL;
  const std::vector<std::pair<TestFunction, bool>> members{{corpus::gaussian(), true},
                                                           {corpus::polynomial("sinx_cost"), true},
                                                           {corpus::polynomial("x3"), true},
                                                           {corpus::gauge_bump(1.0), false},
                                                           {corpus::oscillatory_bump(4.0, 1.0), false}};
  for (const auto& [u, gated] : members)
    for (int i = 0; i < 2; ++i) {
      std::vector<double> err;
      for (int c : cells) {
        const GridSpec g = centred_unit_grid(c);
        auto U = SampledFunction::sample(g, [&](const Vec3& p) { return u(p); });
        auto XU = apply_field(i, U);
        double e = 0.0;
        for (size_t n = 0; n < g.size(); ++n) e += std::pow(XU[n] - u.derivative({i}, g.node(n)), 2);
        err.push_back(std::sqrt(e * g.weight()));
      }
      Measurement m{u.id() + "@X" + std::to_string(i + 1), {}};
      m.set("gated", gated ? 1.0 : 0.0);
      for (size_t n = 0; n < err.size(); ++n) m.set("error" + std::to_string(cells[n]), err[n]);
      for (size_t n = 1; n < err.size(); ++n) {
        if (err[n] < 1e-12) continue;  // exact up to rounding
        const double order = std::log(err[n - 1] / err[n]) / std::log(double(cells[n]) / cells[n - 1]);
        m.set("order" + std::to_string(n), order);
        (gated ? worst_order : bump_order) = std::min(gated ? worst_order : bump_order, order);
      }
      rep.measurements.push_back(m);
    }
  rep.measurements.push_back(Measurement{"summary", {}}
                                 .set("commutator", comm)
                                 .set("min_order", worst_order)
                                 .set("min_order_bumps", bump_order));
  finish(rep, comm <= 1e-10 && worst_order >= 1.9, clock);
  return rep;
}

VerificationReport check_gamma(const std::vector<EllipticMatrix>& abars) {
  if (abars.empty()) throw DomainError("gamma check needs a matrix");
  detail::Stopwatch clock;
  VerificationReport rep;
  rep.check = "gamma";
  rep.param("matrices", static_cast<double>(abars.size()));
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-2.0, 2.0), L(0.25, 4.0);
  const std::vector<Vec3> away{{1, 0, 0}, {0, 0.8, 0.1}, {0.3, 0.3, 0.2}, {-0.5, 0.2, -0.2}};
  bool ok = true;
  for (size_t ia = 0; ia < abars.size(); ++ia) {
    const FundamentalSolution G(abars[ia]);
    double hom = 0.0, gmax = -HUGE_VAL;
    for (int n = 0; n < 2000; ++n) {
      const Vec3 p{U(rng), U(rng), U(rng)};
      if (h1::gauge(p) < 1e-6) continue;
      const double lam = L(rng), g = G(p);
      hom = std::max(hom, std::abs(G(h1::dilate(lam, p)) * lam * lam / g - 1.0));
      gmax = std::max(gmax, g);
    }
    auto fn = [&](const Vec3& q) { return G(q); };
    std::vector<double> res;
    for (double h : {0.04, 0.02, 0.01}) {
      double worst = 0.0;
      for (const auto& p : away) worst = std::max(worst, std::abs(model_apply_fd(abars[ia], fn, p, h)));
      res.push_back(worst);
    }
    const double f1 = res[0] / res[1], f2 = res[1] / res[2];
    rep.measurements.push_back(Measurement{"a" + std::to_string(ia), {}}
                                   .set("homogeneity", hom)
                                   .set("max_gamma", gmax)
                                   .set("residual_factor1", f1)
                                   .set("residual_factor2", f2));
    ok = ok && hom <= 1e-12 && gmax <= 0.0 && f1 >= 3.0 && f1 <= 5.0 && f2 >= 3.0 && f2 <= 5.0;
  }
  finish(rep, ok, clock);
  return rep;
}

VerificationReport check_newtonian(const std::vector<EllipticMatrix>& abars) {
  if (abars.empty()) throw DomainError("newtonian check needs a matrix");
  detail::Stopwatch clock;
  VerificationReport rep;
  rep.check = "newtonian";
  rep.param("matrices", static_cast<double>(abars.size()));
  const auto small = GridSpec::cells(Box{{-0.12, -0.12, -0.004}, {0.12, 0.12, 0.004}}, 32);
  const auto mass_f = SampledFunction::sample(small, [](const Vec3& p) { return corpus::gauge_bump(0.1)(p); });
  double mass = 0.0;
  for (double v : mass_f.values()) mass += v;
  mass *= small.weight();
  const std::vector<Vec3> far{{1, 0, 0}, {0, 0.8, 0.1}, {0.3, 0.3, 0.2}, {-0.5, 0.2, -0.2}};
  bool ok = true;
  for (size_t ia = 0; ia < abars.size(); ++ia) {
    const FundamentalSolution G(abars[ia]);
    auto u = newtonian_potential_at(G, mass_f, far);
    double mismatch = 0.0;
    for (size_t n = 0; n < far.size(); ++n) mismatch = std::max(mismatch, std::abs(u[n] / (mass * G(far[n])) - 1.0));
    std::vector<double> res;
    for (int cells : {12, 16, 24}) {
      const auto g = GridSpec::cells(Box{{-0.75, -0.75, -0.15}, {0.75, 0.75, 0.15}}, cells);
      auto f = SampledFunction::sample(g, [](const Vec3& p) { return corpus::gauge_bump(0.5)(p); });
      auto L = model_apply(G.matrix(), newtonian_potential(G, f));
      double num = 0.0, den = 0.0;
      for (int i = 2; i < g.n[0] - 2; ++i)
        for (int j = 2; j < g.n[1] - 2; ++j)
          for (int k = 2; k < g.n[2] - 2; ++k) {
            const size_t n = g.index(i, j, k);
            num += std::pow(L[n] - f[n], 2);
            den += f[n] * f[n];
          }
      res.push_back(std::sqrt(num / den));
    }
    rep.measurements.push_back(Measurement{"a" + std::to_string(ia), {}}
                                   .set("far_field_mismatch", mismatch)
                                   .set("residual12", res[0])
                                   .set("residual16", res[1])
                                   .set("residual24", res[2]));
    ok = ok && mismatch <= 0.02 && res[1] < res[0] && res[2] < res[1];
  }
  finish(rep, ok, clock);
  return rep;
}

VerificationReport check_dirichlet(const std::vector<EllipticMatrix>& abars, int cells) {
  if (abars.empty()) throw DomainError("dirichlet check needs a matrix");
  if (cells < 24) throw DomainError("dirichlet check needs at least 24 cells");
  detail::Stopwatch clock;
  VerificationReport rep;
  rep.check = "dirichlet";
  rep.param("cells", cells);
  rep.param("matrices", static_cast<double>(abars.size()));
  const Ball ball(GroupPoint(0, 0, 0), 1.0);
  const auto lattice = group_lattice_grid(ball, cells);
  const auto cubic = centred_unit_grid(32);
  auto five = TestFunction::make("5", [](const auto&) { return 5.0; });
  std::vector<TestFunction> affine{five, corpus::polynomial("x"), corpus::polynomial("y"), corpus::polynomial("t")};

  double reproduce = 0.0, violation = 0.0;
  bool decreasing = true;
  for (size_t ia = 0; ia < abars.size(); ++ia) {
    const auto& a = abars[ia];
    for (const GridSpec* g : {&lattice, &cubic})
      for (const auto& u : affine) {
        // from a zero start, so the solver has to find the data itself
        SolverConfig cold;
        cold.warm_start = false;
        cold.tolerance = 1e-10;
        auto s = solve_dirichlet(DiscreteDirichletProblem::make(ball, a, *g, u), cold);
        for (size_t n = 0; n < g->size(); ++n)
          if (s.interior[n]) reproduce = std::max(reproduce, std::abs(s.solution[n] - u(g->node(n))));
      }
    for (const auto& u : corpus::compact(1.3)) {
      auto s = solve_dirichlet(DiscreteDirichletProblem::make(ball, a, lattice, u));
      violation = std::max(violation, max_principle_check(s).violation);
    }
    const FundamentalSolution G(a);
    const Vec3 p0{1.3, 0.2, 0.1};
    std::vector<double> errs;
    for (int c : {cells, cells + 8, cells + 16}) {
      const auto g = group_lattice_grid(ball, c);
      auto data = SampledFunction::sample(g, [&](const Vec3& q) { return G(h1::compose(h1::inverse(p0), q)); });
      auto s = solve_dirichlet({ball, a, data, SampledFunction(g, 0.0)});
      violation = std::max(violation, max_principle_check(s).violation);
      double num = 0.0, den = 0.0;
      for (size_t n = 0; n < g.size(); ++n)
        if (s.interior[n]) {
          num += std::pow(s.solution[n] - data[n], 2);
          den += data[n] * data[n];
        }
      errs.push_back(std::sqrt(num / den));
    }
    decreasing = decreasing && errs[1] < errs[0] && errs[2] < errs[1];
    rep.measurements.push_back(Measurement{"a" + std::to_string(ia), {}}
                                   .set("gamma_error0", errs[0])
                                   .set("gamma_error1", errs[1])
                                   .set("gamma_error2", errs[2]));
  }
  rep.measurements.push_back(Measurement{"summary", {}}
                                 .set("affine_error", reproduce)
                                 .set("max_principle_violation", violation)
                                 .set("gamma_decreasing", decreasing ? 1.0 : 0.0));
  finish(rep, reproduce <= 1e-8 && violation <= 1e-6 && decreasing, clock);
  return rep;
}

VerificationReport check_maximal(int cells) {
  if (cells < 16) throw DomainError("maximal check needs at least 16 cells");
  detail::Stopwatch clock;
  VerificationReport rep;
  rep.check = "maximal";
  rep.param("cells", cells);
  const GridSpec g = centred_unit_grid(cells);
  MaximalConfig cfg{BallLattice::geometric(2.0 * g.h[0], 0.5, g.h[0]), 2.0, {2.0}};
  MaximalConfig fine{cfg.lattice.refined(), 2.0, {2.0}};
  bool ok = true;
  for (const auto& u : corpus::compact(0.8)) {
    auto f = SampledFunction::sample(g, [&](const Vec3& p) { return u(p); });
    auto Mc = hl_maximal_field(f, cfg), Mr = hl_maximal_field(f, fine);
    // a superset lattice can only raise M; the L2 bound should barely move
    double shrink = 0.0, sc = 0.0, sr = 0.0, sf = 0.0;
    for (size_t n = 0; n < g.size(); ++n) {
      sf += f[n] * f[n];
      if (!Mc.covered[n] || !Mr.covered[n]) continue;
      shrink = std::max(shrink, Mc.values[n] - Mr.values[n]);
      sc += Mc.values[n] * Mc.values[n];
      sr += Mr.values[n] * Mr.values[n];
    }
    const double rc = std::sqrt(sc / sf), rr = std::sqrt(sr / sf);
    rep.measurements.push_back(
        Measurement{u.id(), {}}.set("refinement_drop", shrink).set("l2_ratio", rc).set("l2_ratio_refined", rr));
    ok = ok && shrink <= 0.0 && std::abs(rr - rc) <= 0.15 * rc;
  }
  const DomainChain chain(10.0, 4);
  const double eta_const = vmo_modulus(SampledFunction(g, 1.0), 0, 0.2, chain, cfg);
  const DomainChain unit(1.0, 4, 0.05);
  MaximalConfig acfg{BallLattice::geometric(1e-40, 0.05, 0.25, 10.0), 2.0, {2.0}};
  const double as_const =
      a_sharp(CoefficientField::constant(sample_matrices(1, 0.5, 2).back()), 0, 1e-2, unit, acfg, 8);
  auto psi = [](const Vec3& p) { return CoefficientField::loglog_profile(h1::gauge(p)); };
  auto eta = vmo_profile(psi, 0, {1e-40, 1e-20, 1e-12, 1e-8}, unit, acfg, 8);
  bool decays = true;
  for (size_t n = 1; n < eta.size(); ++n) decays = decays && eta[n - 1] < eta[n];
  rep.measurements.push_back(Measurement{"summary", {}}
                                 .set("constant_oscillation", eta_const)
                                 .set("constant_a_sharp", as_const)
                                 .set("loglog_eta_1e-40", eta[0])
                                 .set("loglog_eta_1e-8", eta[3])
                                 .set("loglog_decays", decays ? 1.0 : 0.0));
  finish(rep, ok && eta_const == 0.0 && as_const == 0.0 && decays, clock);
  return rep;
}

}  // namespace carnot
