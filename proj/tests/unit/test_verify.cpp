#include <cmath>
#include <random>

#include "carnot/errors.hpp"
#include "carnot/verify.hpp"
#include "doctest.h"

using namespace carnot;

namespace {

EllipticMatrix sample_matrix(unsigned seed = 3) {
  std::mt19937_64 rng(seed);
  return EllipticMatrix::random(0.5, rng);
}

double value(const VerificationReport& r, const std::string& subject, const std::string& key) {
  const Measurement* m = r.find(subject);
  REQUIRE(m != nullptr);
  return m->get(key);
}

TestFunction zero_function() { return corpus::gauge_bump(1.0).scaled(0.0).with_id("zero"); }

}  // namespace

TEST_CASE("log-log fit and slope verdicts") {
  std::vector<double> x{1, 2, 4, 8}, y;
  for (double v : x) y.push_back(3.0 * std::pow(v, -1.0));
  auto fit = fit_loglog(x, y);
  CHECK(fit.slope == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(std::exp(fit.intercept) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(fit.r2 == doctest::Approx(1.0));
  CHECK(slope_verdict(fit, 4, -1.5, -0.5) == Verdict::pass);
  CHECK(slope_verdict(fit, 4, -0.9, -0.5) == Verdict::fail);
  CHECK(slope_verdict(fit, 2, -1.5, -0.5) == Verdict::inconclusive);

  auto flat = fit_loglog(x, {2, 2, 2, 2});
  CHECK(flat.slope == 0.0);
  CHECK(flat.r2 == 1.0);

  auto noisy = fit_loglog(x, {1, 8, 1, 8});
  CHECK(noisy.r2 < 0.9);
  CHECK(slope_verdict(noisy, 4, -10, 10) == Verdict::inconclusive);
  CHECK_THROWS_AS(fit_loglog({1}, {1}), DomainError);
  CHECK_THROWS_AS(fit_loglog({1, 2}, {1, -1}), DomainError);
}

TEST_CASE("absorption exponents") {
  for (double p : {1.2, 1.5, 2.0, 3.0, 6.0}) {
    auto H = holder_exponents(p);
    CHECK(1.0 / H.alpha + 1.0 / H.beta == doctest::Approx(1.0));
    CHECK(H.p1 > 1.0);
    CHECK(H.alpha * H.p1 < p);
  }
  CHECK(holder_exponents(3.0).alpha == 2.0);
  CHECK(holder_exponents(3.0).beta == 2.0);
  CHECK_THROWS_AS(holder_exponents(1.0), DomainError);
}

TEST_CASE("report plumbing") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);
  VerificationReport r;
  r.check = "x";
  r.measurements.push_back(Measurement{"m", {}}.set("a", 1.0));
  CHECK_NOTHROW(r.validate());
  CHECK(r.find("m")->get("a") == 1.0);
  CHECK_THROWS_AS(r.find("m")->get("b"), StructuralError);
  r.measurements.push_back(Measurement{"bad", {}}.set("a", std::nan("")));
  CHECK_THROWS_AS(r.validate(), StructuralError);
}

TEST_CASE("odd corpus members are odd and the cubic is Lbar-harmonic") {
  const auto abar = sample_matrix();
  for (const auto& u : odd_corpus(abar))
    for (const Vec3& p : {Vec3{0.3, -0.2, 0.1}, Vec3{-0.5, 0.4, -0.2}})
      CHECK(u({-p[0], -p[1], p[2]}) == doctest::Approx(-u(p)).epsilon(1e-12));
  auto h = lbar_harmonic_cubic(abar);
  for (const Vec3& p : {Vec3{0.3, -0.2, 0.1}, Vec3{1.5, 0.4, -2.0}}) CHECK(std::abs(model_apply_at(abar, h, p)) < 1e-12);
}

TEST_CASE("poincare estimate") {
  SUBCASE("constant: zero oscillation") {
    auto est = estimate_poincare({corpus::polynomial("1")}, 2.0);
    CHECK(est.c == 0.0);
    CHECK(est.Lambda == 1.5);
  }
  SUBCASE("u = x and the compact corpus, stable under refinement") {
    auto est = estimate_poincare({corpus::polynomial("x")}, 2.0);
    CHECK(est.c > 0.0);
    CHECK(std::isfinite(est.c));
    auto rep = verify_poincare(corpus::compact(1.0), 2.0);
    CHECK(rep.passed());
    CHECK(value(rep, "summary", "drift") <= 0.2);
  }
  SUBCASE("no working Lambda is an error") {
    PoincareConfig cfg;
    cfg.c_max = 1e-9;
    CHECK_THROWS_AS(estimate_poincare({corpus::polynomial("x")}, 2.0, cfg), DomainError);
    CHECK(verify_poincare({corpus::polynomial("x")}, 2.0, cfg).verdict == Verdict::fail);
  }
}

TEST_CASE("interpolation inequality") {
  auto zero = verify_interpolation({zero_function()}, {2.0}, {1.0});
  CHECK(zero.passed());
  auto rep = verify_interpolation({corpus::gauge_bump(1.0)}, {1.5, 2.0, 3.0}, {0.1, 1.0, 10.0});
  CHECK(rep.passed());
  CHECK(value(rep, "summary", "held") == value(rep, "summary", "combinations"));
  CHECK(value(rep, "summary", "scaling_mismatch") <= 1e-6);
}

TEST_CASE("third derivatives of the harmonic replacement") {
  Lemma1Config cfg;
  cfg.resolution = 48;
  const auto abar = sample_matrix();
  auto rep = verify_lemma1({EllipticMatrix::identity(), abar}, {corpus::gauge_bump(12.0)}, cfg);
  CHECK(rep.passed());
  // the Lbar-harmonic member is its own replacement
  CHECK(value(rep, "summary", "harmonic_defect") < 0.05);
  CHECK(value(rep, "lbar-harmonic3@a1", "iterations") == 0);
  CHECK(value(rep, "summary", "affine_change") <= 1e-4);
  CHECK(value(rep, "summary", "comparison_excess") <= 1e-3);
  // a bump inside B_R has zero boundary data and so h = 0
  auto inside = verify_lemma1({abar}, {corpus::gauge_bump(3.0)}, cfg);
  CHECK(value(inside, "bump(R=3)@a0", "sup_third") == 0.0);
  cfg.R = 8.0;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
}

TEST_CASE("oscillation decay of the harmonic replacement") {
  VerifyConfig cfg;
  cfg.resolution = 40;
  const auto abar = sample_matrix();
  const auto corpus = odd_corpus(abar);
  auto rep = verify_lemma2(abar, corpus, {8, 16, 32, 64}, 1.0, cfg);
  CHECK(rep.passed());
  REQUIRE(rep.slope);
  CHECK(*rep.slope >= -1.5);
  CHECK(*rep.slope <= -0.5);
  CHECK(*rep.r2 >= 0.9);

  SUBCASE("r-invariance") {
    auto half = verify_lemma2(abar, corpus, {8, 16, 32, 64}, 0.5, cfg);
    for (const auto& u : corpus)
      for (const char* k : {"8", "16", "32", "64"}) {
        const std::string s = u.id() + "@k=" + k;
        CHECK(value(half, s, "ratio") == doctest::Approx(value(rep, s, "ratio")).epsilon(0.15));
      }
  }
  SUBCASE("too few k values") {
    auto few = verify_lemma2(abar, corpus, {8, 16}, 1.0, cfg);
    CHECK(few.verdict == Verdict::inconclusive);
  }
  SUBCASE("harmonic sanity member halves with k") {
    const std::string id = corpus.front().id();
    CHECK(value(rep, id + "@k=16", "ratio") == doctest::Approx(0.5 * value(rep, id + "@k=8", "ratio")).epsilon(0.05));
  }
}

TEST_CASE("potential-part bound") {
  VerifyConfig cfg;
  cfg.quadrature_cells = 16;
  const auto abar = sample_matrix();
  std::vector<TestFunction> members{corpus::gauge_bump(1.0), corpus::poly_bump(1, 1.0)};
  auto rep = verify_lemma_bb1(abar, members, 2.0, {4, 8, 16}, 0.1, cfg);
  CHECK(rep.passed());
  REQUIRE(rep.slope);
  CHECK(*rep.slope <= 2.3);
  CHECK(value(rep, "summary", "pointwise_c") <= value(rep, "summary", "c_theory"));

  auto zero = verify_lemma_bb1(abar, {zero_function()}, 2.0, {4, 8, 16}, 0.1, cfg);
  CHECK(zero.verdict == Verdict::inconclusive);
  CHECK(value(zero, "summary", "degenerate") == 6.0);  // every (k, placement)
  CHECK(value(zero, "summary", "sampled_nodes") == 0.0);
}

TEST_CASE("two-term oscillation estimate") {
  VerifyConfig cfg;
  cfg.resolution = 32;
  cfg.quadrature_cells = 10;
  const auto abar = sample_matrix();
  auto h = lbar_harmonic_cubic(abar);
  auto rep = verify_lemma3(abar, {corpus::gauge_bump(1.0), h}, 2.0, {4, 8, 16}, 0.1, cfg);
  CHECK(rep.passed());
  CHECK(value(rep, "summary", "triangle_slack") >= -1e-12);
  // Lbar u = 0: only the first term remains
  CHECK(std::abs(value(rep, h.id() + "@k=8", "t2")) < 1e-9 * value(rep, h.id() + "@k=8", "t1"));
  CHECK(value(rep, h.id() + "@k=8", "lhs") > 0.0);
}

TEST_CASE("pointwise bound with variable coefficients") {
  const DomainChain chain(80.0, 4);
  const auto u = corpus::gauge_bump(1.0);
  Thm36Config cfg;
  cfg.samples = 3;
  cfg.cells = 8;

  SUBCASE("constant coefficients reduce to the two-term estimate") {
    const auto abar = sample_matrix();
    const double k = 8.0, r = 0.5 / k;
    cfg.ball_radii = {r};
    auto rep = verify_thm36(CoefficientField::constant(abar), u, 2.0, 2.0, k, chain, cfg);
    CHECK(rep.passed());
    CHECK(value(rep, "summary", "a_sharp") == 0.0);
    CHECK(value(rep, "summary", "j2_constant") == 0.0);
    VerifyConfig vc;
    vc.resolution = 32;
    vc.quadrature_cells = cfg.cells;
    auto l3 = verify_lemma3(abar, {u}, 2.0, {k, 2 * k, 4 * k}, r, vc);
    const std::string ball = "ball(0)@r=" + format_number(r), row = u.id() + "@k=8";
    for (const char* key : {"lhs", "t1", "t2"}) CHECK(value(rep, ball, key) == value(l3, row, key));
    CHECK(value(rep, ball, "t3") == 0.0);
  }

  SUBCASE("log-log coefficients: both branches of the J2 bound") {
    auto a = CoefficientField::loglog(0.2, 0.01, 0.5);
    auto rep = verify_thm36(a, u, 2.0, 2.0, 8.0, chain, cfg);
    CHECK(rep.passed());
    CHECK(value(rep, "summary", "a_sharp") > 0.0);
    bool small = false, large = false;
    for (const auto& m : rep.measurements)
      if (m.has("branch")) {
        (m.get("branch") == 1.0 ? large : small) = true;
        CHECK(m.get("j2_constant") <= value(rep, "summary", "j2_bound"));
      }
    CHECK(small);
    CHECK(large);
    for (const auto& m : rep.measurements)
      if (m.has("c_min")) CHECK(std::isfinite(m.get("c_min")));
  }

  SUBCASE("refining the maximal family cannot raise the constant") {
    auto a = CoefficientField::loglog(0.2, 0.01, 0.5);
    cfg.samples = 2;
    cfg.sharp_balls = BallFamily::geometric(0.1, 1.0);
    cfg.maximal_balls = BallFamily::geometric(0.1, 2.5);
    auto coarse = verify_thm36(a, u, 2.0, 2.0, 8.0, chain, cfg);
    cfg.maximal_balls = cfg.maximal_balls.refined();
    auto fine = verify_thm36(a, u, 2.0, 2.0, 8.0, chain, cfg);
    for (const char* x : {"x0", "x1"}) CHECK(value(fine, x, "c_min") <= value(coarse, x, "c_min"));
  }

  SUBCASE("preconditions") {
    CHECK_THROWS_AS(verify_thm36(CoefficientField::constant(EllipticMatrix::identity()), corpus::gauge_bump(2.0), 2.0,
                                 2.0, 8.0, chain, cfg),
                    DomainError);
    CHECK_THROWS_AS(verify_thm36(CoefficientField::constant(EllipticMatrix::identity()), u, 2.0, 2.0, 8.0,
                                 DomainChain(20.0, 2), cfg),
                    DomainError);
  }
}

TEST_CASE("ball families only grow under refinement") {
  auto f = BallFamily::geometric(0.1, 1.0);
  auto g = f.refined();
  CHECK(g.stride_fraction == doctest::Approx(0.5 * f.stride_fraction));
  for (double r : f.radii) CHECK(std::find(g.radii.begin(), g.radii.end(), r) != g.radii.end());
  CHECK(g.radii.size() > f.radii.size());
  CHECK_THROWS_AS(BallFamily::geometric(1.0, 0.5), DomainError);
}

TEST_CASE("main estimate") {
  const DomainChain chain(80.0, 4);
  MainConfig cfg;
  const auto corpus = corpus::compact(1.0);

  SUBCASE("log-log coefficients degrade monotonically with amplitude") {
    std::vector<CoefficientField> fields;
    for (double amp : {0.05, 0.1, 0.2}) fields.push_back(CoefficientField::loglog(amp, 0.01, 0.5));
    auto rep = verify_main(fields, corpus, 2.0, chain, cfg);
    CHECK(rep.passed());
    CHECK(value(rep, "summary", "monotone") == 1.0);
    CHECK(value(rep, "summary", "drift") <= 0.2);
    CHECK(value(rep, "summary", "mean_zero") <= 1e-2);
    CHECK(value(rep, "field0:vmo-loglog", "C_emp") < value(rep, "field2:vmo-loglog", "C_emp"));
  }

  SUBCASE("dilation leaves the ratio unchanged for constant coefficients") {
    const auto a = CoefficientField::constant(sample_matrix());
    cfg.potential_member = false;
    cfg.cells = 24;
    const auto u = corpus::gauge_bump(1.0);
    auto base = verify_main({a}, {u}, 2.0, chain, cfg);
    MainConfig half = cfg;
    half.R = 0.5;
    auto small = verify_main({a}, {u.dilated(2.0)}, 2.0, chain, half);
    CHECK(*small.constant == doctest::Approx(*base.constant).epsilon(1e-9));
  }

  SUBCASE("Newtonian member for constant coefficients") {
    const double ratio = newtonian_member_ratio(EllipticMatrix::identity(), 1.0, 2.0, 24);
    CHECK(std::isfinite(ratio));
    CHECK(ratio > 0.0);
  }

  SUBCASE("absorption precondition") {
    // a coarse log-log scale leaves a large oscillation at radius gamma R
    std::vector<CoefficientField> rough{CoefficientField::loglog(0.5, 1.0, 0.5)};
    CHECK_THROWS_AS(verify_main(rough, corpus, 1.2, chain, cfg), DomainError);
    CHECK_THROWS_AS(verify_main({CoefficientField::constant(EllipticMatrix::identity())}, corpus, 2.0,
                                DomainChain(20.0, 2), cfg),
                    DomainError);
  }
}
