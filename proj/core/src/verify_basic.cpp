#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "carnot/errors.hpp"
#include "verify_detail.hpp"

namespace carnot {

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "fail";
}

Measurement& Measurement::set(const std::string& key, double v) {
  for (auto& kv : values)
    if (kv.first == key) {
      kv.second = v;
      return *this;
    }
  values.emplace_back(key, v);
  return *this;
}

bool Measurement::has(const std::string& key) const {
  return std::any_of(values.begin(), values.end(), [&](const auto& kv) { return kv.first == key; });
}

double Measurement::get(const std::string& key) const {
  for (const auto& kv : values)
    if (kv.first == key) return kv.second;
  throw StructuralError("measurement '" + subject + "' has no value '" + key + "'");
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void VerificationReport::param(const std::string& key, const std::string& value) {
  for (auto& kv : params)
    if (kv.first == key) {
      kv.second = value;
      return;
    }
  params.emplace_back(key, value);
}

void VerificationReport::param(const std::string& key, double value) { param(key, format_number(value)); }

void VerificationReport::param(const std::string& key, const std::vector<double>& values) {
  std::string s;
  for (size_t n = 0; n < values.size(); ++n) s += (n ? "," : "") + format_number(values[n]);
  param(key, s);
}

const Measurement* VerificationReport::find(const std::string& subject) const {
  for (const auto& m : measurements)
    if (m.subject == subject) return &m;
  return nullptr;
}

void VerificationReport::validate() const {
  if (check.empty()) throw StructuralError("report without a check id");
  for (const auto& m : measurements)
    for (const auto& kv : m.values)
      if (!std::isfinite(kv.second))
        throw StructuralError("non-finite measurement " + m.subject + "." + kv.first + " in " + check);
  for (const auto* v : {&slope, &intercept, &r2, &constant})
    if (*v && !std::isfinite(**v)) throw StructuralError("non-finite fit value in " + check);
}

LineFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw StructuralError("fit needs equally many x and y values");
  if (x.size() < 2) throw DomainError("fit needs at least two points");
  const size_t n = x.size();
  std::vector<double> lx(n), ly(n);
  for (size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0)) throw DomainError("log-log fit needs positive values");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  double mx = 0, my = 0;
  for (size_t i = 0; i < n; ++i) {
    mx += lx[i] / n;
    my += ly[i] / n;
  }
  double sxx = 0, sxy = 0, syy = 0;
  for (size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw DomainError("fit needs distinct x values");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double res = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double e = ly[i] - (f.intercept + f.slope * lx[i]);
    res += e * e;
  }
  // constant data sit exactly on the line
  f.r2 = syy <= 1e-24 * n ? 1.0 : std::max(0.0, 1.0 - res / syy);
  return f;
}

Verdict slope_verdict(const LineFit& fit, size_t points, double lo, double hi, double r2_min, size_t min_points) {
  if (points < min_points || fit.r2 < r2_min) return Verdict::inconclusive;
  return fit.slope >= lo && fit.slope <= hi ? Verdict::pass : Verdict::fail;
}

HolderExponents holder_exponents(double p) {
  if (!(p > 1.0)) throw DomainError("absorption exponents need p > 1");
  double alpha = p > 2.0 ? 2.0 : std::sqrt(p);
  return {alpha, alpha / (alpha - 1.0), 0.5 * (1.0 + p / alpha)};
}

void VerifyConfig::validate() const {
  if (resolution < 24) throw DomainError("verification grids need at least 24 cells per axis");
  if (quadrature_cells < 4) throw DomainError("ball quadrature needs at least 4 cells per axis");
  solver.validate();
}

GridSpec centred_ball_grid(double radius, int cells) {
  if (!(radius > 0.0)) throw DomainError("ball radius must be positive");
  const double x = 1.1 * radius, t = 0.3 * radius * radius;
  return GridSpec::cells(Box{{-x, -x, -t}, {x, x, t}}, cells);
}

TestFunction lbar_harmonic_cubic(const EllipticMatrix& abar) {
  auto A = abar.cholesky();
  double det = A[0] * A[3] - A[1] * A[2];
  std::array<double, 4> inv{A[3] / det, -A[1] / det, -A[2] / det, A[0] / det};
  return corpus::polynomial("harmonic3").pulled_back(inv).with_id("lbar-harmonic3");
}

std::vector<TestFunction> odd_corpus(const EllipticMatrix& abar) {
  std::vector<TestFunction> out;
  out.push_back(lbar_harmonic_cubic(abar));
  out.push_back(corpus::polynomial("x3"));
  out.push_back(TestFunction::make("xt+y3", [](const auto& P) { return P[0] * P[2] + P[1] * P[1] * P[1]; }));
  out.push_back(TestFunction::make("x2y-yt", [](const auto& P) { return P[0] * P[0] * P[1] - 2.0 * P[1] * P[2]; }));
  return out;
}

// ---- shared ball helpers

namespace detail {

double ball_points(QuadratureCache& quads, const Vec3& c, double rho, const std::optional<Ball>& support,
                   const std::function<void(const Vec3&)>& fn) {
  if (support && support->radius < rho) {
    const Ball& S = *support;
    const auto& q = quads.get(S.radius);
    const Vec3& sc = S.center.coords();
    const bool inside = quasi_distance(S.center, GroupPoint(c)) + S.radius <= rho;
    const Ball B(GroupPoint(c), rho);
    for (const Vec3& o : q.offsets()) {
      Vec3 x = h1::compose(sc, o);
      if (inside || B.contains(x)) fn(x);
    }
    return q.weight();
  }
  const auto& q = quads.get(rho);
  for (const Vec3& o : q.offsets()) fn(h1::compose(c, o));
  return q.weight();
}

double integrate_ball(QuadratureCache& quads, const Vec3& c, double rho, const std::optional<Ball>& support,
                      const std::function<double(const Vec3&)>& f, double* covered) {
  double s = 0.0;
  size_t n = 0;
  double w = ball_points(quads, c, rho, support, [&](const Vec3& x) {
    s += f(x);
    ++n;
  });
  if (covered) *covered = w * static_cast<double>(n);
  return s * w;
}

double quadrature_oscillation(const BallQuadrature& q, const Vec3& c, const std::function<double(const Vec3&)>& f) {
  std::vector<double> vals;
  vals.reserve(q.offsets().size());
  const double f0 = f(c);
  double s = 0.0;
  for (const Vec3& o : q.offsets()) {
    vals.push_back(f(h1::compose(c, o)));
    s += vals.back() - f0;
  }
  const double mean = f0 + s / static_cast<double>(vals.size());
  double dev = 0.0;
  for (double v : vals) dev += std::abs(v - mean);
  return dev / static_cast<double>(vals.size());
}

BallTerms ball_terms(QuadratureCache& quads, const TestFunction& u, const Coefficients& a, const Vec3& c, double r,
                     double k, double p) {
  BallTerms out;
  const auto& support = u.support();
  if (support && support->radius < r) {
    // osc over B(c, r) with u's derivatives vanishing off the support
    std::vector<std::array<double, 4>> vals;
    double w = ball_points(quads, c, r, support, [&](const Vec3& x) { vals.push_back(detail::second_derivatives(u, x)); });
    const double vol = ball_measure(r), covered = w * static_cast<double>(vals.size());
    for (int n = 0; n < 4; ++n) {
      double s = 0.0;
      for (const auto& d : vals) s += d[n];
      const double mean = s * w / vol;
      double dev = 0.0;
      for (const auto& d : vals) dev += std::abs(d[n] - mean);
      out.osc[n] = (dev * w + std::max(0.0, vol - covered) * std::abs(mean)) / vol;
    }
  } else {
    const auto& q = quads.get(r);
    std::vector<std::array<double, 4>> vals;
    vals.reserve(q.offsets().size());
    const auto d0 = detail::second_derivatives(u, c);
    std::array<double, 4> s{};
    for (const Vec3& o : q.offsets()) {
      vals.push_back(detail::second_derivatives(u, h1::compose(c, o)));
      for (int n = 0; n < 4; ++n) s[n] += vals.back()[n] - d0[n];
    }
    const double cnt = static_cast<double>(vals.size());
    for (int n = 0; n < 4; ++n) {
      const double mean = d0[n] + s[n] / cnt;
      double dev = 0.0;
      for (const auto& d : vals) dev += std::abs(d[n] - mean);
      out.osc[n] = dev / cnt;
    }
  }
  out.lhs = *std::max_element(out.osc.begin(), out.osc.end());

  double sum_abs = 0.0, sum_lp = 0.0;
  double w = ball_points(quads, c, k * r, support, [&](const Vec3& x) {
    auto d = detail::second_derivatives(u, x);
    for (double v : d) sum_abs += std::abs(v);
    sum_lp += std::pow(std::abs(detail::contract(a(x), d)), p);
  });
  const double vol = ball_measure(k * r);
  out.t1 = sum_abs * w / vol / k;
  out.t2 = std::pow(k, 2.0 + kQ / p) * std::pow(sum_lp * w / vol, 1.0 / p);
  return out;
}

}  // namespace detail

// ---- Poincare

namespace {

std::vector<Ball> default_poincare_balls() {
  return {Ball(GroupPoint(0, 0, 0), 1.0), Ball(GroupPoint(0.3, -0.2, 0.1), 0.5),
          Ball(GroupPoint(-0.4, 0.25, -0.05), 0.7), Ball(GroupPoint(0.1, 0.1, 0.02), 0.25),
          Ball(GroupPoint(0.6, 0.0, 0.0), 0.4)};
}

struct PoincareRatio {
  double worst = 0.0;  // max over members and balls; inf when the gradient side vanishes alone
  std::vector<double> per_member;
};

PoincareRatio poincare_ratios(const std::vector<TestFunction>& corpus, double p, double Lambda,
                              const std::vector<Ball>& balls, int cells) {
  PoincareRatio out;
  out.per_member.assign(corpus.size(), 0.0);
  for (const Ball& B : balls) {
    BallQuadrature inner(B.radius, cells), outer(Lambda * B.radius, cells);
    const Vec3& c = B.center.coords();
    for (size_t n = 0; n < corpus.size(); ++n) {
      const auto& u = corpus[n];
      const double mean = u(c) + inner.average(c, [&](const Vec3& x) { return u(x) - u(c); });
      const double lhs = std::pow(inner.average(c, [&](const Vec3& x) { return std::pow(std::abs(u(x) - mean), p); }),
                                  1.0 / p);
      if (lhs <= 1e-14 * (1.0 + std::abs(mean))) continue;  // constant on B
      const double grad = std::pow(outer.average(c, [&](const Vec3& x) {
        return std::pow(std::abs(u.derivative({0}, x)) + std::abs(u.derivative({1}, x)), p);
      }), 1.0 / p);
      const double ratio = grad > 0.0 ? lhs / (B.radius * grad) : std::numeric_limits<double>::infinity();
      out.per_member[n] = std::max(out.per_member[n], ratio);
      out.worst = std::max(out.worst, ratio);
    }
  }
  return out;
}

}  // namespace

void PoincareConfig::validate() const {
  if (lambdas.empty()) throw DomainError("Poincare search grid is empty");
  for (double L : lambdas)
    if (!(L > 1.0)) throw DomainError("Poincare dilation factors must exceed 1");
  if (!std::is_sorted(lambdas.begin(), lambdas.end())) throw StructuralError("Poincare search grid must ascend");
  if (!(c_max > 0.0)) throw DomainError("Poincare c_max must be positive");
  if (cells < 4) throw DomainError("Poincare quadrature needs at least 4 cells");
}

PoincareEstimate estimate_poincare(const std::vector<TestFunction>& corpus, double p, const PoincareConfig& cfg) {
  cfg.validate();
  if (corpus.empty()) throw DomainError("Poincare estimate needs a nonempty corpus");
  if (!(p >= 1.0)) throw DomainError("Poincare exponent must be at least 1");
  auto balls = cfg.balls.empty() ? default_poincare_balls() : cfg.balls;
  for (double L : cfg.lambdas) {
    auto r = poincare_ratios(corpus, p, L, balls, cfg.cells);
    if (std::isfinite(r.worst) && r.worst <= cfg.c_max) return {L, r.worst, p};
  }
  throw DomainError("no dilation factor in the Poincare search grid works for this corpus");
}

VerificationReport verify_poincare(const std::vector<TestFunction>& corpus, double p, const PoincareConfig& cfg) {
  detail::Stopwatch clock;
  VerificationReport rep;
  rep.check = "poincare";
  rep.param("p", p);
  rep.param("lambdas", cfg.lambdas);
  rep.param("cells", cfg.cells);
  auto balls = cfg.balls.empty() ? default_poincare_balls() : cfg.balls;
  rep.param("balls", static_cast<double>(balls.size()));
  try {
    auto est = estimate_poincare(corpus, p, cfg);
    auto coarse = poincare_ratios(corpus, p, est.Lambda, balls, cfg.cells);
    auto fine = poincare_ratios(corpus, p, est.Lambda, balls, 2 * cfg.cells);
    for (size_t n = 0; n < corpus.size(); ++n)
      rep.measurements.push_back(Measurement{corpus[n].id(), {}}
                                     .set("ratio", coarse.per_member[n])
                                     .set("ratio_refined", fine.per_member[n]));
    const double drift = std::abs(fine.worst - coarse.worst) / fine.worst;
    rep.measurements.push_back(Measurement{"summary", {}}
                                   .set("Lambda", est.Lambda)
                                   .set("c", coarse.worst)
                                   .set("c_refined", fine.worst)
                                   .set("drift", drift));
    rep.constant = fine.worst;
    rep.verdict = drift <= 0.2 ? Verdict::pass : Verdict::fail;
  } catch (const DomainError& e) {
    rep.notes.push_back(e.what());
    rep.verdict = Verdict::fail;
  }
  rep.runtime_seconds = clock.seconds();
  rep.validate();
  return rep;
}

// ---- interpolation

VerificationReport verify_interpolation(const std::vector<TestFunction>& corpus, const std::vector<double>& ps,
                                        const std::vector<double>& epsilons, int cells) {
  detail::Stopwatch clock;
  VerificationReport rep;
  rep.check = "interpolation";
  rep.param("p", ps);
  rep.param("epsilon", epsilons);
  rep.param("cells", cells);
  for (double p : ps)
    if (!(p >= 1.0)) throw DomainError("interpolation exponents must be at least 1");
  for (double e : epsilons)
    if (!(e > 0.0)) throw DomainError("interpolation epsilons must be positive");
  const double lambda = 2.0;
  size_t total = 0, held = 0;
  double tightest = 0.0, worst_scaling = 0.0;

  struct Norms {
    double u, Xu[2], XXu[2];
  };
  auto norms = [&](const TestFunction& u, double p) {
    if (!u.support()) throw DomainError("interpolation corpus member '" + u.id() + "' has no support ball");
    BallQuadrature q(u.support()->radius, cells);
    const Vec3& c = u.support()->center.coords();
    auto lp = [&](auto&& f) { return std::pow(q.integrate(c, [&](const Vec3& x) { return std::pow(std::abs(f(x)), p); }), 1.0 / p); };
    Norms n{};
    n.u = lp([&](const Vec3& x) { return u(x); });
    for (int i = 0; i < 2; ++i) {
      n.Xu[i] = lp([&](const Vec3& x) { return u.derivative({i}, x); });
      n.XXu[i] = lp([&](const Vec3& x) { return u.derivative({i, i}, x); });
    }
    return n;
  };
  auto ratio = [](double lhs, double rhs) { return rhs > 0.0 ? lhs / rhs : (lhs > 0.0 ? HUGE_VAL : 0.0); };

  for (const auto& u : corpus) {
    for (double p : ps) {
      Norms n = norms(u, p), nd = norms(u.dilated(lambda), p);
      Measurement m{u.id() + "@p=" + format_number(p), {}};
      double member_worst = 0.0;
      for (double eps : epsilons)
        for (int i = 0; i < 2; ++i) {
          const double lhs = n.Xu[i], rhs = eps * n.XXu[i] + 2.0 / eps * n.u;
          const double q = ratio(lhs, rhs);
          ++total;
          if (lhs <= rhs * (1.0 + 1e-12)) ++held;
          member_worst = std::max(member_worst, q);
          // u o D(lambda) with eps / lambda: both sides pick up lambda^{1 - Q/p}
          const double qd = ratio(nd.Xu[i], eps / lambda * nd.XXu[i] + 2.0 * lambda / eps * nd.u);
          worst_scaling = std::max(worst_scaling, std::abs(qd - q) / std::max(q, 1e-300));
        }
      tightest = std::max(tightest, member_worst);
      m.set("max_ratio", member_worst).set("norm_u", n.u);
      rep.measurements.push_back(m);
    }
  }
  rep.measurements.push_back(Measurement{"summary", {}}
                                 .set("combinations", static_cast<double>(total))
                                 .set("held", static_cast<double>(held))
                                 .set("scaling_mismatch", worst_scaling));
  rep.constant = tightest;
  rep.verdict = held == total && worst_scaling <= 1e-6 ? Verdict::pass : Verdict::fail;
  rep.runtime_seconds = clock.seconds();
  rep.validate();
  return rep;
}

// ---- ball families

BallFamily BallFamily::geometric(double r_min, double r_max, double ratio, double stride_fraction) {
  if (!(r_min > 0.0 && r_max >= r_min)) throw DomainError("ball family radii must satisfy 0 < r_min <= r_max");
  if (!(ratio > 1.0)) throw DomainError("ball family ratio must exceed 1");
  BallFamily f;
  f.stride_fraction = stride_fraction;
  for (int k = 0;; ++k) {
    double r = r_min * std::pow(ratio, k);
    if (r > r_max * (1 + 1e-12)) break;
    f.radii.push_back(r);
  }
  f.validate();
  return f;
}

BallFamily BallFamily::refined() const {
  BallFamily f;
  f.stride_fraction = 0.5 * stride_fraction;
  for (size_t n = 0; n < radii.size(); ++n) {
    f.radii.push_back(radii[n]);
    if (n + 1 < radii.size()) f.radii.push_back(std::sqrt(radii[n] * radii[n + 1]));
  }
  return f;
}

void BallFamily::validate() const {
  if (radii.empty()) throw DomainError("ball family has no radii");
  if (!(stride_fraction > 0.0 && stride_fraction <= 1.0)) throw DomainError("ball family stride fraction must lie in (0, 1]");
  for (size_t n = 0; n < radii.size(); ++n) {
    if (!(radii[n] > 0.0)) throw DomainError("ball family radii must be positive");
    if (n && !(radii[n] > radii[n - 1])) throw StructuralError("ball family radii must ascend");
  }
}

}  // namespace carnot
