#include "carnot/calculus.hpp"

#include <algorithm>
#include <cmath>

#include "carnot/errors.hpp"

namespace carnot {

namespace {

template <int M>
double mixed_derivative(const TestFunction& u, const MultiIndex& seq, const Vec3& p) {
  JetPoint<M> P{Jet<M>(p[0]), Jet<M>(p[1]), Jet<M>(p[2])};
  for (int l = 0; l < M; ++l) {
    JetPoint<M> step{Jet<M>(0.0), Jet<M>(0.0), Jet<M>(0.0)};
    step[seq[l]] = Jet<M>::variable(0.0, l);
    P = h1::compose(P, step);
  }
  return u.raw(P).top();
}

void check_field(int i) {
  if (i != 0 && i != 1) throw DomainError("generator index must be 0 (X1) or 1 (X2)");
}

template <class T>
std::array<T, 3> lift(const Vec3& z) {
  return {T(z[0]), T(z[1]), T(z[2])};
}

std::vector<MultiIndex> indices_of_order(int h) {
  std::vector<MultiIndex> out{{}};
  for (int l = 0; l < h; ++l) {
    std::vector<MultiIndex> next;
    for (const auto& I : out)
      for (int i = 0; i < 2; ++i) {
        MultiIndex J = I;
        J.push_back(i);
        next.push_back(J);
      }
    out = std::move(next);
  }
  return out;
}

}  // namespace

void TestFunction::require_plain(const char* what) const {
  if (!applied_.empty()) throw StructuralError(std::string(what) + " needs a function without pending fields");
}

double TestFunction::operator()(const Vec3& p) const { return derivative({}, p); }

double TestFunction::derivative(const MultiIndex& I, const Vec3& p) const {
  MultiIndex seq = I;
  seq.insert(seq.end(), applied_.begin(), applied_.end());
  for (int i : seq) check_field(i);
  switch (seq.size()) {
    case 0: return impl_->f0(p);
    case 1: return mixed_derivative<1>(*this, seq, p);
    case 2: return mixed_derivative<2>(*this, seq, p);
    case 3: return mixed_derivative<3>(*this, seq, p);
    default: throw DomainError("horizontal derivatives are available up to order 3");
  }
}

double TestFunction::dt(const Vec3& p) const {
  require_plain("dt");
  JetPoint<1> P{Jet<1>(p[0]), Jet<1>(p[1]), Jet<1>(p[2])};
  JetPoint<1> step{Jet<1>(0.0), Jet<1>(0.0), Jet<1>::variable(0.0, 0)};
  return raw(h1::compose(P, step)).top();
}

TestFunction TestFunction::apply(int field) const {
  check_field(field);
  if (applied_.size() >= 3) throw DomainError("horizontal derivatives are available up to order 3");
  TestFunction out = *this;
  out.applied_.insert(out.applied_.begin(), field);
  out.id_ = "X" + std::to_string(field + 1) + "(" + id_ + ")";
  return out;
}

TestFunction TestFunction::plus_affine(double c0, double c1, double c2) const {
  require_plain("plus_affine");
  auto base = *this;
  return make(id_ + "+affine", [base, c0, c1, c2](const auto& P) { return base.raw(P) + c0 + c1 * P[0] + c2 * P[1]; });
}

TestFunction TestFunction::dilated(double lambda) const {
  require_plain("dilated");
  if (!(lambda > 0.0)) throw DomainError("dilation factor must be positive");
  auto base = *this;
  std::optional<Ball> s;
  if (support_) s = Ball(dilate(1.0 / lambda, support_->center), support_->radius / lambda);
  return make(id_ + "oD", [base, lambda](const auto& P) { return base.raw(h1::dilate(lambda, P)); }, s);
}

TestFunction TestFunction::translated(const Vec3& z) const {
  require_plain("translated");
  auto base = *this;
  std::optional<Ball> s;
  if (support_) s = Ball(compose(inverse(GroupPoint(z)), support_->center), support_->radius);
  return make(id_ + "oL", [base, z](const auto& P) {
    using T = std::decay_t<decltype(P[0])>;
    return base.raw(h1::compose(lift<T>(z), P));
  }, s);
}

TestFunction TestFunction::scaled(double c) const {
  require_plain("scaled");
  auto base = *this;
  return make(id_, [base, c](const auto& P) { return c * base.raw(P); }, support_);
}

TestFunction TestFunction::times(const TestFunction& other) const {
  require_plain("times");
  other.require_plain("times");
  auto a = *this, b = other;
  std::optional<Ball> s = support_;
  if (!s || (other.support_ && other.support_->radius < s->radius)) s = other.support_;
  return make(id_ + "*" + other.id_, [a, b](const auto& P) { return a.raw(P) * b.raw(P); }, s);
}

TestFunction TestFunction::plus(const TestFunction& other) const {
  require_plain("plus");
  other.require_plain("plus");
  auto a = *this, b = other;
  std::optional<Ball> s;
  if (support_ && other.support_) {
    const Ball& x = *support_;
    const Ball& y = *other.support_;
    // gauge triangle inequality holds with constant 1 for the Koranyi gauge
    double r = std::max(x.radius, quasi_distance(y.center, x.center) + y.radius);
    s = Ball(x.center, r);
  }
  return make(id_ + "+" + other.id_, [a, b](const auto& P) { return a.raw(P) + b.raw(P); }, s);
}

TestFunction TestFunction::pulled_back(const std::array<double, 4>& m) const {
  require_plain("pulled_back");
  double det = m[0] * m[3] - m[1] * m[2];
  if (!(det > 0.0)) throw DomainError("pullback matrix must have positive determinant");
  auto base = *this;
  return make(id_ + "ophi", [base, m, det](const auto& P) {
    using T = std::decay_t<decltype(P[0])>;
    std::array<T, 3> Q{m[0] * P[0] + m[1] * P[1], m[2] * P[0] + m[3] * P[1], det * P[2]};
    return base.raw(Q);
  });
}

TestFunction TestFunction::with_id(std::string id) const {
  TestFunction out = *this;
  out.id_ = std::move(id);
  return out;
}

SampledFunction apply_field(int i, const SampledFunction& u) {
  check_field(i);
  const GridSpec& g = u.grid();
  SampledFunction d = partial(u, i);
  SampledFunction dt = partial(u, 2);
  for (int a = 0; a < g.n[0]; ++a)
    for (int b = 0; b < g.n[1]; ++b) {
      Vec3 p = g.node(a, b, 0);
      double coef = i == 0 ? -0.5 * p[1] : 0.5 * p[0];
      size_t base = g.index(a, b, 0);
      for (int k = 0; k < g.n[2]; ++k) d[base + k] += coef * dt[base + k];
    }
  return d;
}

TestFunction apply_field(int i, const TestFunction& u) { return u.apply(i); }

SampledFunction apply_fields(const MultiIndex& I, const SampledFunction& u) {
  SampledFunction out = u;
  for (auto it = I.rbegin(); it != I.rend(); ++it) out = apply_field(*it, out);
  return out;
}

double commutator_check(int i, int j, const TestFunction& u, const GridSpec& grid) {
  check_field(i);
  check_field(j);
  double bracket = i == j ? 0.0 : (i == 0 ? 1.0 : -1.0);
  double worst = 0.0;
  for (size_t idx = 0; idx < grid.size(); ++idx) {
    Vec3 p = grid.node(idx);
    double lhs = u.derivative({i, j}, p) - u.derivative({j, i}, p);
    double rhs = bracket == 0.0 ? 0.0 : bracket * u.dt(p);
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return worst;
}

double sobolev_norm(const SampledFunction& u, int k, double p, const Region& region) {
  if (!(p >= 1.0)) throw DomainError("sobolev_norm needs p >= 1");
  if (k < 0 || k > 2) throw DomainError("sampled sobolev_norm supports orders 0..2");
  const GridSpec& g = u.grid();
  // node mask of the region
  std::vector<size_t> nodes;
  if (std::holds_alternative<Ball>(region)) {
    for (const auto& c : ball_columns(g, std::get<Ball>(region)))
      for (int kk = c.k0; kk <= c.k1; ++kk) nodes.push_back(g.index(c.i, c.j, kk));
  } else {
    const Box& b = std::get<Box>(region);
    if (!g.box.contains(b)) throw DomainError("region not inside grid box");
    for (size_t idx = 0; idx < g.size(); ++idx)
      if (b.contains(g.node(idx))) nodes.push_back(idx);
  }
  double total = 0.0;
  for (int h = 0; h <= k; ++h) {
    SampledFunction Dh(g, 0.0);
    for (const auto& I : indices_of_order(h)) {
      SampledFunction XI = apply_fields(I, u);
      for (size_t idx : nodes) Dh[idx] += std::abs(XI[idx]);
    }
    double sum = 0.0;
    for (size_t idx : nodes) sum += std::pow(Dh[idx], p);
    total += std::pow(sum * g.weight(), 1.0 / p);
  }
  return total;
}

double seminorm(const TestFunction& u, int h, double p, const Ball& ball, int cells) {
  if (!(p >= 1.0)) throw DomainError("seminorm needs p >= 1");
  if (h < 0 || h > 3) throw DomainError("analytic seminorm supports orders 0..3");
  BallQuadrature quad(ball.radius, cells);
  auto I = indices_of_order(h);
  double sum = quad.integrate(ball.center.coords(), [&](const Vec3& x) {
    double d = 0.0;
    for (const auto& J : I) d += std::abs(u.derivative(J, x));
    return std::pow(d, p);
  });
  return std::pow(sum, 1.0 / p);
}

double sobolev_norm(const TestFunction& u, int k, double p, const Ball& region, int cells) {
  if (!(p >= 1.0)) throw DomainError("sobolev_norm needs p >= 1");
  if (k < 0 || k > 3) throw DomainError("analytic sobolev_norm supports orders 0..3");
  double total = 0.0;
  for (int h = 0; h <= k; ++h) total += seminorm(u, h, p, region, cells);
  return total;
}

TestFunction make_cutoff(double sigma, double r) {
  if (!(sigma > 0.5 && sigma < 1.0)) throw DomainError("cutoff needs sigma in (1/2, 1)");
  if (!(r > 0.0)) throw DomainError("cutoff radius must be positive");
  double sp = 0.5 * (1.0 + sigma);
  double a4 = std::pow(sigma * r, 4), b4 = std::pow(sp * r, 4);
  return TestFunction::make("cutoff", [a4, b4](const auto& P) {
    using T = std::decay_t<decltype(P[0])>;
    T s = (h1::gauge4(P) - a4) / (b4 - a4);
    double sv = jm::value(s);
    if (sv <= 0.0) return T(1.0);
    if (sv >= 1.0) return T(0.0);
    T g1 = jm::exp(-1.0 / (1.0 - s));
    T g0 = jm::exp(-1.0 / s);
    return g1 / (g1 + g0);
  }, Ball(GroupPoint(0, 0, 0), sp * r));
}

AffineNormalization normalize_affine(const SampledFunction& u, double Lambda) {
  if (!(Lambda > 1.0)) throw DomainError("Poincare dilation factor must exceed 1");
  const GridSpec& g = u.grid();
  Ball b4(GroupPoint(0, 0, 0), 4.0);
  Ball big(GroupPoint(0, 0, 0), 4.0 * Lambda);
  auto cols_big = ball_columns(g, big);
  auto cols4 = ball_columns(g, b4);
  AffineNormalization out;
  for (int i = 0; i < 2; ++i) {
    SampledFunction Xu = apply_field(i, u);
    double sum = 0.0;
    size_t count = 0;
    for (const auto& c : cols_big)
      for (int k = c.k0; k <= c.k1; ++k, ++count) sum += Xu.at(c.i, c.j, k);
    out.c[i] = -sum / static_cast<double>(count);
  }
  double su = 0.0, sx = 0.0, sy = 0.0;
  size_t count = 0;
  for (const auto& c : cols4) {
    Vec3 p = g.node(c.i, c.j, 0);
    for (int k = c.k0; k <= c.k1; ++k, ++count) {
      su += u.at(c.i, c.j, k);
      sx += p[0];
      sy += p[1];
    }
  }
  out.c0 = -(su + out.c[0] * sx + out.c[1] * sy) / static_cast<double>(count);
  out.u = u;
  for (size_t idx = 0; idx < g.size(); ++idx) {
    Vec3 p = g.node(idx);
    out.u[idx] += out.c0 + out.c[0] * p[0] + out.c[1] * p[1];
  }
  return out;
}

}  // namespace carnot
