#include "carnot/dirichlet.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "carnot/errors.hpp"

namespace carnot {

void SolverConfig::validate() const {
  if (!(tolerance > 0.0 && tolerance < 1.0)) throw DomainError("solver tolerance must lie in (0, 1)");
  if (max_iterations < 1) throw DomainError("solver needs at least one iteration");
}

DiscreteDirichletProblem DiscreteDirichletProblem::make(const Ball& ball, const EllipticMatrix& abar,
                                                        const GridSpec& grid, const TestFunction& data,
                                                        const std::function<double(const Vec3&)>& g) {
  auto boundary = SampledFunction::sample(grid, [&](const Vec3& p) { return data(p); });
  SampledFunction rhs = g ? SampledFunction::sample(grid, g) : SampledFunction(grid, 0.0);
  return {ball, abar, std::move(boundary), std::move(rhs)};
}

void DiscreteDirichletProblem::validate() const {
  const GridSpec& g = grid();
  if (!(rhs.grid() == g)) throw StructuralError("boundary data and right-hand side live on different grids");
  if (!ball_fits(g, ball)) throw DomainError("Dirichlet ball not contained in the grid box");
  const double r = ball.radius;
  if (2.0 * r / g.h[0] < 24.0 || 2.0 * r / g.h[1] < 24.0 || 0.5 * r * r / g.h[2] < 24.0)
    throw DomainError("grid resolves the Dirichlet ball with fewer than 24 cells across");
}

namespace {

using Stencil = std::array<double, 27>;

constexpr int slot(int dx, int dy, int dt) { return (dx + 1) * 9 + (dy + 1) * 3 + (dt + 1); }

// Orientation-averaged one-sided horizontal differences: for sigma in {+-1}^3,
//   X1 U(k) = D_x U(k) - (y_k/2) D_t U(k),  X2 U(k) = D_y U(k) + (x_k/2) D_t U(k),
// each difference one-sided in its sigma direction. Coefficients of the four
// nodes k, k + sx e_x, k + sy e_y, k + st e_t.
struct Term {
  std::array<std::array<int, 3>, 4> off;
  std::array<double, 4> c1, c2;
};

Term term(int sx, int sy, int st, double xk, double yk, const Vec3& h) {
  Term T;
  T.off = {{{0, 0, 0}, {sx, 0, 0}, {0, sy, 0}, {0, 0, st}}};
  const double dx = sx / h[0], dy = sy / h[1], dt = st / h[2];
  T.c1 = {-dx + 0.5 * yk * dt, dx, 0.0, -0.5 * yk * dt};
  T.c2 = {-dy - 0.5 * xk * dt, 0.0, dy, 0.5 * xk * dt};
  return T;
}

// Row of the energy Hessian at a node with horizontal position (x, y).
Stencil assemble(const EllipticMatrix& a, double x, double y, const Vec3& h) {
  Stencil S{};
  const double a11 = a(0, 0), a12 = a(0, 1), a22 = a(1, 1);
  for (int sx : {-1, 1})
    for (int sy : {-1, 1})
      for (int st : {-1, 1})
        for (int o = 0; o < 4; ++o) {
          // the term at k = n - off[o] couples n (its slot o) with k + off[q]
          auto base = term(sx, sy, st, 0, 0, h);
          double xk = x - base.off[o][0] * h[0], yk = y - base.off[o][1] * h[1];
          Term T = term(sx, sy, st, xk, yk, h);
          for (int q = 0; q < 4; ++q) {
            double v = a11 * T.c1[o] * T.c1[q] + a12 * (T.c1[o] * T.c2[q] + T.c2[o] * T.c1[q]) +
                       a22 * T.c2[o] * T.c2[q];
            S[slot(T.off[q][0] - T.off[o][0], T.off[q][1] - T.off[o][1], T.off[q][2] - T.off[o][2])] += v / 8.0;
          }
        }
  return S;
}

// A lattice direction alpha X1 + beta X2 with its nonnegative weight.
struct Direction {
  int a, b;
  double w;
};

// Selling decomposition abar = sum w e e^T over the perpendiculars of an obtuse superbase.
std::vector<Direction> selling(const EllipticMatrix& A) {
  std::array<std::array<int, 2>, 3> e{{{1, 0}, {0, 1}, {-1, -1}}};
  auto ip = [&](const std::array<int, 2>& u, const std::array<int, 2>& v) {
    return u[0] * (A(0, 0) * v[0] + A(0, 1) * v[1]) + u[1] * (A(1, 0) * v[0] + A(1, 1) * v[1]);
  };
  const double tiny = 1e-14 * (A(0, 0) + A(1, 1));
  for (bool changed = true; changed;) {
    changed = false;
    for (int i = 0; i < 3 && !changed; ++i)
      for (int j = i + 1; j < 3 && !changed; ++j)
        if (ip(e[i], e[j]) > tiny) {
          int k = 3 - i - j;
          auto bi = e[i];
          e[i] = {-bi[0], -bi[1]};
          e[k] = {bi[0] - e[j][0], bi[1] - e[j][1]};
          changed = true;
        }
  }
  std::vector<Direction> dirs;
  for (int k = 0; k < 3; ++k) {
    int i = (k + 1) % 3, j = (k + 2) % 3;
    double w = -ip(e[i], e[j]);
    if (w > tiny) dirs.push_back({-e[k][1], e[k][0], w});
  }
  return dirs;
}

long shift_unit(const GridSpec& g) { return std::lround(g.h[0] * g.h[0] / (2.0 * g.h[2])); }

// t-index shift of the translate p o (a h, b h, 0) for the node column (i, j).
long lattice_shift(const GridSpec& g, int i, int j, int a, int b) {
  long I = std::lround(g.box.lo[0] / g.h[0]) + i, J = std::lround(g.box.lo[1] / g.h[1]) + j;
  return shift_unit(g) * (I * b - J * a);
}

Scheme resolve(const GridSpec& g, Scheme s) {
  if (s == Scheme::automatic) return group_lattice_compatible(g) ? Scheme::group_lattice : Scheme::averaged;
  if (s == Scheme::group_lattice && !group_lattice_compatible(g))
    throw DomainError("grid does not carry the discrete group lattice");
  return s;
}

struct Entry {
  long off;
  double w;
};

struct Operator {
  const GridSpec& g;
  std::vector<BallColumn> cols;
  std::vector<std::vector<Entry>> rows;  // one per column, diagonal first

  Operator(const GridSpec& grid, const Ball& ball, const EllipticMatrix& a, Scheme scheme) : g(grid) {
    cols = ball_columns(g, ball);
    const long nt = g.n[2];
    auto need = [&](const BallColumn& c, int a_, int b_, long s) {
      if (c.i + a_ < 0 || c.j + b_ < 0 || c.i + a_ >= g.n[0] || c.j + b_ >= g.n[1] || c.k0 + s < 0 ||
          c.k1 + s >= nt)
        throw DomainError("Dirichlet stencil reaches past the grid box faces");
    };
    if (scheme == Scheme::averaged) {
      for (const auto& c : cols) {
        need(c, -1, -1, -1);
        need(c, 1, 1, 1);
        Vec3 p = g.node(c.i, c.j, 0);
        Stencil S = assemble(a, p[0], p[1], g.h);
        std::vector<Entry> row{{0, S[slot(0, 0, 0)]}};
        for (int dx = -1; dx <= 1; ++dx)
          for (int dy = -1; dy <= 1; ++dy)
            for (int dt = -1; dt <= 1; ++dt)
              if ((dx || dy || dt) && S[slot(dx, dy, dt)] != 0.0)
                row.push_back({(static_cast<long>(dx) * g.n[1] + dy) * nt + dt, S[slot(dx, dy, dt)]});
        rows.push_back(std::move(row));
      }
    } else {
      const auto dirs = selling(a);
      const double h2 = g.h[0] * g.h[0];
      for (const auto& c : cols) {
        std::vector<Entry> row{{0, 0.0}};
        for (const auto& d : dirs) {
          long s = lattice_shift(g, c.i, c.j, d.a, d.b);
          need(c, d.a, d.b, s);
          need(c, -d.a, -d.b, -s);
          long off = (static_cast<long>(d.a) * g.n[1] + d.b) * nt + s;
          row[0].w += 2.0 * d.w / h2;
          row.push_back({off, -d.w / h2});
          row.push_back({-off, -d.w / h2});
        }
        rows.push_back(std::move(row));
      }
    }
  }

  double diagonal(size_t c) const { return rows[c][0].w; }

  // out = A u on the interior rows; other entries of out untouched.
  void apply(const std::vector<double>& u, std::vector<double>& out) const {
    for (size_t c = 0; c < cols.size(); ++c) {
      const auto& R = rows[c];
      size_t base = g.index(cols[c].i, cols[c].j, 0);
      for (int k = cols[c].k0; k <= cols[c].k1; ++k) {
        size_t n = base + k;
        double s = 0.0;
        for (const auto& e : R) s += e.w * u[n + e.off];
        out[n] = s;
      }
    }
  }

  template <class Fn>
  void for_each_interior(Fn&& fn) const {
    for (size_t c = 0; c < cols.size(); ++c) {
      size_t base = g.index(cols[c].i, cols[c].j, 0);
      for (int k = cols[c].k0; k <= cols[c].k1; ++k) fn(base + k, c);
    }
  }

  // Non-interior nodes coupled to the interior.
  std::vector<std::uint8_t> boundary(const std::vector<std::uint8_t>& inside) const {
    std::vector<std::uint8_t> layer(g.size(), 0);
    for_each_interior([&](size_t n, size_t c) {
      for (const auto& e : rows[c])
        if (e.w != 0.0 && !inside[n + e.off]) layer[n + e.off] = 1;
    });
    return layer;
  }
};

}  // namespace

std::vector<std::uint8_t> interior_mask(const GridSpec& grid, const Ball& ball) {
  std::vector<std::uint8_t> mask(grid.size(), 0);
  for (const auto& c : ball_columns(grid, ball)) {
    size_t base = grid.index(c.i, c.j, 0);
    for (int k = c.k0; k <= c.k1; ++k) mask[base + k] = 1;
  }
  return mask;
}

bool group_lattice_compatible(const GridSpec& g) {
  auto integral = [](double v) { return std::abs(v - std::round(v)) <= 1e-9 * std::max(1.0, std::abs(v)); };
  if (!(g.h[0] > 0 && g.h[2] > 0) || std::abs(g.h[0] - g.h[1]) > 1e-12 * g.h[0]) return false;
  double m = g.h[0] * g.h[0] / (2.0 * g.h[2]);
  return m >= 1.0 - 1e-9 && integral(m) && integral(g.box.lo[0] / g.h[0]) && integral(g.box.lo[1] / g.h[1]);
}

GridSpec group_lattice_grid(const Ball& ball, int cells) {
  if (cells < 24) throw DomainError("group lattice grid needs at least 24 cells across the ball");
  const double r = ball.radius, h = 2.0 * r / cells, ht = 0.5 * h * h;
  const Vec3 c = ball.center.coords();
  // horizontal nodes on multiples of h, two spare columns for the widest stencil
  std::array<long, 2> lo{}, hi{};
  for (int a = 0; a < 2; ++a) {
    lo[a] = static_cast<long>(std::floor((c[a] - 1.1 * r) / h)) - 2;
    hi[a] = static_cast<long>(std::ceil((c[a] + 1.1 * r) / h)) + 2;
  }
  // a step along (a, b) shifts t by (x b - y a) h / 2, and |a|, |b| <= 2 for elliptic abar
  double reach = (std::abs(c[0]) + std::abs(c[1]) + 2.4 * r) * h;
  // left translation by the centre shears t by up to (|cx| + |cy|) r / 2
  double half = 0.25 * r * r + 0.5 * (std::abs(c[0]) + std::abs(c[1])) * r + reach + 2 * ht;
  double tlo = c[2] - half, thi = c[2] + half;
  int nt = static_cast<int>(std::ceil((thi - tlo) / ht)) + 1;
  Box box{{lo[0] * h, lo[1] * h, tlo}, {hi[0] * h, hi[1] * h, tlo + (nt - 1) * ht}};
  return GridSpec(box, {static_cast<int>(hi[0] - lo[0]) + 1, static_cast<int>(hi[1] - lo[1]) + 1, nt});
}

std::vector<std::uint8_t> boundary_layer(const DiscreteDirichletProblem& prob, Scheme scheme) {
  const GridSpec& g = prob.grid();
  Operator A(g, prob.ball, prob.abar, resolve(g, scheme));
  return A.boundary(interior_mask(g, prob.ball));
}

double dirichlet_energy(const DiscreteDirichletProblem& prob, const SampledFunction& u, Scheme scheme) {
  const GridSpec& g = prob.grid();
  if (!(u.grid() == g)) throw StructuralError("energy evaluated on a different grid");
  auto inside = interior_mask(g, prob.ball);
  double quad = 0.0, lin = 0.0;
  for (size_t n = 0; n < g.size(); ++n)
    if (inside[n]) lin += prob.rhs[n] * u[n];

  if (resolve(g, scheme) == Scheme::group_lattice) {
    // one term per lattice edge touching the interior
    const auto dirs = selling(prob.abar);
    for (int i = 0; i < g.n[0]; ++i)
      for (int j = 0; j < g.n[1]; ++j)
        for (const auto& d : dirs) {
          int a = i + d.a, b = j + d.b;
          if (a < 0 || b < 0 || a >= g.n[0] || b >= g.n[1]) continue;
          long s = lattice_shift(g, i, j, d.a, d.b);
          for (int k = std::max(0L, -s); k < g.n[2] && k + s < g.n[2]; ++k) {
            size_t p = g.index(i, j, k), q = g.index(a, b, static_cast<int>(k + s));
            if (!inside[p] && !inside[q]) continue;
            double D = (u[q] - u[p]) / g.h[0];
            quad += d.w * D * D;
          }
        }
    return g.weight() * (0.5 * quad + lin);
  }

  const double a11 = prob.abar(0, 0), a12 = prob.abar(0, 1), a22 = prob.abar(1, 1);
  for (int i = 0; i < g.n[0]; ++i)
    for (int j = 0; j < g.n[1]; ++j)
      for (int k = 0; k < g.n[2]; ++k) {
        Vec3 p = g.node(i, j, k);
        for (int sx : {-1, 1})
          for (int sy : {-1, 1})
            for (int st : {-1, 1}) {
              Term T = term(sx, sy, st, p[0], p[1], g.h);
              bool touches = false, fits = true;
              std::array<double, 4> v{};
              for (int q = 0; q < 4; ++q) {
                int a = i + T.off[q][0], b = j + T.off[q][1], c = k + T.off[q][2];
                if (a < 0 || b < 0 || c < 0 || a >= g.n[0] || b >= g.n[1] || c >= g.n[2]) {
                  fits = false;
                  break;
                }
                size_t m = g.index(a, b, c);
                touches = touches || inside[m];
                v[q] = u[m];
              }
              if (!fits || !touches) continue;
              double X1 = 0, X2 = 0;
              for (int q = 0; q < 4; ++q) {
                X1 += T.c1[q] * v[q];
                X2 += T.c2[q] * v[q];
              }
              quad += (a11 * X1 * X1 + 2 * a12 * X1 * X2 + a22 * X2 * X2) / 8.0;
            }
      }
  return g.weight() * (0.5 * quad + lin);
}

DirichletSolution solve_dirichlet(const DiscreteDirichletProblem& prob, const SolverConfig& cfg) {
  prob.validate();
  cfg.validate();
  const GridSpec& g = prob.grid();
  const Scheme scheme = resolve(g, cfg.scheme);
  Operator A(g, prob.ball, prob.abar, scheme);
  const size_t N = g.size();

  // x holds the boundary data outside the interior and the iterate inside
  std::vector<double> x = prob.boundary.values();
  std::vector<double> Ab(N, 0.0);
  {
    std::vector<double> xb = x;
    A.for_each_interior([&](size_t n, size_t) { xb[n] = 0.0; });
    A.apply(xb, Ab);
  }
  std::vector<double> b(N, 0.0), r(N, 0.0), z(N, 0.0), p(N, 0.0), Ap(N, 0.0), w(N, 0.0);
  double bnorm = 0.0;
  A.for_each_interior([&](size_t n, size_t) {
    b[n] = -prob.rhs[n] - Ab[n];
    bnorm += b[n] * b[n];
  });
  bnorm = std::sqrt(bnorm);

  std::vector<double> u(N, 0.0);
  if (cfg.warm_start) A.for_each_interior([&](size_t n, size_t) { u[n] = prob.boundary[n]; });
  auto precondition = [&](const std::vector<double>& in, std::vector<double>& out) {
    A.for_each_interior([&](size_t n, size_t c) { out[n] = cfg.jacobi ? in[n] / A.diagonal(c) : in[n]; });
  };
  auto dot = [&](const std::vector<double>& a, const std::vector<double>& c) {
    double s = 0.0;
    A.for_each_interior([&](size_t n, size_t) { s += a[n] * c[n]; });
    return s;
  };

  int it = 0;
  double rel = 0.0;
  // zero data has the zero solution whatever the starting guess
  if (bnorm == 0.0) std::fill(u.begin(), u.end(), 0.0);
  if (bnorm > 0.0) {
    A.apply(u, w);
    A.for_each_interior([&](size_t n, size_t) { r[n] = b[n] - w[n]; });
    precondition(r, z);
    p = z;
    double rz = dot(r, z);
    rel = std::sqrt(dot(r, r)) / bnorm;
    while (rel > cfg.tolerance) {
      if (it >= cfg.max_iterations)
        throw ConvergenceError("Dirichlet solve hit the iteration cap", it, rel);
      A.apply(p, Ap);
      double alpha = rz / dot(p, Ap);
      A.for_each_interior([&](size_t n, size_t) {
        u[n] += alpha * p[n];
        r[n] -= alpha * Ap[n];
      });
      precondition(r, z);
      double rz_new = dot(r, z);
      double beta = rz_new / rz;
      rz = rz_new;
      A.for_each_interior([&](size_t n, size_t) { p[n] = z[n] + beta * p[n]; });
      rel = std::sqrt(dot(r, r)) / bnorm;
      ++it;
    }
    // true residual of the final iterate
    A.apply(u, w);
    double s = 0.0;
    A.for_each_interior([&](size_t n, size_t) { s += std::pow(b[n] - w[n], 2); });
    rel = std::sqrt(s) / bnorm;
  }
  A.for_each_interior([&](size_t n, size_t) { x[n] = u[n]; });
  auto inside = interior_mask(g, prob.ball);
  auto layer = A.boundary(inside);
  SampledFunction h(g, std::move(x));
  SolveDiagnostics diag{it, rel, dirichlet_energy(prob, h, scheme)};
  return {std::move(h), diag, scheme, std::move(inside), std::move(layer)};
}

SampledFunction harmonic_replacement(const TestFunction& u, const Ball& ball, const EllipticMatrix& abar,
                                     const GridSpec& grid, const SolverConfig& cfg) {
  return solve_dirichlet(DiscreteDirichletProblem::make(ball, abar, grid, u), cfg).solution;
}

MaxPrincipleReport max_principle_check(const SampledFunction& h, const std::vector<std::uint8_t>& interior,
                                       const std::vector<std::uint8_t>& boundary) {
  if (interior.size() != h.size() || boundary.size() != h.size())
    throw StructuralError("maximum-principle masks do not match the grid");
  MaxPrincipleReport rep;
  rep.boundary_min = rep.interior_min = INFINITY;
  rep.boundary_max = rep.interior_max = -INFINITY;
  for (size_t n = 0; n < h.size(); ++n) {
    if (boundary[n]) {
      rep.boundary_min = std::min(rep.boundary_min, h[n]);
      rep.boundary_max = std::max(rep.boundary_max, h[n]);
    }
    if (interior[n]) {
      rep.interior_min = std::min(rep.interior_min, h[n]);
      rep.interior_max = std::max(rep.interior_max, h[n]);
    }
  }
  rep.violation = std::max({0.0, rep.boundary_min - rep.interior_min, rep.interior_max - rep.boundary_max});
  return rep;
}

MaxPrincipleReport max_principle_check(const DirichletSolution& s) {
  return max_principle_check(s.solution, s.interior, s.boundary);
}

}  // namespace carnot
