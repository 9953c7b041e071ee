#include "carnot/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "carnot/errors.hpp"
#include "quadrature.hpp"

namespace carnot {

EllipticMatrix::EllipticMatrix(double a11, double a12, double a22, double mu)
    : a11_(a11), a12_(a12), a22_(a22), mu_(mu) {
  if (!(mu > 0.0 && mu <= 1.0)) throw DomainError("ellipticity constant must lie in (0, 1]");
  if (!std::isfinite(a11) || !std::isfinite(a12) || !std::isfinite(a22))
    throw StructuralError("matrix entries must be finite");
  auto ev = eigenvalues();
  const double slack = 1e-12;
  if (ev[0] < mu * (1 - slack) || ev[1] > (1 / mu) * (1 + slack))
    throw DomainError("matrix is not elliptic with the declared constant");
}

EllipticMatrix EllipticMatrix::identity(double mu) { return EllipticMatrix(1, 0, 1, mu); }

EllipticMatrix EllipticMatrix::random(double mu, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> lam(mu, 1.0 / mu), ang(0.0, std::numbers::pi);
  double l1 = lam(rng), l2 = lam(rng), th = ang(rng);
  double c = std::cos(th), s = std::sin(th);
  return EllipticMatrix(l1 * c * c + l2 * s * s, (l1 - l2) * c * s, l1 * s * s + l2 * c * c, mu);
}

std::array<double, 2> EllipticMatrix::eigenvalues() const {
  double m = 0.5 * (a11_ + a22_);
  double d = std::hypot(0.5 * (a11_ - a22_), a12_);
  return {m - d, m + d};
}

std::array<double, 4> EllipticMatrix::cholesky() const {
  double l00 = std::sqrt(a11_);
  double l10 = a12_ / l00;
  double l11 = std::sqrt(a22_ - l10 * l10);
  return {l00, 0.0, l10, l11};
}

EllipticMatrix CoefficientField::at(const Vec3& x) const {
  auto e = entries(x);
  return EllipticMatrix(e[0], e[1], e[2], mu);
}

double CoefficientField::entry(int i, int j, const Vec3& x) const {
  auto e = entries(x);
  return i == j ? (i == 0 ? e[0] : e[2]) : e[1];
}

CoefficientField CoefficientField::constant(const EllipticMatrix& a) {
  std::array<double, 3> e{a(0, 0), a(0, 1), a(1, 1)};
  return {[e](const Vec3&) { return e; }, a.mu(), "constant"};
}

double CoefficientField::loglog_profile(double rho) {
  if (rho <= 0.0) return 0.5;
  if (rho >= 1.0) return 0.5;
  return 0.5 * (1.0 + std::sin(std::log(1.0 + std::log(1.0 / rho))));
}

CoefficientField CoefficientField::loglog(double amplitude, double scale, double mu) {
  if (!(amplitude >= 0.0 && amplitude <= 1.0 - mu + 1e-15))
    throw DomainError("log-log amplitude must lie in [0, 1 - mu]");
  if (!(scale > 0.0)) throw DomainError("log-log scale must be positive");
  return {[amplitude, scale](const Vec3& x) {
            double v = 1.0 - amplitude * loglog_profile(scale * h1::gauge(x));
            return std::array<double, 3>{v, 0.0, v};
          },
          mu, "vmo-loglog"};
}

double gamma_normalization() {
  static const double c = [] {
    // rho^-2 as a closed-form function so X_i comes from the jet machinery
    auto g = TestFunction::make("rho^-2", [](const auto& P) { return 1.0 / jm::sqrt(h1::gauge4(P)); });
    auto [xs, ws] = detail::gauss_legendre01(96);
    const int nth = 96;
    double flux = 0.0;
    for (size_t a = 0; a < xs.size(); ++a) {
      double phi = std::numbers::pi * (xs[a] - 0.5);
      double wphi = std::numbers::pi * ws[a];
      double cp = std::cos(phi), sp = std::sin(phi), rc = std::sqrt(cp);
      for (int b = 0; b < nth; ++b) {
        double th = 2.0 * std::numbers::pi * b / nth;
        double ct = std::cos(th), st = std::sin(th);
        Vec3 p{rc * ct, rc * st, sp / 4};
        // outward normal times area element: -(dp/dphi x dp/dtheta)
        Vec3 n{cp * rc * ct / 4, cp * rc * st / 4, sp / 2};
        double x1 = g.derivative({0}, p), x2 = g.derivative({1}, p);
        // horizontal gradient as a Euclidean vector: X1 = (1,0,-y/2), X2 = (0,1,x/2)
        Vec3 F{x1, x2, -0.5 * p[1] * x1 + 0.5 * p[0] * x2};
        flux += wphi * (2.0 * std::numbers::pi / nth) * (F[0] * n[0] + F[1] * n[1] + F[2] * n[2]);
      }
    }
    // sub-Laplacian of -c rho^-2 is the Dirac mass, so -c * flux = 1
    return -1.0 / flux;
  }();
  return c;
}

FundamentalSolution::FundamentalSolution(const EllipticMatrix& abar) : abar_(abar), c_(gamma_normalization()) {
  auto A = abar.cholesky();
  det_ = A[0] * A[3] - A[1] * A[2];
  Ainv_ = {A[3] / det_, -A[1] / det_, -A[2] / det_, A[0] / det_};
}

double FundamentalSolution::pulled_gauge4(const Vec3& p) const {
  double u = Ainv_[0] * p[0] + Ainv_[1] * p[1];
  double v = Ainv_[2] * p[0] + Ainv_[3] * p[1];
  double s = u * u + v * v;
  double t = p[2] / det_;
  return s * s + 16.0 * t * t;
}

double FundamentalSolution::operator()(const Vec3& p) const {
  double r4 = pulled_gauge4(p);
  if (r4 == 0.0) throw SingularityError("fundamental solution evaluated at its pole");
  return -c_ / (det_ * det_ * std::sqrt(r4));
}

double FundamentalSolution::sphere_sup() const {
  double sup = 0.0;
  const int n = 64;
  for (int a = 0; a <= n; ++a) {
    double phi = std::numbers::pi * (static_cast<double>(a) / n - 0.5);
    double rc = std::sqrt(std::max(0.0, std::cos(phi)));
    for (int b = 0; b < 2 * n; ++b) {
      double th = std::numbers::pi * b / n;
      sup = std::max(sup, std::abs((*this)({rc * std::cos(th), rc * std::sin(th), std::sin(phi) / 4})));
    }
  }
  return sup;
}

double fundamental_solution(const EllipticMatrix& abar, const GroupPoint& p) {
  return FundamentalSolution(abar)(p.coords());
}

SampledFunction model_apply(const EllipticMatrix& abar, const SampledFunction& u) {
  SampledFunction out(u.grid(), 0.0);
  std::array<SampledFunction, 2> X{apply_field(0, u), apply_field(1, u)};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      if (abar(i, j) == 0.0) continue;
      SampledFunction XX = apply_field(i, X[j]);
      XX *= abar(i, j);
      out += XX;
    }
  return out;
}

double model_apply_at(const EllipticMatrix& abar, const TestFunction& u, const Vec3& p) {
  double s = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      if (abar(i, j) != 0.0) s += abar(i, j) * u.derivative({i, j}, p);
  return s;
}

SampledFunction model_apply(const EllipticMatrix& abar, const TestFunction& u, const GridSpec& grid) {
  return SampledFunction::sample(grid, [&](const Vec3& p) { return model_apply_at(abar, u, p); });
}

double variable_apply_at(const CoefficientField& a, const TestFunction& u, const Vec3& p) {
  return model_apply_at(a.at(p), u, p);
}

SampledFunction variable_apply(const CoefficientField& a, const SampledFunction& u) {
  const GridSpec& g = u.grid();
  std::array<SampledFunction, 2> X{apply_field(0, u), apply_field(1, u)};
  SampledFunction out(g, 0.0);
  std::array<std::array<SampledFunction, 2>, 2> XX{
      {{apply_field(0, X[0]), apply_field(0, X[1])}, {apply_field(1, X[0]), apply_field(1, X[1])}}};
  for (size_t n = 0; n < g.size(); ++n) {
    EllipticMatrix m = a.at(g.node(n));
    double s = 0.0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) s += m(i, j) * XX[i][j][n];
    out[n] = s;
  }
  return out;
}

SampledFunction variable_apply(const CoefficientField& a, const TestFunction& u, const GridSpec& grid) {
  return SampledFunction::sample(grid, [&](const Vec3& p) { return variable_apply_at(a, u, p); });
}

double model_apply_fd(const EllipticMatrix& abar, const std::function<double(const Vec3&)>& u, const Vec3& p,
                      double h) {
  // X_i by centred differences of the Euclidean partials, composed twice.
  auto X = [h](int i, const std::function<double(const Vec3&)>& f) {
    return [f, i, h](const Vec3& q) {
      auto d = [&](int a) {
        Vec3 qp = q, qm = q;
        qp[a] += h;
        qm[a] -= h;
        return (f(qp) - f(qm)) / (2 * h);
      };
      return i == 0 ? d(0) - 0.5 * q[1] * d(2) : d(1) + 0.5 * q[0] * d(2);
    };
  };
  double s = 0.0;
  for (int j = 0; j < 2; ++j) {
    std::function<double(const Vec3&)> Xj = X(j, u);
    for (int i = 0; i < 2; ++i)
      if (abar(i, j) != 0.0) s += abar(i, j) * X(i, Xj)(p);
  }
  return s;
}

namespace {

// Sources grouped by grid column. Along t, f is interpolated linearly between
// nodes and the kernel is integrated exactly: its t-profile at short horizontal
// range is far narrower than a cell. In (x, y) the rule is the midpoint rule,
// tensor Gauss on the neighbouring columns and Duffy triangles at the pole.
struct SourceColumn {
  int i, j, k0, k1;
  double qx, qy;
  std::vector<double> f;  // f at k0-1..k1+1, zero at both ends
};

class PotentialEngine {
 public:
  PotentialEngine(const FundamentalSolution& G, const SampledFunction& f) : g_(f.grid()) {
    for (int i = 0; i < g_.n[0]; ++i)
      for (int j = 0; j < g_.n[1]; ++j) {
        int k0 = -1, k1 = -1;
        for (int k = 0; k < g_.n[2]; ++k)
          if (f.at(i, j, k) != 0.0) {
            if (k0 < 0) k0 = k;
            k1 = k;
          }
        if (k0 < 0) continue;
        if (i < 2 || j < 2 || k0 < 2 || i >= g_.n[0] - 2 || j >= g_.n[1] - 2 || k1 >= g_.n[2] - 2)
          throw DomainError("source support touches the box boundary");
        SourceColumn c{i, j, k0, k1, g_.node(i, j, 0)[0], g_.node(i, j, 0)[1], {}};
        for (int k = k0 - 1; k <= k1 + 1; ++k) c.f.push_back(f.at(i, j, k));
        cols_.push_back(std::move(c));
      }
    auto A = G.matrix().cholesky();
    det_ = A[0] * A[3];
    Ainv_ = {A[3] / det_, 0.0, -A[2] / det_, A[0] / det_};
    scale_ = -G.normalization() / (det_ * det_);
    auto [x, w] = detail::gauss_legendre01(8);
    dx_ = x;
    dw_ = w;
    auto [gx, gw] = detail::gauss_legendre01(4);
    gx_ = gx;
    gw_ = gw;
    i0_.resize(g_.n[2] + 2);
    i1_.resize(g_.n[2] + 2);
  }

  double at(const Vec3& x) const {
    const int ix = static_cast<int>(std::lround((x[0] - g_.box.lo[0]) / g_.h[0]));
    const int jx = static_cast<int>(std::lround((x[1] - g_.box.lo[1]) / g_.h[1]));
    const int kx = static_cast<int>(std::lround((x[2] - g_.box.lo[2]) / g_.h[2]));
    const double area = g_.h[0] * g_.h[1];
    double sum = 0.0;
    for (const auto& c : cols_) {
      if (std::abs(c.i - ix) <= 1 && std::abs(c.j - jx) <= 1)
        sum += near_column(c, x, kx);
      else
        sum += area * column_sum(c, x, c.qx, c.qy, c.k0 - 1, c.k1);
    }
    return scale_ * sum;
  }

 private:
  // int f(q_t) dq_t / sqrt(S^2 + 16 tau^2/det^2), tau = shift - q_t, over the
  // node intervals [t_m, t_{m+1}] for m in [ma, mb], column c at (qx, qy).
  double column_sum(const SourceColumn& c, const Vec3& x, double qx, double qy, int ma, int mb) const {
    ma = std::max(ma, c.k0 - 1);
    mb = std::min(mb, c.k1);
    if (ma > mb) return 0.0;
    double dx = x[0] - qx, dy = x[1] - qy;
    double u = Ainv_[0] * dx;
    double v = Ainv_[2] * dx + Ainv_[3] * dy;
    double S = u * u + v * v;
    if (S == 0.0) return 0.0;  // measure-zero line through the pole
    const double kappa = 4.0 / (det_ * S);
    const double shift = x[2] - 0.5 * (qx * x[1] - qy * x[0]);
    const double ht = g_.h[2];
    // antiderivatives in tau: I0 = (det/4) asinh(4 tau/(det S)), I1 = (det^2/16) sqrt(S^2 + 16 tau^2/det^2)
    for (int m = ma; m <= mb + 1; ++m) {
      double tau = shift - (g_.box.lo[2] + m * ht);
      double z = kappa * tau;
      i0_[m] = 0.25 * det_ * std::asinh(z);
      i1_[m] = 0.0625 * det_ * det_ * S * std::sqrt(1.0 + z * z);
    }
    double s = 0.0;
    for (int m = ma; m <= mb; ++m) {
      double fm = c.f[m - c.k0 + 1], fn = c.f[m - c.k0 + 2];
      double tau_m = shift - (g_.box.lo[2] + m * ht);
      double J0 = i0_[m] - i0_[m + 1];  // q_t from t_m to t_{m+1} is tau from tau_m down
      double J1 = i1_[m] - i1_[m + 1];
      // f(shift - tau) = fm + (fn - fm)(tau_m - tau)/ht
      s += fm * J0 + (fn - fm) / ht * (tau_m * J0 - J1);
    }
    return s;
  }

  double near_column(const SourceColumn& c, const Vec3& x, int kx) const {
    const double hx = g_.h[0], hy = g_.h[1];
    const double x0 = c.qx - 0.5 * hx, y0 = c.qy - 0.5 * hy;
    const int ma = kx - 2, mb = kx + 1;  // intervals that may hold the pole's t-profile
    double total = 0.0;
    for (size_t a = 0; a < gx_.size(); ++a)
      for (size_t b = 0; b < gx_.size(); ++b) {
        double qx = x0 + gx_[a] * hx, qy = y0 + gx_[b] * hy;
        double w = gw_[a] * gw_[b] * hx * hy;
        total += w * (column_sum(c, x, qx, qy, c.k0 - 1, ma - 1) + column_sum(c, x, qx, qy, mb + 1, c.k1));
      }
    if (std::max(ma, c.k0 - 1) > std::min(mb, c.k1)) return total;
    double ax = std::clamp(x[0], x0, x0 + hx), ay = std::clamp(x[1], y0, y0 + hy);
    std::array<std::array<double, 2>, 5> corners{
        {{x0, y0}, {x0 + hx, y0}, {x0 + hx, y0 + hy}, {x0, y0 + hy}, {x0, y0}}};
    for (int m = 0; m < 4; ++m) {
      double ex = corners[m][0] - ax, ey = corners[m][1] - ay;
      double fx = corners[m + 1][0] - corners[m][0], fy = corners[m + 1][1] - corners[m][1];
      double jac = std::abs(ex * fy - ey * fx);
      if (jac == 0.0) continue;
      for (size_t a = 0; a < dx_.size(); ++a) {
        double u = dx_[a];
        for (size_t b = 0; b < dx_.size(); ++b) {
          double qx = ax + u * (ex + dx_[b] * fx), qy = ay + u * (ey + dx_[b] * fy);
          total += dw_[a] * dw_[b] * u * jac * column_sum(c, x, qx, qy, ma, mb);
        }
      }
    }
    return total;
  }

  const GridSpec& g_;
  std::vector<SourceColumn> cols_;
  std::array<double, 4> Ainv_{};
  double det_ = 1.0, scale_ = 0.0;
  std::vector<double> dx_, dw_, gx_, gw_;
  mutable std::vector<double> i0_, i1_;
};

}  // namespace

SampledFunction newtonian_potential(const FundamentalSolution& G, const SampledFunction& f) {
  PotentialEngine engine(G, f);
  SampledFunction u(f.grid(), 0.0);
  for (size_t n = 0; n < u.size(); ++n) u[n] = engine.at(f.grid().node(n));
  return u;
}

std::vector<double> newtonian_potential_at(const FundamentalSolution& G, const SampledFunction& f,
                                           const std::vector<Vec3>& points) {
  PotentialEngine engine(G, f);
  std::vector<double> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(engine.at(p));
  return out;
}

}  // namespace carnot
