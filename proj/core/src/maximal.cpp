#include "carnot/maximal.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "carnot/errors.hpp"

namespace carnot {

DomainChain::DomainChain(double R0, int levels, double margin_fraction)
    : R0_(R0), levels_(levels), fraction_(margin_fraction) {
  if (!(R0 > 0.0)) throw DomainError("chain base radius must be positive");
  if (!(margin_fraction > 0.0 && margin_fraction <= 0.05)) throw DomainError("chain margin fraction must lie in (0, 1/20]");
  if (levels < 2) throw DomainError("chain needs at least two levels");
}

void DomainChain::check_level(int m) const {
  if (m < 0 || m >= levels_) throw DomainError("chain level out of range");
}

Ball DomainChain::domain(int m) const {
  check_level(m);
  return Ball(GroupPoint(0, 0, 0), R0_ * (1.0 + m / 10.0));
}

double DomainChain::margin(int m) const {
  check_level(m);
  return fraction_ * R0_;
}

bool DomainChain::contains(int m, const Vec3& p) const { return domain(m).contains(p); }

bool DomainChain::nesting_holds(int samples, unsigned seed) const {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  // a point at gauge exactly r in a random direction
  auto on_sphere = [&](double r) {
    Vec3 v{n01(rng), n01(rng), n01(rng)};
    double g = h1::gauge(v);
    return h1::dilate(r / g, v);
  };
  for (int m = 0; m + 1 < levels_; ++m) {
    double R = R0_ * (1.0 + m / 10.0), eps = margin(m);
    Ball next = domain(m + 1);
    for (int s = 0; s < samples; ++s) {
      Vec3 y = on_sphere(R * std::pow(u01(rng), 0.05));
      Vec3 z = on_sphere(2.0 * eps * u01(rng));
      if (!next.contains(h1::compose(y, z))) return false;
    }
  }
  return true;
}

BallLattice BallLattice::geometric(double r_min, double r_max, double stride, double ratio) {
  if (!(r_min > 0.0) || !(r_max >= r_min)) throw DomainError("lattice radii must satisfy 0 < r_min <= r_max");
  if (!(ratio > 1.0)) throw DomainError("lattice radius ratio must exceed 1");
  BallLattice L{stride, {}};
  for (int k = 0;; ++k) {
    double r = r_min * std::pow(ratio, k);
    if (r > r_max * (1 + 1e-12)) break;
    L.radii.push_back(r);
  }
  L.validate();
  return L;
}

BallLattice BallLattice::refined() const {
  BallLattice L{0.5 * stride, {}};
  for (size_t n = 0; n < radii.size(); ++n) {
    L.radii.push_back(radii[n]);
    if (n + 1 < radii.size()) L.radii.push_back(std::sqrt(radii[n] * radii[n + 1]));
  }
  return L;
}

void BallLattice::validate() const {
  if (!(stride > 0.0)) throw DomainError("lattice stride must be positive");
  if (radii.empty()) throw DomainError("lattice has no radii");
  for (size_t n = 0; n < radii.size(); ++n) {
    if (!(radii[n] > 0.0)) throw DomainError("lattice radii must be positive");
    if (n > 0 && !(radii[n] > radii[n - 1])) throw DomainError("lattice radii must be increasing");
  }
}

std::array<int, 3> BallLattice::node_strides(const GridSpec& grid) const {
  // powers of two, so halving the stride gives a superset of centres
  auto pow2 = [](double ratio) {
    int s = 1;
    while (2.0 * s <= ratio * (1 + 1e-9)) s *= 2;
    return s;
  };
  return {pow2(stride / grid.h[0]), pow2(stride / grid.h[1]), pow2(0.25 * stride * stride / grid.h[2])};
}

void MaximalConfig::validate() const {
  lattice.validate();
  if (!(gamma > 1.0)) throw DomainError("Fefferman-Stein factor gamma must exceed 1");
  for (double p : p_values)
    if (!(p >= 1.0)) throw DomainError("maximal exponents must be at least 1");
}

namespace {

// Mean over the ball nodes, shifted by the value f0 so that constants are exact.
struct BallStats {
  size_t count = 0;
  double mean = 0.0;
};

BallStats ball_mean(const SampledFunction& f, const std::vector<BallColumn>& cols, double f0, bool absolute) {
  const GridSpec& g = f.grid();
  double s = 0.0;
  size_t n = 0;
  for (const auto& c : cols) {
    size_t base = g.index(c.i, c.j, 0);
    for (int k = c.k0; k <= c.k1; ++k) s += (absolute ? std::abs(f[base + k]) : f[base + k]) - f0;
    n += c.k1 - c.k0 + 1;
  }
  return {n, n ? f0 + s / static_cast<double>(n) : 0.0};
}

double mean_abs_deviation(const SampledFunction& f, const std::vector<BallColumn>& cols, double mean, size_t n) {
  const GridSpec& g = f.grid();
  double s = 0.0;
  for (const auto& c : cols) {
    size_t base = g.index(c.i, c.j, 0);
    for (int k = c.k0; k <= c.k1; ++k) s += std::abs(f[base + k] - mean);
  }
  return s / static_cast<double>(n);
}

int nearest(const GridSpec& g, int axis, double v) {
  int i = static_cast<int>(std::lround((v - g.box.lo[axis]) / g.h[axis]));
  return std::clamp(i, 0, g.n[axis] - 1);
}

double anchor(const SampledFunction& f, const Vec3& c, bool absolute) {
  const GridSpec& g = f.grid();
  double v = f.at(nearest(g, 0, c[0]), nearest(g, 1, c[1]), nearest(g, 2, c[2]));
  return absolute ? std::abs(v) : v;
}

std::vector<BallColumn> nonempty_columns(const GridSpec& g, const Ball& b) {
  auto cols = ball_columns(g, b);
  if (cols.empty()) throw DomainError("ball holds no grid node");
  return cols;
}

bool admissible(const GridSpec& g, const Ball& b) { return g.box.contains(Box::around(b)); }

// Lattice centre indices along one axis: congruent to the middle node mod stride.
bool on_lattice(int i, int n, int stride) {
  int mid = (n - 1) / 2;
  return ((i - mid) % stride + stride) % stride == 0;
}

template <class Fn>
void for_each_center(const GridSpec& g, const std::array<int, 3>& s, Fn&& fn) {
  for (int i = 0; i < g.n[0]; ++i) {
    if (!on_lattice(i, g.n[0], s[0])) continue;
    for (int j = 0; j < g.n[1]; ++j) {
      if (!on_lattice(j, g.n[1], s[1])) continue;
      for (int k = 0; k < g.n[2]; ++k)
        if (on_lattice(k, g.n[2], s[2])) fn(i, j, k);
    }
  }
}

// Lattice centres c whose ball B(c, r) contains x.
template <class Fn>
void for_each_center_near(const GridSpec& g, const std::array<int, 3>& s, const Vec3& x, double r, Fn&& fn) {
  Box box = Box::around(Ball(GroupPoint(x), r));
  int lo[3], hi[3];
  for (int a = 0; a < 3; ++a) {
    lo[a] = std::max(0, static_cast<int>(std::floor((box.lo[a] - g.box.lo[a]) / g.h[a])));
    hi[a] = std::min(g.n[a] - 1, static_cast<int>(std::ceil((box.hi[a] - g.box.lo[a]) / g.h[a])));
  }
  for (int i = lo[0]; i <= hi[0]; ++i) {
    if (!on_lattice(i, g.n[0], s[0])) continue;
    for (int j = lo[1]; j <= hi[1]; ++j) {
      if (!on_lattice(j, g.n[1], s[1])) continue;
      for (int k = lo[2]; k <= hi[2]; ++k) {
        if (!on_lattice(k, g.n[2], s[2])) continue;
        Vec3 c = g.node(i, j, k);
        if (Ball(GroupPoint(c), r).contains(x)) fn(c);
      }
    }
  }
}

void check_point(const GridSpec& g, const Vec3& x) {
  if (!g.box.contains(x)) throw DomainError("evaluation point outside the grid box");
}

void check_vmo_radii(const std::vector<double>& rs, double eps, const BallLattice& lattice) {
  for (double r : rs) {
    if (r > eps * (1 + 1e-12)) throw DomainError("VMO radius exceeds the chain margin");
    if (r < lattice.radii.front()) throw DomainError("VMO radius below the smallest lattice radius");
  }
}

void scatter_max(MaximalField& out, const std::vector<BallColumn>& cols, double v) {
  const GridSpec& g = out.values.grid();
  for (const auto& c : cols) {
    size_t base = g.index(c.i, c.j, 0);
    for (int k = c.k0; k <= c.k1; ++k) {
      size_t n = base + k;
      if (!out.covered[n] || v > out.values[n]) out.values[n] = v;
      out.covered[n] = 1;
    }
  }
}

}  // namespace

double ball_average(const SampledFunction& f, const Ball& b) {
  auto cols = nonempty_columns(f.grid(), b);
  return ball_mean(f, cols, anchor(f, b.center.coords(), false), false).mean;
}

double ball_oscillation(const SampledFunction& f, const Ball& b) {
  auto cols = nonempty_columns(f.grid(), b);
  auto st = ball_mean(f, cols, anchor(f, b.center.coords(), false), false);
  return mean_abs_deviation(f, cols, st.mean, st.count);
}

double hl_maximal(const SampledFunction& f, const Vec3& x, const MaximalConfig& cfg) {
  cfg.validate();
  const GridSpec& g = f.grid();
  check_point(g, x);
  auto s = cfg.lattice.node_strides(g);
  double best = -1.0;
  for (double r : cfg.lattice.radii)
    for_each_center_near(g, s, x, r, [&](const Vec3& c) {
      Ball b(GroupPoint(c), r);
      if (!admissible(g, b)) return;
      auto cols = ball_columns(g, b);
      auto st = ball_mean(f, cols, anchor(f, c, true), true);
      if (st.count) best = std::max(best, st.mean);
    });
  if (best < 0.0) throw DomainError("no admissible lattice ball contains the point");
  return best;
}

double local_sharp_maximal(const SampledFunction& f, const Vec3& x, int m, const DomainChain& chain,
                           const MaximalConfig& cfg) {
  cfg.validate();
  const GridSpec& g = f.grid();
  check_point(g, x);
  if (!chain.contains(m, x)) throw DomainError("sharp maximal point outside its chain domain");
  auto s = cfg.lattice.node_strides(g);
  const double eps = chain.margin(m);
  double best = -1.0;
  for (double r : cfg.lattice.radii) {
    if (r > eps) break;
    for_each_center_near(g, s, x, r, [&](const Vec3& c) {
      if (!chain.contains(m, c)) return;
      Ball b(GroupPoint(c), r);
      if (!admissible(g, b)) return;
      auto cols = ball_columns(g, b);
      auto st = ball_mean(f, cols, anchor(f, c, false), false);
      if (st.count) best = std::max(best, mean_abs_deviation(f, cols, st.mean, st.count));
    });
  }
  if (best < 0.0) throw DomainError("no admissible lattice ball contains the point");
  return best;
}

MaximalField hl_maximal_field(const SampledFunction& f, const MaximalConfig& cfg) {
  cfg.validate();
  const GridSpec& g = f.grid();
  MaximalField out{SampledFunction(g, 0.0), std::vector<std::uint8_t>(g.size(), 0)};
  auto s = cfg.lattice.node_strides(g);
  for_each_center(g, s, [&](int i, int j, int k) {
    Vec3 c = g.node(i, j, k);
    double f0 = std::abs(f.at(i, j, k));
    for (double r : cfg.lattice.radii) {
      Ball b(GroupPoint(c), r);
      if (!admissible(g, b)) break;  // radii ascend
      auto cols = ball_columns(g, b);
      auto st = ball_mean(f, cols, f0, true);
      if (st.count) scatter_max(out, cols, st.mean);
    }
  });
  return out;
}

MaximalField local_sharp_maximal_field(const SampledFunction& f, int m, const DomainChain& chain,
                                       const MaximalConfig& cfg) {
  cfg.validate();
  const GridSpec& g = f.grid();
  MaximalField out{SampledFunction(g, 0.0), std::vector<std::uint8_t>(g.size(), 0)};
  auto s = cfg.lattice.node_strides(g);
  const double eps = chain.margin(m);
  for_each_center(g, s, [&](int i, int j, int k) {
    Vec3 c = g.node(i, j, k);
    if (!chain.contains(m, c)) return;
    double f0 = f.at(i, j, k);
    for (double r : cfg.lattice.radii) {
      if (r > eps) break;
      Ball b(GroupPoint(c), r);
      if (!admissible(g, b)) break;
      auto cols = ball_columns(g, b);
      auto st = ball_mean(f, cols, f0, false);
      if (st.count) scatter_max(out, cols, mean_abs_deviation(f, cols, st.mean, st.count));
    }
  });
  return out;
}

std::vector<double> vmo_profile(const SampledFunction& f, int m, const std::vector<double>& rs,
                                const DomainChain& chain, const MaximalConfig& cfg) {
  cfg.validate();
  const auto& radii = cfg.lattice.radii;
  check_vmo_radii(rs, chain.margin(m), cfg.lattice);
  const double rmax = *std::max_element(rs.begin(), rs.end());
  const GridSpec& g = f.grid();
  auto s = cfg.lattice.node_strides(g);
  // best oscillation per lattice radius
  std::vector<double> per_radius(radii.size(), 0.0);
  for_each_center(g, s, [&](int i, int j, int k) {
    Vec3 c = g.node(i, j, k);
    if (!chain.contains(m, c)) return;
    double f0 = f.at(i, j, k);
    for (size_t n = 0; n < radii.size() && radii[n] <= rmax; ++n) {
      Ball b(GroupPoint(c), radii[n]);
      if (!admissible(g, b)) break;
      auto cols = ball_columns(g, b);
      auto st = ball_mean(f, cols, f0, false);
      if (st.count) per_radius[n] = std::max(per_radius[n], mean_abs_deviation(f, cols, st.mean, st.count));
    }
  });
  std::vector<double> out;
  for (double r : rs) {
    double eta = 0.0;
    for (size_t n = 0; n < radii.size() && radii[n] <= r; ++n) eta = std::max(eta, per_radius[n]);
    out.push_back(eta);
  }
  return out;
}

double vmo_modulus(const SampledFunction& f, int m, double r, const DomainChain& chain, const MaximalConfig& cfg) {
  return vmo_profile(f, m, {r}, chain, cfg)[0];
}

std::vector<double> vmo_profile(const std::function<double(const Vec3&)>& f, int m, const std::vector<double>& rs,
                                const DomainChain& chain, const MaximalConfig& cfg, int cells) {
  cfg.validate();
  const auto& radii = cfg.lattice.radii;
  check_vmo_radii(rs, chain.margin(m), cfg.lattice);
  const double rmax = *std::max_element(rs.begin(), rs.end());
  const double R = chain.domain(m).radius;
  const double s = cfg.lattice.stride, st = 0.25 * s * s;
  const int nx = static_cast<int>(std::floor(R / s)), nt = static_cast<int>(std::floor(0.25 * R * R / st));
  if (static_cast<double>(2 * nx + 1) * (2 * nx + 1) * (2 * nt + 1) > 4e6)
    throw DomainError("lattice stride too fine for the chain domain");
  std::vector<BallQuadrature> quads;
  for (double r : radii)
    if (r <= rmax) quads.emplace_back(r, cells);
  std::vector<double> per_radius(quads.size(), 0.0), vals;
  for (int i = -nx; i <= nx; ++i)
    for (int j = -nx; j <= nx; ++j)
      for (int k = -nt; k <= nt; ++k) {
        Vec3 c{i * s, j * s, k * st};
        if (!chain.contains(m, c)) continue;
        const double f0 = f(c);
        for (size_t n = 0; n < quads.size(); ++n) {
          vals.clear();
          double sum = 0.0;
          for (const auto& q : quads[n].offsets()) {
            vals.push_back(f(h1::compose(c, q)));
            sum += vals.back() - f0;
          }
          const double mean = f0 + sum / static_cast<double>(vals.size());
          double dev = 0.0;
          for (double v : vals) dev += std::abs(v - mean);
          per_radius[n] = std::max(per_radius[n], dev / static_cast<double>(vals.size()));
        }
      }
  std::vector<double> out;
  for (double r : rs) {
    double eta = 0.0;
    for (size_t n = 0; n < quads.size() && radii[n] <= r; ++n) eta = std::max(eta, per_radius[n]);
    out.push_back(eta);
  }
  return out;
}

std::vector<double> a_sharp_profile(const CoefficientField& a, int m, const std::vector<double>& rs,
                                    const DomainChain& chain, const MaximalConfig& cfg, int cells) {
  std::vector<double> total(rs.size(), 0.0);
  const std::array<std::pair<int, double>, 3> entries{{{0, 1.0}, {1, 2.0}, {2, 1.0}}};
  for (auto [e, mult] : entries) {
    auto eta = vmo_profile([&](const Vec3& p) { return a.entries(p)[e]; }, m, rs, chain, cfg, cells);
    for (size_t n = 0; n < rs.size(); ++n) total[n] += mult * eta[n];
  }
  return total;
}

double a_sharp(const CoefficientField& a, int m, double r, const DomainChain& chain, const MaximalConfig& cfg,
               int cells) {
  return a_sharp_profile(a, m, {r}, chain, cfg, cells)[0];
}

double lp_norm_on(const SampledFunction& f, const Ball& b, double p) {
  if (!(p >= 1.0)) throw DomainError("L^p exponent must be at least 1");
  const GridSpec& g = f.grid();
  double s = 0.0;
  for (const auto& c : ball_columns(g, b)) {
    size_t base = g.index(c.i, c.j, 0);
    for (int k = c.k0; k <= c.k1; ++k) s += std::pow(std::abs(f[base + k]), p);
  }
  return std::pow(s * g.weight(), 1.0 / p);
}

std::optional<double> fefferman_stein_ratio(const SampledFunction& f, double R, double p, int m,
                                            const DomainChain& chain, const MaximalConfig& cfg) {
  cfg.validate();
  const GridSpec& g = f.grid();
  const Ball inner(GroupPoint(0, 0, 0), R);
  double total = 0.0, mass = 0.0;
  bool any = false;
  for (size_t n = 0; n < g.size(); ++n) {
    if (f[n] == 0.0) continue;
    any = true;
    if (!inner.contains(g.node(n))) throw DomainError("function support leaves B_R");
    total += f[n];
    mass += std::abs(f[n]);
  }
  if (!any) return std::nullopt;
  if (std::abs(total) > 1e-8 * mass) throw DomainError("function does not have zero mean");
  const int level = m + 2;
  const double outer_r = cfg.gamma * R;
  if (!g.box.contains(Box::around(Ball(GroupPoint(0, 0, 0), outer_r + 2.0 * chain.margin(level)))))
    throw DomainError("grid box does not hold the dilated ball and its margin");
  auto sharp = local_sharp_maximal_field(f, level, chain, cfg);
  const Ball outer(GroupPoint(0, 0, 0), outer_r);
  double s = 0.0;
  for (const auto& c : ball_columns(g, outer)) {
    size_t base = g.index(c.i, c.j, 0);
    for (int k = c.k0; k <= c.k1; ++k) {
      if (!sharp.covered[base + k]) throw DomainError("sharp maximal function not defined on B_{gamma R}");
      s += std::pow(sharp.values[base + k], p);
    }
  }
  double den = std::pow(s * g.weight(), 1.0 / p);
  if (den == 0.0) return std::nullopt;
  return lp_norm_on(f, inner, p) / den;
}

void write_maximal_csv(std::ostream& out, const MaximalField& mf, const MaximalField& sharp) {
  const GridSpec& g = mf.values.grid();
  if (!(g == sharp.values.grid())) throw StructuralError("maximal fields live on different grids");
  out << "x,y,t,Mf,fsharp\n";
  out.precision(12);
  for (size_t n = 0; n < g.size(); ++n) {
    if (!mf.covered[n] || !sharp.covered[n]) continue;
    Vec3 p = g.node(n);
    out << p[0] << ',' << p[1] << ',' << p[2] << ',' << mf.values[n] << ',' << sharp.values[n] << '\n';
  }
}

}  // namespace carnot
