#include "carnot/grid.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "carnot/errors.hpp"

namespace carnot {

GridSpec::GridSpec(const Box& b, std::array<int, 3> nodes) : box(b), n(nodes) {
  for (int a = 0; a < 3; ++a) {
    if (n[a] < 2) throw StructuralError("grid needs at least two nodes per axis");
    if (!(box.hi[a] > box.lo[a])) throw StructuralError("grid box must have positive extent");
    h[a] = (box.hi[a] - box.lo[a]) / (n[a] - 1);
  }
}

GridSpec GridSpec::cells(const Box& b, int cells) { return GridSpec(b, {cells + 1, cells + 1, cells + 1}); }

Vec3 GridSpec::node(size_t idx) const {
  int k = static_cast<int>(idx % n[2]);
  size_t rest = idx / n[2];
  int j = static_cast<int>(rest % n[1]);
  int i = static_cast<int>(rest / n[1]);
  return node(i, j, k);
}

bool GridSpec::operator==(const GridSpec& o) const {
  return n == o.n && box.lo == o.box.lo && box.hi == o.box.hi;
}

SampledFunction::SampledFunction(const GridSpec& grid, double fill) : grid_(grid), values_(grid.size(), fill) {}

SampledFunction::SampledFunction(const GridSpec& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size()) throw StructuralError("value count does not match grid");
  for (double v : values_)
    if (!std::isfinite(v)) throw DomainError("sampled values must be finite");
}

SampledFunction SampledFunction::sample(const GridSpec& grid, const std::function<double(const Vec3&)>& f) {
  SampledFunction out(grid);
  size_t idx = 0;
  for (int i = 0; i < grid.n[0]; ++i)
    for (int j = 0; j < grid.n[1]; ++j)
      for (int k = 0; k < grid.n[2]; ++k) out.values_[idx++] = f(grid.node(i, j, k));
  return out;
}

SampledFunction& SampledFunction::operator+=(const SampledFunction& o) {
  if (!(grid_ == o.grid_)) throw StructuralError("grid mismatch");
  for (size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
  return *this;
}

SampledFunction& SampledFunction::operator-=(const SampledFunction& o) {
  if (!(grid_ == o.grid_)) throw StructuralError("grid mismatch");
  for (size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
  return *this;
}

SampledFunction& SampledFunction::operator*=(double c) {
  for (double& v : values_) v *= c;
  return *this;
}

SampledFunction SampledFunction::map(const std::function<double(double)>& f) const {
  SampledFunction out(*this);
  for (double& v : out.values_) v = f(v);
  return out;
}

void SampledFunction::dump(std::ostream& out) const {
  out.precision(17);
  out << "carnot-grid 1\n"
      << "lo " << grid_.box.lo[0] << ' ' << grid_.box.lo[1] << ' ' << grid_.box.lo[2] << "\n"
      << "hi " << grid_.box.hi[0] << ' ' << grid_.box.hi[1] << ' ' << grid_.box.hi[2] << "\n"
      << "counts " << grid_.n[0] << ' ' << grid_.n[1] << ' ' << grid_.n[2] << "\n"
      << "spacing " << grid_.h[0] << ' ' << grid_.h[1] << ' ' << grid_.h[2] << "\n"
      << "data\n";
  out.write(reinterpret_cast<const char*>(values_.data()),
            static_cast<std::streamsize>(values_.size() * sizeof(double)));
}

SampledFunction SampledFunction::load(std::istream& in) {
  std::string line, tag;
  Box box{};
  std::array<int, 3> n{};
  std::getline(in, line);
  if (line != "carnot-grid 1") throw StructuralError("not a grid dump");
  while (std::getline(in, line) && line != "data") {
    std::istringstream ls(line);
    ls >> tag;
    if (tag == "lo") ls >> box.lo[0] >> box.lo[1] >> box.lo[2];
    else if (tag == "hi") ls >> box.hi[0] >> box.hi[1] >> box.hi[2];
    else if (tag == "counts") ls >> n[0] >> n[1] >> n[2];
  }
  GridSpec grid(box, n);
  std::vector<double> values(grid.size());
  in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!in) throw StructuralError("truncated grid dump");
  return SampledFunction(grid, std::move(values));
}

void SampledFunction::write_slice_csv(std::ostream& out, int k) const {
  if (k < 0 || k >= grid_.n[2]) throw DomainError("slice index out of range");
  out.precision(12);
  out << "x,y,value\n";
  for (int i = 0; i < grid_.n[0]; ++i)
    for (int j = 0; j < grid_.n[1]; ++j) {
      Vec3 p = grid_.node(i, j, k);
      out << p[0] << ',' << p[1] << ',' << at(i, j, k) << '\n';
    }
}

bool ball_fits(const GridSpec& grid, const Ball& ball) {
  return grid.box.contains(Box::around(ball));
}

std::vector<BallColumn> ball_columns(const GridSpec& grid, const Ball& ball) {
  if (!ball_fits(grid, ball)) throw DomainError("ball not contained in grid box");
  const Vec3& c = ball.center.coords();
  const double r = ball.radius;
  const double r4 = r * r * r * r;
  std::vector<BallColumn> cols;
  int i0 = std::max(0, static_cast<int>(std::floor((c[0] - r - grid.box.lo[0]) / grid.h[0])));
  int i1 = std::min(grid.n[0] - 1, static_cast<int>(std::ceil((c[0] + r - grid.box.lo[0]) / grid.h[0])));
  int j0 = std::max(0, static_cast<int>(std::floor((c[1] - r - grid.box.lo[1]) / grid.h[1])));
  int j1 = std::min(grid.n[1] - 1, static_cast<int>(std::ceil((c[1] + r - grid.box.lo[1]) / grid.h[1])));
  const double lot = grid.box.lo[2], ht = grid.h[2];
  const int nt = grid.n[2];
  for (int i = i0; i <= i1; ++i) {
    double x = grid.box.lo[0] + i * grid.h[0];
    double dx = x - c[0];
    for (int j = j0; j <= j1; ++j) {
      double y = grid.box.lo[1] + j * grid.h[1];
      double dy = y - c[1];
      double s = dx * dx + dy * dy;
      double q = s * s;
      if (q >= r4) continue;
      double half = 0.25 * std::sqrt(r4 - q);
      double t0 = c[2] + 0.5 * (c[0] * y - c[1] * x);
      int k0 = static_cast<int>(std::floor((t0 - half - lot) / ht)) + 1;
      int k1 = static_cast<int>(std::ceil((t0 + half - lot) / ht)) - 1;
      k0 = std::max(k0, 0);
      k1 = std::min(k1, nt - 1);
      // settle the run ends with the exact membership test
      auto in = [&](int k) { return ball.contains({x, y, lot + k * ht}); };
      while (k0 <= k1 && !in(k0)) ++k0;
      while (k1 >= k0 && !in(k1)) --k1;
      if (k0 > k1) continue;
      while (k0 > 0 && in(k0 - 1)) --k0;
      while (k1 < nt - 1 && in(k1 + 1)) ++k1;
      cols.push_back({i, j, k0, k1});
    }
  }
  return cols;
}

size_t ball_node_count(const std::vector<BallColumn>& cols) {
  size_t n = 0;
  for (const auto& c : cols) n += static_cast<size_t>(c.k1 - c.k0 + 1);
  return n;
}

double ball_volume(const Ball& ball, const GridSpec& grid) {
  return static_cast<double>(ball_node_count(ball_columns(grid, ball))) * grid.weight();
}

BallQuadrature::BallQuadrature(double radius, int cells) : radius_(radius) {
  if (!(radius > 0.0)) throw DomainError("quadrature radius must be positive");
  if (cells < 2) throw DomainError("quadrature needs at least two cells per axis");
  double hx = 2.0 * radius / cells;
  double tz = 0.25 * radius * radius;
  double ht = 2.0 * tz / cells;
  weight_ = hx * hx * ht;
  double r4 = radius * radius * radius * radius;
  for (int a = 0; a < cells; ++a)
    for (int b = 0; b < cells; ++b)
      for (int c = 0; c < cells; ++c) {
        Vec3 q{-radius + (a + 0.5) * hx, -radius + (b + 0.5) * hx, -tz + (c + 0.5) * ht};
        if (h1::gauge4(q) < r4) offsets_.push_back(q);
      }
}

double BallQuadrature::integrate(const Vec3& center, const std::function<double(const Vec3&)>& f) const {
  double sum = 0.0;
  for (const Vec3& q : offsets_) sum += f(h1::compose(center, q));
  return sum * weight_;
}

double BallQuadrature::average(const Vec3& center, const std::function<double(const Vec3&)>& f) const {
  double sum = 0.0;
  for (const Vec3& q : offsets_) sum += f(h1::compose(center, q));
  return sum / static_cast<double>(offsets_.size());
}

namespace {

std::array<double, 4> catmull_rom(double u) {
  double u2 = u * u, u3 = u2 * u;
  return {0.5 * (-u3 + 2 * u2 - u), 0.5 * (3 * u3 - 5 * u2 + 2), 0.5 * (-3 * u3 + 4 * u2 + u), 0.5 * (u3 - u2)};
}

}  // namespace

double interpolate_cubic(const SampledFunction& f, const Vec3& p) {
  const GridSpec& g = f.grid();
  std::array<int, 3> base{};
  std::array<std::array<double, 4>, 3> w{};
  for (int a = 0; a < 3; ++a) {
    if (g.n[a] < 4) throw DomainError("cubic interpolation needs four nodes per axis");
    double s = (p[a] - g.box.lo[a]) / g.h[a];
    if (s < 1.0 || s > g.n[a] - 2.0) throw DomainError("interpolation point too close to the box face");
    int i = std::min(static_cast<int>(std::floor(s)), g.n[a] - 3);
    base[a] = i - 1;
    w[a] = catmull_rom(s - i);
  }
  double sum = 0.0;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      double wab = w[0][a] * w[1][b];
      size_t idx = g.index(base[0] + a, base[1] + b, base[2]);
      double col = 0.0;
      for (int c = 0; c < 4; ++c) col += w[2][c] * f[idx + c];
      sum += wab * col;
    }
  return sum;
}

SampledFunction partial(const SampledFunction& f, int axis) {
  const GridSpec& g = f.grid();
  if (axis < 0 || axis > 2) throw StructuralError("axis out of range");
  const int n = g.n[axis];
  if (n < 3) throw DomainError("difference stencil needs three nodes per axis");
  const size_t stride = axis == 2 ? 1 : axis == 1 ? static_cast<size_t>(g.n[2]) : static_cast<size_t>(g.n[1]) * g.n[2];
  const double inv = 1.0 / (2.0 * g.h[axis]);
  SampledFunction out(g);
  for (int i = 0; i < g.n[0]; ++i)
    for (int j = 0; j < g.n[1]; ++j)
      for (int k = 0; k < g.n[2]; ++k) {
        int pos = axis == 0 ? i : axis == 1 ? j : k;
        size_t idx = g.index(i, j, k);
        double d;
        if (pos == 0)
          d = -3 * f[idx] + 4 * f[idx + stride] - f[idx + 2 * stride];
        else if (pos == n - 1)
          d = 3 * f[idx] - 4 * f[idx - stride] + f[idx - 2 * stride];
        else
          d = f[idx + stride] - f[idx - stride];
        out[idx] = d * inv;
      }
  return out;
}

}  // namespace carnot
