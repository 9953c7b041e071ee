#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "carnot/group.hpp"

namespace carnot {

// Uniform node grid over a box; n[a] nodes per axis, t varies fastest.
struct GridSpec {
  GridSpec() = default;
  GridSpec(const Box& box, std::array<int, 3> nodes);
  // `cells` intervals per axis, so the box corners are nodes.
  static GridSpec cells(const Box& box, int cells);

  Box box{};
  std::array<int, 3> n{0, 0, 0};
  Vec3 h{0, 0, 0};

  size_t size() const { return static_cast<size_t>(n[0]) * n[1] * n[2]; }
  size_t index(int i, int j, int k) const {
    return (static_cast<size_t>(i) * n[1] + j) * n[2] + k;
  }
  Vec3 node(int i, int j, int k) const {
    return {box.lo[0] + i * h[0], box.lo[1] + j * h[1], box.lo[2] + k * h[2]};
  }
  Vec3 node(size_t idx) const;
  double weight() const { return h[0] * h[1] * h[2]; }
  bool operator==(const GridSpec& o) const;
};

class SampledFunction {
 public:
  SampledFunction() = default;
  explicit SampledFunction(const GridSpec& grid, double fill = 0.0);
  SampledFunction(const GridSpec& grid, std::vector<double> values);
  static SampledFunction sample(const GridSpec& grid, const std::function<double(const Vec3&)>& f);

  const GridSpec& grid() const { return grid_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }
  double operator[](size_t i) const { return values_[i]; }
  double& operator[](size_t i) { return values_[i]; }
  double at(int i, int j, int k) const { return values_[grid_.index(i, j, k)]; }
  size_t size() const { return values_.size(); }

  SampledFunction& operator+=(const SampledFunction& o);
  SampledFunction& operator-=(const SampledFunction& o);
  SampledFunction& operator*=(double c);
  SampledFunction map(const std::function<double(double)>& f) const;

  // Text header then raw little-endian doubles.
  void dump(std::ostream& out) const;
  static SampledFunction load(std::istream& in);
  // CSV of the slice k = const: x,y,value.
  void write_slice_csv(std::ostream& out, int k) const;

 private:
  GridSpec grid_;
  std::vector<double> values_;
};

// Node indices of a quasi-distance ball, one contiguous t-run per (i,j) column.
struct BallColumn {
  int i, j, k0, k1;  // inclusive run [k0, k1]
};

// Columns of {node : d(center, node) < r}. Throws DomainError unless the ball
// lies inside the grid box.
std::vector<BallColumn> ball_columns(const GridSpec& grid, const Ball& ball);
bool ball_fits(const GridSpec& grid, const Ball& ball);
size_t ball_node_count(const std::vector<BallColumn>& cols);

// Quadrature measure of the ball: node count times cell volume.
double ball_volume(const Ball& ball, const GridSpec& grid);

// Quadrature of a pointwise integrand over B(c, r) using the cell centres of a
// grid fitted to B(0, r), mapped by left translation (Haar measure is invariant).
class BallQuadrature {
 public:
  BallQuadrature(double radius, int cells);
  double radius() const { return radius_; }
  double weight() const { return weight_; }
  const std::vector<Vec3>& offsets() const { return offsets_; }
  double volume() const { return weight_ * offsets_.size(); }

  double integrate(const Vec3& center, const std::function<double(const Vec3&)>& f) const;
  double average(const Vec3& center, const std::function<double(const Vec3&)>& f) const;

 private:
  double radius_;
  double weight_;
  std::vector<Vec3> offsets_;
};

// Catmull-Rom tricubic interpolation; p must have one node of margin inside the box.
double interpolate_cubic(const SampledFunction& f, const Vec3& p);

// Centred second-order difference of f along axis a; second-order one-sided on faces.
SampledFunction partial(const SampledFunction& f, int axis);

}  // namespace carnot
