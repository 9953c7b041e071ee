#pragma once

#include <array>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace carnot {

using Vec3 = std::array<double, 3>;

// Raw kernels of the first Heisenberg group, generic so that jets flow through.
namespace h1 {

template <class T>
std::array<T, 3> compose(const std::array<T, 3>& a, const std::array<T, 3>& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2] + 0.5 * (a[0] * b[1] - a[1] * b[0])};
}

template <class T>
std::array<T, 3> inverse(const std::array<T, 3>& a) {
  return {-a[0], -a[1], -a[2]};
}

template <class T>
std::array<T, 3> dilate(double lambda, const std::array<T, 3>& a) {
  return {lambda * a[0], lambda * a[1], (lambda * lambda) * a[2]};
}

// Fourth power of the Koranyi gauge; a polynomial, hence smooth everywhere.
template <class T>
T gauge4(const std::array<T, 3>& a) {
  T s = a[0] * a[0] + a[1] * a[1];
  return s * s + 16.0 * (a[2] * a[2]);
}

inline double gauge(const Vec3& a) { return std::sqrt(std::sqrt(gauge4(a))); }

// d(a,b) = rho(b^-1 a)
inline double distance(const Vec3& a, const Vec3& b) { return gauge(compose(inverse(b), a)); }

}  // namespace h1

struct CarnotGroup {
  std::string name;
  int n = 0;
  int q = 0;
  int s = 0;
  std::vector<int> alpha;
  double gauge_constant = 0.0;

  int homogeneous_dimension() const;
  double unit_ball_volume() const;
  void validate() const;

  std::string to_config() const;
  static CarnotGroup from_config(std::string_view text);
};

const CarnotGroup& heisenberg();

class GroupPoint {
 public:
  GroupPoint() = default;
  GroupPoint(double x, double y, double t);
  explicit GroupPoint(const Vec3& c);
  static GroupPoint from(std::span<const double> coords);

  const Vec3& coords() const { return c_; }
  double operator[](int i) const { return c_[i]; }
  bool operator==(const GroupPoint&) const = default;

 private:
  Vec3 c_{0.0, 0.0, 0.0};
};

GroupPoint compose(const GroupPoint& a, const GroupPoint& b);
GroupPoint inverse(const GroupPoint& a);
GroupPoint dilate(double lambda, const GroupPoint& a);
double gauge_norm(const GroupPoint& a);
double quasi_distance(const GroupPoint& a, const GroupPoint& b);

struct Ball {
  Ball(GroupPoint center, double radius);
  GroupPoint center;
  double radius;
  bool contains(const Vec3& p) const;
  double exact_volume() const;
};

struct Box {
  Vec3 lo;
  Vec3 hi;
  bool contains(const Vec3& p) const;
  // Smallest box holding B(c, r), from the column description of the ball.
  static Box around(const Ball& b);
  bool contains(const Box& other) const;
};

// Shortest horizontal path on the discrete Heisenberg lattice of spacing
// (box width)/resolution, searched with A* under an isoperimetric lower bound.
double cc_distance_approx(const GroupPoint& a, const GroupPoint& b, int resolution, const Box& box);

}  // namespace carnot
