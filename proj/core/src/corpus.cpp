#include <cmath>
#include <sstream>

#include "carnot/calculus.hpp"
#include "carnot/errors.hpp"

namespace carnot::corpus {

namespace {

std::string short_number(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

// exp(2 - 2/(1-s)) on s < 1, zero beyond; equals 1 at s = 0. Fed with rho^4
// rather than rho^2 because rho^2 is not smooth across the t-axis; the factor 2
// softens the edge enough for finite differences to reach their asymptotic rate
// on desk-sized grids.
template <class T>
T bump_profile(const T& s) {
  if (jm::value(s) >= 1.0) return T(0.0);
  return jm::exp(2.0 - 2.0 / (1.0 - s));
}

Ball origin_ball(double R) { return Ball(GroupPoint(0, 0, 0), R); }

}  // namespace

TestFunction gauge_bump(double R, const Vec3& center) {
  if (!(R > 0.0)) throw DomainError("bump radius must be positive");
  double R4 = R * R * R * R;
  auto base = TestFunction::make("bump(R=" + short_number(R) + ")", [R4](const auto& P) {
    return bump_profile(h1::gauge4(P) / R4);
  }, origin_ball(R));
  if (center == Vec3{0, 0, 0}) return base;
  // centred at c: u(c^-1 o x)
  return base.translated(h1::inverse(center));
}

TestFunction poly_bump(int which, double R) {
  double R4 = R * R * R * R;
  std::string names[] = {"x*bump", "(xy+t)*bump", "(x^2-t)*bump"};
  if (which < 0 || which > 2) throw DomainError("poly_bump index must be 0..2");
  return TestFunction::make(names[which], [R4, which, R](const auto& P) {
    using T = std::decay_t<decltype(P[0])>;
    T x = P[0] / R, y = P[1] / R, t = P[2] / (R * R);
    T poly = which == 0 ? x : which == 1 ? T(x * y + t) : T(x * x - t);
    return poly * bump_profile(h1::gauge4(P) / R4);
  }, origin_ball(R));
}

TestFunction oscillatory_bump(double omega, double R) {
  double R4 = R * R * R * R;
  return TestFunction::make("sin(" + short_number(omega) + "x)*bump", [R4, omega, R](const auto& P) {
    return jm::sin(omega * P[0] / R) * bump_profile(h1::gauge4(P) / R4);
  }, origin_ball(R));
}

TestFunction anisotropic_bump(double R, double elongation) {
  if (!(elongation > 0.0 && elongation <= 1.0)) throw DomainError("elongation must lie in (0,1]");
  // |z|^4/R^4 + 16 t^2/(e^2 R^4) with e <= 1 keeps the support inside B(0,R)
  // while stretching the profile along t relative to its horizontal width.
  double R4 = R * R * R * R;
  double wz = 1.0 / (elongation * elongation);
  return TestFunction::make("aniso-bump(e=" + short_number(elongation) + ")", [R4, wz](const auto& P) {
    using T = std::decay_t<decltype(P[0])>;
    T z2 = P[0] * P[0] + P[1] * P[1];
    T s = (wz * wz * (z2 * z2) + 16.0 * (P[2] * P[2])) / R4;
    return bump_profile(s);
  }, origin_ball(R));
}

TestFunction gaussian() {
  return TestFunction::make("gaussian", [](const auto& P) { return jm::exp(-h1::gauge4(P)); });
}

TestFunction polynomial(const std::string& name) {
  using std::string;
  if (name == "1") return TestFunction::make(name, [](const auto& P) { return 1.0 + 0.0 * P[0]; });
  if (name == "x") return TestFunction::make(name, [](const auto& P) { return P[0]; });
  if (name == "y") return TestFunction::make(name, [](const auto& P) { return P[1]; });
  if (name == "t") return TestFunction::make(name, [](const auto& P) { return P[2]; });
  if (name == "x2+y2") return TestFunction::make(name, [](const auto& P) { return P[0] * P[0] + P[1] * P[1]; });
  if (name == "xt") return TestFunction::make(name, [](const auto& P) { return P[0] * P[2]; });
  if (name == "x3") return TestFunction::make(name, [](const auto& P) { return P[0] * P[0] * P[0]; });
  if (name == "harmonic3")
    return TestFunction::make(name, [](const auto& P) { return P[0] * P[0] * P[0] - 3.0 * P[0] * P[1] * P[1]; });
  if (name == "sinx_cost")
    return TestFunction::make(name, [](const auto& P) { return jm::sin(P[0]) * jm::cos(P[2]); });
  throw DomainError("unknown corpus polynomial: " + name);
}

std::vector<TestFunction> compact(double R) {
  std::vector<TestFunction> out;
  out.push_back(gauge_bump(R));
  out.push_back(gauge_bump(0.5 * R, {0.25 * R, -0.2 * R, 0.05 * R * R}).with_id("shifted-bump"));
  for (int w = 0; w < 3; ++w) out.push_back(poly_bump(w, R));
  for (double omega : {2.0, 4.0, 8.0}) out.push_back(oscillatory_bump(omega, R));
  out.push_back(anisotropic_bump(R, 0.6));
  return out;
}

}  // namespace carnot::corpus
