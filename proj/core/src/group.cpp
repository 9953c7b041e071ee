#include "carnot/group.hpp"

#include <algorithm>
#include <cstdint>
#include <numbers>
#include <queue>
#include <sstream>
#include <unordered_map>

#include "carnot/errors.hpp"

namespace carnot {

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  auto e = s.find_last_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

int CarnotGroup::homogeneous_dimension() const {
  int sum = 0;
  for (int a : alpha) sum += a;
  return sum;
}

double CarnotGroup::unit_ball_volume() const {
  validate();
  // Column of B(0,1) over horizontal offset z has t-length sqrt(1-|z|^4)/2;
  // integrate that over the unit disk with a midpoint rule.
  static const double cached = [] {
    const int n = 2048;
    const double h = 2.0 / n;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      double x = -1.0 + (i + 0.5) * h;
      double row = 0.0;
      for (int j = 0; j < n; ++j) {
        double y = -1.0 + (j + 0.5) * h;
        double s2 = x * x + y * y;
        if (s2 < 1.0) row += 0.5 * std::sqrt(1.0 - s2 * s2);
      }
      sum += row;
    }
    return sum * h * h;
  }();
  return cached;
}

void CarnotGroup::validate() const {
  if (n != 3 || q != 2 || s != 2 || alpha != std::vector<int>{1, 1, 2} || gauge_constant != 16.0)
    throw StructuralError("only the first Heisenberg group (n=3, q=2, s=2, alpha=1,1,2, gauge 16) is supported");
}

std::string CarnotGroup::to_config() const {
  std::ostringstream out;
  out << "name=" << name << "\n"
      << "n=" << n << "\n"
      << "q=" << q << "\n"
      << "s=" << s << "\n"
      << "alpha=";
  for (size_t i = 0; i < alpha.size(); ++i) out << (i ? "," : "") << alpha[i];
  out << "\n"
      << "gauge_constant=" << gauge_constant << "\n";
  return out.str();
}

CarnotGroup CarnotGroup::from_config(std::string_view text) {
  CarnotGroup g;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw StructuralError("group config line without '=': " + line);
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "name") {
        g.name = value;
      } else if (key == "n") {
        g.n = std::stoi(value);
      } else if (key == "q") {
        g.q = std::stoi(value);
      } else if (key == "s") {
        g.s = std::stoi(value);
      } else if (key == "gauge_constant") {
        g.gauge_constant = std::stod(value);
      } else if (key == "alpha") {
        g.alpha.clear();
        std::istringstream items(value);
        std::string item;
        while (std::getline(items, item, ',')) g.alpha.push_back(std::stoi(trim(item)));
      } else {
        throw StructuralError("unknown group config key: " + key);
      }
    } catch (const std::logic_error& e) {
      if (dynamic_cast<const StructuralError*>(&e)) throw;
      throw StructuralError("bad value for group config key " + key + ": " + value);
    }
  }
  g.validate();
  return g;
}

const CarnotGroup& heisenberg() {
  static const CarnotGroup g{"H1", 3, 2, 2, {1, 1, 2}, 16.0};
  return g;
}

GroupPoint::GroupPoint(double x, double y, double t) : GroupPoint(Vec3{x, y, t}) {}

GroupPoint::GroupPoint(const Vec3& c) : c_(c) {
  for (double v : c_)
    if (!std::isfinite(v)) throw DomainError("group point coordinates must be finite");
}

GroupPoint GroupPoint::from(std::span<const double> coords) {
  if (coords.size() != 3) throw StructuralError("H1 points have 3 coordinates");
  return GroupPoint(Vec3{coords[0], coords[1], coords[2]});
}

GroupPoint compose(const GroupPoint& a, const GroupPoint& b) {
  return GroupPoint(h1::compose(a.coords(), b.coords()));
}

GroupPoint inverse(const GroupPoint& a) { return GroupPoint(h1::inverse(a.coords())); }

GroupPoint dilate(double lambda, const GroupPoint& a) {
  if (!(lambda > 0.0)) throw DomainError("dilation factor must be positive");
  return GroupPoint(h1::dilate(lambda, a.coords()));
}

double gauge_norm(const GroupPoint& a) { return h1::gauge(a.coords()); }

double quasi_distance(const GroupPoint& a, const GroupPoint& b) {
  return h1::distance(a.coords(), b.coords());
}

Ball::Ball(GroupPoint c, double r) : center(c), radius(r) {
  if (!(r > 0.0) || !std::isfinite(r)) throw DomainError("ball radius must be positive");
}

bool Ball::contains(const Vec3& p) const {
  double r2 = radius * radius;
  return h1::gauge4(h1::compose(h1::inverse(center.coords()), p)) < r2 * r2;
}

double Ball::exact_volume() const {
  return heisenberg().unit_ball_volume() * std::pow(radius, 4);
}

bool Box::contains(const Vec3& p) const {
  for (int a = 0; a < 3; ++a)
    if (p[a] < lo[a] || p[a] > hi[a]) return false;
  return true;
}

bool Box::contains(const Box& o) const {
  for (int a = 0; a < 3; ++a)
    if (o.lo[a] < lo[a] || o.hi[a] > hi[a]) return false;
  return true;
}

Box Box::around(const Ball& b) {
  const Vec3& c = b.center.coords();
  double r = b.radius;
  double tz = 0.5 * r * std::hypot(c[0], c[1]) + 0.25 * r * r;
  return {{c[0] - r, c[1] - r, c[2] - tz}, {c[0] + r, c[1] + r, c[2] + tz}};
}

namespace {

struct LatticeNode {
  int64_t i, j, k;
};

uint64_t pack(int64_t i, int64_t j, int64_t k) {
  return (static_cast<uint64_t>(i + (1 << 20)) << 43) | (static_cast<uint64_t>(j + (1 << 20)) << 22) |
         static_cast<uint64_t>(k + (1 << 21));
}

}  // namespace

double cc_distance_approx(const GroupPoint& a, const GroupPoint& b, int resolution, const Box& box) {
  if (resolution < 16) throw DomainError("cc_distance_approx needs resolution >= 16");
  if (!box.contains(a.coords()) || !box.contains(b.coords()))
    throw DomainError("cc_distance_approx endpoints must lie in the box");
  const double h = (box.hi[0] - box.lo[0]) / resolution;
  const double ht = 0.5 * h * h;

  // Work in coordinates left-translated by a^-1; lattice point (i,j,k) is a o (ih, jh, k h^2/2).
  Vec3 target = h1::compose(h1::inverse(a.coords()), b.coords());
  const int64_t ti = std::llround(target[0] / h);
  const int64_t tj = std::llround(target[1] / h);
  const int64_t tk = std::llround(target[2] / ht);
  const int64_t span = (int64_t{1} << 20) - 4;
  if (std::abs(ti) > span || std::abs(tj) > span || std::abs(tk) > (int64_t{1} << 21) - 4)
    throw DomainError("cc_distance_approx: lattice too fine for the requested pair");
  if (ti == 0 && tj == 0 && tk == 0) return 0.0;

  auto heuristic = [&](int64_t i, int64_t j, int64_t k) {
    double di = static_cast<double>(ti - i), dj = static_cast<double>(tj - j);
    double dk = static_cast<double>(tk - k - (i * tj - j * ti));
    double z = std::hypot(di, dj);
    return h * std::max(z, 2.0 * std::sqrt(std::numbers::pi * std::abs(dk) / 2.0) - z);
  };
  auto inside = [&](int64_t i, int64_t j, int64_t k) {
    Vec3 p = h1::compose(a.coords(), Vec3{i * h, j * h, k * ht});
    return box.contains(p);
  };

  static const std::array<std::array<int, 2>, 16> moves = {{{1, 0}, {-1, 0}, {0, 1}, {0, -1},
                                                            {1, 1}, {1, -1}, {-1, 1}, {-1, -1},
                                                            {2, 1}, {2, -1}, {-2, 1}, {-2, -1},
                                                            {1, 2}, {1, -2}, {-1, 2}, {-1, -2}}};
  std::array<double, 16> cost{};
  for (int m = 0; m < 16; ++m) cost[m] = h * std::hypot(moves[m][0], moves[m][1]);

  struct Entry {
    double f, g;
    int64_t i, j, k;
    bool operator>(const Entry& o) const { return f > o.f || (f == o.f && g < o.g); }
  };
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  std::unordered_map<uint64_t, double> best;
  best.reserve(1 << 16);
  best[pack(0, 0, 0)] = 0.0;
  open.push({heuristic(0, 0, 0), 0.0, 0, 0, 0});
  const size_t cap = 40'000'000;
  size_t expanded = 0;
  while (!open.empty()) {
    Entry e = open.top();
    open.pop();
    if (e.g > best[pack(e.i, e.j, e.k)]) continue;
    if (e.i == ti && e.j == tj && e.k == tk) return e.g;
    if (++expanded > cap) throw DomainError("cc_distance_approx: search budget exhausted");
    for (int m = 0; m < 16; ++m) {
      int64_t di = moves[m][0], dj = moves[m][1];
      int64_t ni = e.i + di, nj = e.j + dj, nk = e.k + (e.i * dj - e.j * di);
      if (std::abs(ni) > span || std::abs(nj) > span || std::abs(nk) > (int64_t{1} << 21) - 4) continue;
      double g = e.g + cost[m];
      uint64_t key = pack(ni, nj, nk);
      auto it = best.find(key);
      if (it != best.end() && it->second <= g) continue;
      if (!inside(ni, nj, nk)) continue;
      best[key] = g;
      open.push({g + heuristic(ni, nj, nk), g, ni, nj, nk});
    }
  }
  throw DomainError("cc_distance_approx: target unreachable inside the box");
}

}  // namespace carnot
