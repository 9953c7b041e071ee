#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <vector>

#include "carnot/grid.hpp"
#include "carnot/group.hpp"
#include "carnot/model.hpp"

namespace carnot {

// Nested gauge balls Omega_m = B(0, R0 (1 + m/10)) with margins
// eps_m = margin_fraction R0 (default 1/40; at most 1/20 keeps the nesting).
class DomainChain {
 public:
  DomainChain(double R0, int levels, double margin_fraction = 1.0 / 40.0);
  double base_radius() const { return R0_; }
  int levels() const { return levels_; }
  Ball domain(int m) const;
  double margin(int m) const;
  bool contains(int m, const Vec3& p) const;
  // Samples points within 2 eps_m of the boundary of Omega_m and checks they lie in Omega_{m+1}.
  bool nesting_holds(int samples = 2000, unsigned seed = 1) const;

 private:
  void check_level(int m) const;
  double R0_;
  int levels_;
  double fraction_;
};

// Finite family of balls standing in for "all balls": centres on grid nodes
// every `stride` in gauge length (t-stride stride^2/4), radii sorted ascending.
struct BallLattice {
  double stride;
  std::vector<double> radii;

  // r_min * ratio^k for all k with r_min * ratio^k <= r_max.
  static BallLattice geometric(double r_min, double r_max, double stride, double ratio = 1.25);
  // Superset lattice: half the stride, geometric midpoints inserted between radii.
  BallLattice refined() const;
  void validate() const;
  // Node strides along each axis for this grid.
  std::array<int, 3> node_strides(const GridSpec& grid) const;
};

struct MaximalConfig {
  BallLattice lattice;
  double gamma = 2.0;  // Fefferman-Stein dilation factor
  std::vector<double> p_values{1.5, 2.0, 3.0};
  void validate() const;
};

// Mean of f over the nodes of B. Throws DomainError if the ball leaves the
// grid box or holds no node.
double ball_average(const SampledFunction& f, const Ball& b);
// Mean oscillation avg_B |f - f_B|.
double ball_oscillation(const SampledFunction& f, const Ball& b);

// max over lattice balls containing x of the mean of |f|.
double hl_maximal(const SampledFunction& f, const Vec3& x, const MaximalConfig& cfg);
// sup of mean oscillation over lattice balls B(c, r) containing x with c in
// Omega_m and r <= eps_m.
double local_sharp_maximal(const SampledFunction& f, const Vec3& x, int m, const DomainChain& chain,
                           const MaximalConfig& cfg);

// Whole-grid versions; nodes not covered by any admissible ball have covered = 0.
struct MaximalField {
  SampledFunction values;
  std::vector<std::uint8_t> covered;
};
MaximalField hl_maximal_field(const SampledFunction& f, const MaximalConfig& cfg);
MaximalField local_sharp_maximal_field(const SampledFunction& f, int m, const DomainChain& chain,
                                       const MaximalConfig& cfg);

// eta_{m,f}(r): sup of mean oscillation over lattice balls centred in Omega_m
// with radius <= r that fit inside the grid box. Throws DomainError for
// r > eps_m or r below the smallest lattice radius.
double vmo_modulus(const SampledFunction& f, int m, double r, const DomainChain& chain, const MaximalConfig& cfg);
// eta at each r in rs (one pass over the lattice).
std::vector<double> vmo_profile(const SampledFunction& f, int m, const std::vector<double>& rs,
                                const DomainChain& chain, const MaximalConfig& cfg);

// Same modulus for a pointwise function: centres (i s, j s, k s^2/4) inside
// Omega_m with s the lattice stride, means by a ball quadrature with the given
// cells per axis.
std::vector<double> vmo_profile(const std::function<double(const Vec3&)>& f, int m, const std::vector<double>& rs,
                                const DomainChain& chain, const MaximalConfig& cfg, int cells = 12);

// sum_ij eta_{m, a_ij}(r), a12 counted twice.
double a_sharp(const CoefficientField& a, int m, double r, const DomainChain& chain, const MaximalConfig& cfg,
               int cells = 12);
std::vector<double> a_sharp_profile(const CoefficientField& a, int m, const std::vector<double>& rs,
                                    const DomainChain& chain, const MaximalConfig& cfg, int cells = 12);

// ||f||_{L^p(B_R)} / ||f#||_{L^p(B_{gamma R})} with f# taken at level m + 2 of
// the chain. f must have zero mean and support in B_R. Empty when f = 0.
std::optional<double> fefferman_stein_ratio(const SampledFunction& f, double R, double p, int m,
                                            const DomainChain& chain, const MaximalConfig& cfg);

// L^p norm over the nodes of a ball (node quadrature).
double lp_norm_on(const SampledFunction& f, const Ball& b, double p);

// CSV rows x,y,t,Mf,fsharp for nodes covered by both fields.
void write_maximal_csv(std::ostream& out, const MaximalField& mf, const MaximalField& sharp);

}  // namespace carnot
