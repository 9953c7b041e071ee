#pragma once

#include <cstdint>
#include <vector>

#include "carnot/calculus.hpp"
#include "carnot/grid.hpp"
#include "carnot/model.hpp"

namespace carnot {

// Discrete operator. `group_lattice` needs hx = hy, hx^2 / (2 ht) a positive
// integer and horizontal nodes on multiples of hx; then the group translates
// p o (+-h v, 0) of a node are nodes and the operator is a weighted graph
// Laplacian, so the discrete maximum principle holds exactly. `averaged` works
// on any grid. `automatic` picks the lattice whenever the grid allows it.
enum class Scheme { automatic, averaged, group_lattice };

struct SolverConfig {
  double tolerance = 1e-8;  // relative residual
  int max_iterations = 10000;
  bool jacobi = true;
  // Start from the data's own interior values instead of zero.
  bool warm_start = true;
  Scheme scheme = Scheme::automatic;
  void validate() const;
};

struct SolveDiagnostics {
  int iterations = 0;
  double residual = 0.0;  // relative, recomputed from the final iterate
  double energy = 0.0;
};

// Lbar h = g in the ball, h = boundary outside the interior node set
// {node : d(center, node) < r}.
struct DiscreteDirichletProblem {
  Ball ball;
  EllipticMatrix abar;
  SampledFunction boundary;  // read off the non-interior nodes
  SampledFunction rhs;       // read on the interior nodes

  static DiscreteDirichletProblem make(const Ball& ball, const EllipticMatrix& abar, const GridSpec& grid,
                                       const TestFunction& data, const std::function<double(const Vec3&)>& g = {});
  const GridSpec& grid() const { return boundary.grid(); }
  // Throws DomainError unless the ball sits inside the box with a node of
  // margin and the grid has at least 24 cells across it along every axis.
  void validate() const;
};

struct DirichletSolution {
  SampledFunction solution;
  SolveDiagnostics diagnostics;
  Scheme scheme = Scheme::averaged;  // the one actually used
  std::vector<std::uint8_t> interior;
  std::vector<std::uint8_t> boundary;  // non-interior nodes the stencil reaches
};

bool group_lattice_compatible(const GridSpec& grid);
// Group-lattice grid around the ball with `cells` x-cells across its diameter.
GridSpec group_lattice_grid(const Ball& ball, int cells);

std::vector<std::uint8_t> interior_mask(const GridSpec& grid, const Ball& ball);
std::vector<std::uint8_t> boundary_layer(const DiscreteDirichletProblem& prob, Scheme scheme = Scheme::automatic);

// Discrete energy times the cell volume: half the sum of squared horizontal
// differences over the stencil terms touching the interior, plus the sum of
// g U over the interior. With the lattice scheme a term is w (U(q) - U(p))^2 / h^2
// per lattice edge; otherwise the orientation-averaged abar_ij X_i U X_j U.
double dirichlet_energy(const DiscreteDirichletProblem& prob, const SampledFunction& u,
                        Scheme scheme = Scheme::automatic);

// Minimiser of the energy by conjugate gradients. Throws ConvergenceError at the iteration cap.
DirichletSolution solve_dirichlet(const DiscreteDirichletProblem& prob, const SolverConfig& cfg = {});

// Solution of Lbar h = 0 in the ball with h = u outside it.
SampledFunction harmonic_replacement(const TestFunction& u, const Ball& ball, const EllipticMatrix& abar,
                                     const GridSpec& grid, const SolverConfig& cfg = {});

struct MaxPrincipleReport {
  double boundary_min = 0.0;
  double boundary_max = 0.0;
  double interior_min = 0.0;
  double interior_max = 0.0;
  double violation = 0.0;  // max(0, boundary_min - interior_min, interior_max - boundary_max)
};
MaxPrincipleReport max_principle_check(const SampledFunction& h, const std::vector<std::uint8_t>& interior,
                                       const std::vector<std::uint8_t>& boundary);
MaxPrincipleReport max_principle_check(const DirichletSolution& s);

}  // namespace carnot
