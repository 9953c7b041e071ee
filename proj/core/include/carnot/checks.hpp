#pragma once

#include <vector>

#include "carnot/verify.hpp"

namespace carnot {

// Reports for the lower modules, in the same form as the estimate checks.

// Associativity, inverse, dilation automorphism and gauge homogeneity over
// random samples; each relative error must stay at or below 1e-12.
VerificationReport check_group(int samples = 10000, unsigned seed = 1);

// |B(0, 2r)| / |B(0, r)| = 2^Q within 1% for r in {0.5, 1} at spacing r / divisor,
// and volume unchanged within 1% by a left translation.
VerificationReport check_volume(int divisor = 64);

// [X1, X2] = d/dt on the corpus within 1e-10; L2 errors of the FD fields over
// three grids, observed orders >= 1.9 for the analytic members.
VerificationReport check_calculus(const std::vector<int>& cells = {24, 48, 96});

// Gamma: exact degree -2 homogeneity, Gamma <= 0, and the FD residual of
// Lbar Gamma away from the pole shrinking by a factor in [3, 5] per halving of h.
VerificationReport check_gamma(const std::vector<EllipticMatrix>& abars);

// Newtonian potential: far field of a mollified point mass within 2% of
// mass * Gamma, and ||Lbar u - f|| / ||f|| decreasing over three grids.
VerificationReport check_newtonian(const std::vector<EllipticMatrix>& abars);

// Dirichlet solver: constant and affine data reproduced to 1e-8, maximum
// principle violation <= 1e-6 over the corpus, Gamma data error decreasing.
VerificationReport check_dirichlet(const std::vector<EllipticMatrix>& abars, int cells = 24);

// Maximal operators on a sampled corpus: refining the lattice never lowers M
// and moves its L2 ratio by at most 15%; constants have zero oscillation and
// a#, and the log-log modulus decays.
VerificationReport check_maximal(int cells = 24);

// The identity and `count` random matrices of ellipticity mu.
std::vector<EllipticMatrix> sample_matrices(int count, double mu, unsigned seed);

}  // namespace carnot
