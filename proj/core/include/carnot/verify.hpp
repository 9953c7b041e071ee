#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "carnot/calculus.hpp"
#include "carnot/dirichlet.hpp"
#include "carnot/maximal.hpp"
#include "carnot/model.hpp"

namespace carnot {

enum class Verdict { pass, fail, inconclusive };
const char* verdict_name(Verdict v);

// One row of a report: a subject (corpus member, sweep point) and named values.
struct Measurement {
  std::string subject;
  std::vector<std::pair<std::string, double>> values;

  Measurement& set(const std::string& key, double v);
  bool has(const std::string& key) const;
  double get(const std::string& key) const;  // StructuralError if absent
};

struct VerificationReport {
  std::string check;
  std::vector<std::pair<std::string, std::string>> params;
  std::vector<Measurement> measurements;
  std::optional<double> slope, intercept, r2, constant;
  Verdict verdict = Verdict::fail;
  std::vector<std::string> notes;
  double runtime_seconds = 0.0;  // wall clock, kept apart from the deterministic fields

  bool passed() const { return verdict == Verdict::pass; }
  void param(const std::string& key, const std::string& value);
  void param(const std::string& key, double value);
  void param(const std::string& key, const std::vector<double>& values);
  const Measurement* find(const std::string& subject) const;
  // StructuralError on any non-finite measurement or fit value.
  void validate() const;
};

// Shortest round-trip decimal text of a double; used for params and CSV.
std::string format_number(double v);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;  // 1 when the data are constant
};
// Least squares of log y on log x. Needs two points with positive values.
LineFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);
// Verdict for a fitted slope: inconclusive below the R^2 floor or with too few points.
Verdict slope_verdict(const LineFit& fit, size_t points, double lo, double hi, double r2_min = 0.9,
                      size_t min_points = 3);

// Exponents of the absorption step: alpha = 2 when p > 2, otherwise sqrt(p);
// beta = alpha / (alpha - 1); p1 = (1 + p / alpha) / 2, so 1 < p1 and alpha p1 < p.
struct HolderExponents {
  double alpha, beta, p1;
};
HolderExponents holder_exponents(double p);

struct VerifyConfig {
  int resolution = 64;        // cells per axis of the cubic Dirichlet grids
  int quadrature_cells = 24;  // cells per axis of ball quadratures
  unsigned seed = 1;
  SolverConfig solver;
  void validate() const;
};

// Cubic grid of `cells` per axis around B(0, radius): box +-1.1 r by +-0.3 r^2.
GridSpec centred_ball_grid(double radius, int cells);

// Odd members under (x, y, t) -> (-x, -y, t): their harmonic replacements have
// nonzero horizontal gradient of D^2 h at the centre. The first is Lbar-harmonic.
std::vector<TestFunction> odd_corpus(const EllipticMatrix& abar);
// x^3 - 3 x y^2 composed with phi_{A^-1}, a = A A^T: annihilated by Lbar.
TestFunction lbar_harmonic_cubic(const EllipticMatrix& abar);

// ---- Poincare and interpolation

struct PoincareEstimate {
  double Lambda = 0.0;
  double c = 0.0;
  double p = 0.0;
};

struct PoincareConfig {
  std::vector<double> lambdas{1.5, 2.0, 3.0, 4.0};
  std::vector<Ball> balls;  // empty: a default family of five balls
  double c_max = 50.0;      // a Lambda counts as working when max ratio <= c_max
  int cells = 16;
  void validate() const;
};

// Smallest Lambda of the search grid whose empirical c is finite and at most
// c_max. DomainError when none works.
PoincareEstimate estimate_poincare(const std::vector<TestFunction>& corpus, double p, const PoincareConfig& cfg = {});
// Same, with c at cells and 2 cells; passes when c moves by at most 20%.
VerificationReport verify_poincare(const std::vector<TestFunction>& corpus, double p, const PoincareConfig& cfg = {});

// ||X u|| <= eps ||X^2 u|| + (2/eps) ||u|| for X in {X1, X2}, every eps and p,
// plus the dilation check u o D(2) with eps / 2. Members need a support ball.
VerificationReport verify_interpolation(const std::vector<TestFunction>& corpus, const std::vector<double>& ps,
                                        const std::vector<double>& epsilons, int cells = 32);

// ---- Lemmas on the model operator

struct Lemma1Config {
  double R = 9.0;       // needs R >= 4 Lambda^2
  double Lambda = 1.5;  // from estimate_poincare
  int resolution = 96;
  int comparison_cells = 5;  // quadrature points of B_2 used for |h| <= w
  int quadrature_cells = 40;
  SolverConfig solver{1e-11};
  void validate() const;
};

// sup_{B1} |X_iX_jX_k h| / sum ||X_iX_j u||_{L1(B_R)} for every (abar, u).
// Also checks the affine normalisation leaves the third derivatives alone and
// the comparison |h| <= w on B_2 from the proof.
VerificationReport verify_lemma1(const std::vector<EllipticMatrix>& abars, const std::vector<TestFunction>& corpus,
                                 const Lemma1Config& cfg = {});

// osc_{B_r}(X_iX_j h) / sum avg_{B_kr}|X_iX_j u| against k; slope in [-1.5, -0.5].
VerificationReport verify_lemma2(const EllipticMatrix& abar, const std::vector<TestFunction>& corpus,
                                 const std::vector<double>& ks, double r, const VerifyConfig& cfg = {},
                                 double Lambda = 1.5);

// corpus: members supported in B(0, 1); each is used both shrunk into B_r and
// stretched over B_kr. Ratio slope must be <= 2.3; the dyadic potential bound
// |v(x)| <= c (kr)^2 M(Lbar v)(x) is checked with c = (64/3)|B1| sup|Gamma| on the unit sphere.
VerificationReport verify_lemma_bb1(const EllipticMatrix& abar, const std::vector<TestFunction>& corpus, double p,
                                    const std::vector<double>& ks, double r, const VerifyConfig& cfg = {});

// Smallest c in avg osc <= (c/k) sum avg|D^2 u| + c k^{2+Q/p} (avg |Lbar u|^p)^{1/p},
// plus the triangle inequality of the A + B + C split with the harmonic replacement.
VerificationReport verify_lemma3(const EllipticMatrix& abar, const std::vector<TestFunction>& corpus, double p,
                                 const std::vector<double>& ks, double r, const VerifyConfig& cfg = {},
                                 const Vec3& center = {0, 0, 0});

// ---- Variable coefficients

// Balls B(c, r), r in radii, centres on steps (f r, f r, (f r)^2 / 4) with
// f = stride_fraction. refined() halves f and inserts geometric mid-radii, so
// the family only grows.
struct BallFamily {
  std::vector<double> radii;
  double stride_fraction = 0.5;
  static BallFamily geometric(double r_min, double r_max, double ratio = 1.5, double stride_fraction = 0.5);
  BallFamily refined() const;
  void validate() const;
};

struct Thm36Config {
  double R = 1.0;   // u supported in B(0, R); needs R < eps_{m+2}
  int level = 0;    // m
  int samples = 8;  // points x of B_R for the pointwise bound
  BallFamily sharp_balls;    // radii <= eps_{m+2}; empty: default
  BallFamily maximal_balls;  // empty: default
  std::vector<double> ball_radii;  // radii of the per-ball split; empty: default
  int cells = 10;                  // quadrature cells per ball
  unsigned seed = 1;
  void validate() const;
};

VerificationReport verify_thm36(const CoefficientField& a, const TestFunction& u, double p, double alpha, double k,
                                const DomainChain& chain, const Thm36Config& cfg = {});

struct MainConfig {
  double R = 1.0;      // corpus supported in B(0, R)
  double gamma = 2.0;  // a# is taken at radius gamma R
  int level = 0;
  int cells = 24;      // quadrature cells; the drift check also runs 2 cells
  bool potential_member = true;  // add the Newtonian member for constant fields
  int potential_cells = 24;
  void validate() const;
};

// C_emp = max_u sum ||X_iX_j u||_p / ||L u||_p per field; fields ordered by
// growing oscillation amplitude. DomainError when (a#)^{1/(beta p1)} >= 1/2.
VerificationReport verify_main(const std::vector<CoefficientField>& fields, const std::vector<TestFunction>& corpus,
                               double p, const DomainChain& chain, const MainConfig& cfg = {});

// u = phi N(f) with f a gauge bump and N the Newtonian potential of Lbar:
// sum ||X_iX_j u||_p / ||Lbar u||_p on B(0, R) by finite differences.
double newtonian_member_ratio(const EllipticMatrix& abar, double R, double p, int cells);

// sum over entries (a12 twice) of the sup mean oscillation over balls with
// centres on the lattice (i s, j s, k s^2/4) inside B(0, reach) and Omega_m,
// radii from `radii` not above r.
double local_a_sharp(const CoefficientField& a, int m, double r, const DomainChain& chain, double reach, double stride,
                     const std::vector<double>& radii, int cells);

}  // namespace carnot
