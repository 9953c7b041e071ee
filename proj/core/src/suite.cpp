#include "carnot/suite.hpp"

#include <algorithm>
#include <cmath>
#include <future>

#include "carnot/checks.hpp"

namespace carnot {

namespace {

// Grid size of a check with its own built-in default.
int own_resolution(const RunConfig& cfg, const std::string& id, int builtin) {
  auto it = cfg.resolution_for.find(id);
  return it == cfg.resolution_for.end() ? builtin : it->second;
}

SolverConfig solver_of(const RunConfig& cfg) {
  SolverConfig s;
  s.tolerance = cfg.solver_tolerance;
  s.max_iterations = cfg.solver_max_iterations;
  return s;
}

VerifyConfig verify_config(const RunConfig& cfg, const std::string& id) {
  VerifyConfig v;
  v.resolution = cfg.resolution_of(id);
  v.quadrature_cells = cfg.quadrature_cells;
  v.seed = cfg.seed;
  v.solver = solver_of(cfg);
  return v;
}

EllipticMatrix model_matrix(const RunConfig& cfg) { return sample_matrices(1, cfg.mu, cfg.seed).back(); }

BallFamily family(const RunConfig& cfg, double r_min, double r_max) {
  auto f = BallFamily::geometric(r_min, r_max, cfg.lattice_ratio, cfg.lattice_stride);
  for (int n = 0; n < cfg.lattice_refinements; ++n) f = f.refined();
  return f;
}

// One report from several runs of a check at different exponents.
VerificationReport merge(const std::string& id, const std::vector<std::pair<double, VerificationReport>>& runs) {
  VerificationReport out;
  out.check = id;
  std::vector<double> ps;
  std::vector<VerificationReport> parts;
  for (const auto& [p, r] : runs) {
    ps.push_back(p);
    parts.push_back(r);
    const std::string tag = "p=" + format_number(p) + ":";
    for (const auto& [k, v] : r.params) out.param(tag + k, v);
    for (auto m : r.measurements) {
      m.subject = tag + m.subject;
      out.measurements.push_back(std::move(m));
    }
    for (const auto& n : r.notes) out.notes.push_back(tag + n);
    out.runtime_seconds += r.runtime_seconds;
    if (r.constant) out.constant = std::max(out.constant.value_or(0.0), *r.constant);
  }
  out.param("p", ps);
  Verdict v = Verdict::pass;
  for (const auto& r : parts) {
    if (r.verdict == Verdict::fail) v = Verdict::fail;
    else if (r.verdict == Verdict::inconclusive && v == Verdict::pass) v = Verdict::inconclusive;
  }
  out.verdict = v;
  out.validate();
  return out;
}

VerificationReport run_one(const std::string& id, const RunConfig& cfg) {
  const double p = primary_p(cfg);
  const DomainChain chain(cfg.chain_radius, 4);
  if (id == "group") return check_group(10000, cfg.seed);
  if (id == "volume") return check_volume(own_resolution(cfg, id, 64));
  if (id == "calculus") {
    const int top = own_resolution(cfg, id, 96);
    return check_calculus({top / 4, top / 2, top});
  }
  if (id == "gamma") return check_gamma(sample_matrices(cfg.matrices, cfg.mu, cfg.seed));
  if (id == "newtonian") return check_newtonian(sample_matrices(cfg.matrices, cfg.mu, cfg.seed));
  if (id == "dirichlet")
    return check_dirichlet(sample_matrices(cfg.matrices, cfg.mu, cfg.seed), own_resolution(cfg, id, 24));
  if (id == "maximal") return check_maximal(own_resolution(cfg, id, 24));
  if (id == "poincare") {
    std::vector<std::pair<double, VerificationReport>> runs;
    for (double q : cfg.p) runs.emplace_back(q, verify_poincare(corpus::compact(1.0), q));
    return merge(id, runs);
  }
  if (id == "interpolation") return verify_interpolation(corpus::compact(1.0), cfg.p, {0.1, 1.0, 10.0});
  if (id == "lemma1") {
    Lemma1Config c;
    c.Lambda = estimate_poincare(corpus::compact(1.0), 2.0).Lambda;
    c.R = std::max(9.0, 4.0 * c.Lambda * c.Lambda);
    c.resolution = cfg.resolution_of(id);
    const double R = c.R;
    std::vector<TestFunction> members{corpus::gauge_bump(1.35 * R), corpus::gauge_bump(1.25 * R, {2, 1, 3}),
                                      corpus::oscillatory_bump(0.5, 1.35 * R)};
    return verify_lemma1(sample_matrices(cfg.matrices, cfg.mu, cfg.seed), members, c);
  }
  if (id == "lemma2") {
    const auto abar = model_matrix(cfg);
    const double Lambda = estimate_poincare(corpus::compact(1.0), 2.0).Lambda;
    return verify_lemma2(abar, odd_corpus(abar), cfg.k, cfg.r, verify_config(cfg, id), Lambda);
  }
  if (id == "bb1") return verify_lemma_bb1(model_matrix(cfg), corpus::compact(1.0), p, cfg.k, cfg.r, verify_config(cfg, id));
  if (id == "lemma3") {
    const auto abar = model_matrix(cfg);
    std::vector<TestFunction> members{corpus::gauge_bump(1.0), corpus::poly_bump(1, 1.0), lbar_harmonic_cubic(abar)};
    return verify_lemma3(abar, members, p, cfg.k, cfg.r, verify_config(cfg, id));
  }
  if (id == "thm36") {
    Thm36Config c;
    c.R = cfg.R;
    c.seed = cfg.seed;
    const double eps = chain.margin(2);
    c.sharp_balls = family(cfg, eps / 16.0, eps);
    c.maximal_balls = family(cfg, cfg.R / 16.0, 2.5 * cfg.R);
    auto a = CoefficientField::loglog(cfg.amplitudes.back(), cfg.loglog_scale, cfg.mu);
    return verify_thm36(a, corpus::gauge_bump(cfg.R), p, holder_exponents(p).alpha, cfg.k.front(), chain, c);
  }
  if (id == "main") {
    MainConfig c;
    c.R = cfg.R;
    c.cells = cfg.quadrature_cells;
    std::vector<CoefficientField> fields;
    for (double amp : cfg.amplitudes) fields.push_back(CoefficientField::loglog(amp, cfg.loglog_scale, cfg.mu));
    return verify_main(fields, corpus::compact(cfg.R), p, chain, c);
  }
  throw ConfigError("unknown check '" + id + "'");
}

}  // namespace

const std::vector<std::string>& check_ids() {
  static const std::vector<std::string> ids{"group",         "volume", "calculus", "gamma",  "newtonian",
                                            "dirichlet",     "maximal", "poincare", "interpolation",
                                            "lemma1",        "lemma2", "bb1",      "lemma3", "thm36",
                                            "main"};
  return ids;
}

const std::vector<std::string>& estimate_ids() {
  static const std::vector<std::string> ids{"poincare", "interpolation", "lemma1", "lemma2",
                                            "bb1",      "lemma3",        "thm36",  "main"};
  return ids;
}

double primary_p(const RunConfig& cfg) {
  return *std::min_element(cfg.p.begin(), cfg.p.end(),
                           [](double a, double b) { return std::abs(a - 2.0) < std::abs(b - 2.0); });
}

VerificationReport run_check(const std::string& id, const RunConfig& cfg) {
  cfg.validate();
  return run_one(id, cfg);
}

std::vector<VerificationReport> run_checks(const std::vector<std::string>& ids, const RunConfig& cfg) {
  cfg.validate();
  for (const auto& id : ids)
    if (std::find(check_ids().begin(), check_ids().end(), id) == check_ids().end())
      throw ConfigError("unknown check '" + id + "'");
  std::vector<VerificationReport> out;
  for (size_t start = 0; start < ids.size(); start += cfg.workers) {
    std::vector<std::future<VerificationReport>> batch;
    for (size_t n = start; n < std::min(ids.size(), start + cfg.workers); ++n)
      batch.push_back(std::async(cfg.workers > 1 ? std::launch::async : std::launch::deferred,
                                 [&, n] { return run_one(ids[n], cfg); }));
    for (auto& f : batch) out.push_back(f.get());
  }
  return out;
}

}  // namespace carnot
