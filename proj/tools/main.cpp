#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "carnot/checks.hpp"
#include "carnot/dirichlet.hpp"
#include "carnot/report.hpp"
#include "carnot/suite.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace carnot;

namespace {

struct Settings {
  std::string config_file;
  std::vector<std::pair<std::string, std::string>> overrides;  // in command-line order
};

RunConfig build_config(const Settings& s) {
  RunConfig cfg = s.config_file.empty() ? RunConfig{} : RunConfig::load(s.config_file);
  for (const auto& [k, v] : s.overrides) cfg.set(k, v);
  cfg.validate();
  return cfg;
}

void print_reports(const std::vector<VerificationReport>& reports, const fs::path& dir) {
  for (const auto& r : reports) {
    std::cout << r.check << ": " << verdict_name(r.verdict);
    if (r.slope) std::cout << "  slope " << format_number(*r.slope) << "  r2 " << format_number(r.r2.value_or(0));
    if (r.constant) std::cout << "  constant " << format_number(*r.constant);
    std::cout << "\n";
    for (const auto& n : r.notes) std::cout << "  " << n << "\n";
  }
  std::cout << "overall: " << verdict_name(combine(reports)) << "  (reports in " << dir.string() << ")\n";
}

int emit(const std::vector<VerificationReport>& reports, const RunConfig& cfg) {
  const fs::path dir = cfg.output_dir();
  write_reports(dir, reports, cfg.to_text());
  print_reports(reports, dir);
  return exit_code(combine(reports));
}

int run_suite(const std::vector<std::string>& ids, const Settings& s) {
  const RunConfig cfg = build_config(s);
  return emit(run_checks(ids, cfg), cfg);
}

// Dirichlet problem on B(0, R) with the fundamental solution of a pole outside
// the ball as data, so the discrete solution has a known limit.
int run_solve(const Settings& s, int cells, int matrix_index) {
  const RunConfig cfg = build_config(s);
  const auto abars = sample_matrices(cfg.matrices, cfg.mu, cfg.seed);
  if (matrix_index < 0 || matrix_index >= static_cast<int>(abars.size()))
    throw ConfigError("--matrix must lie in 0.." + std::to_string(abars.size() - 1));
  const auto& a = abars[matrix_index];
  const Ball ball{{0, 0, 0}, cfg.R};
  const FundamentalSolution G(a);
  const Vec3 pole{1.3 * cfg.R, 0.2 * cfg.R, 0.1 * cfg.R * cfg.R};
  const GridSpec g = group_lattice_grid(ball, cells);
  auto data = SampledFunction::sample(g, [&](const Vec3& q) { return G(h1::compose(h1::inverse(pole), q)); });
  SolverConfig sc;
  sc.tolerance = cfg.solver_tolerance;
  sc.max_iterations = cfg.solver_max_iterations;
  const auto sol = solve_dirichlet({ball, a, data, SampledFunction(g, 0.0)}, sc);

  double err = 0.0, scale = 0.0;
  for (size_t n = 0; n < g.size(); ++n)
    if (sol.interior[n]) {
      err = std::max(err, std::abs(sol.solution[n] - data[n]));
      scale = std::max(scale, std::abs(data[n]));
    }
  const auto mp = max_principle_check(sol);

  VerificationReport rep;
  rep.check = "solve";
  rep.param("R", cfg.R);
  rep.param("cells", cells);
  rep.param("matrix", matrix_index);
  rep.param("scheme", sol.scheme == Scheme::group_lattice ? "group_lattice" : "averaged");
  rep.measurements.push_back(Measurement{"solution", {}}
                                 .set("iterations", sol.diagnostics.iterations)
                                 .set("residual", sol.diagnostics.residual)
                                 .set("energy", sol.diagnostics.energy)
                                 .set("max_error", err)
                                 .set("relative_error", scale > 0 ? err / scale : 0.0)
                                 .set("max_principle_violation", mp.violation));
  rep.verdict = sol.diagnostics.residual <= sc.tolerance && mp.violation <= 1e-6 ? Verdict::pass : Verdict::fail;

  const fs::path dir = cfg.output_dir();
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "solve.grid", std::ios::binary);
    sol.solution.dump(out);
  }
  {
    std::ofstream out(dir / "solve_slice.csv");
    sol.solution.write_slice_csv(out, g.n[2] / 2);
  }
  rep.notes.push_back("grid dump in solve.grid, midplane slice in solve_slice.csv");
  return emit({rep}, cfg);
}

int run_corpus(const Settings& s) {
  const RunConfig cfg = build_config(s);
  const auto abars = sample_matrices(cfg.matrices, cfg.mu, cfg.seed);
  const std::vector<Vec3> probes{{0, 0, 0}, {0.3, -0.2, 0.1}, {-0.5, 0.4, -0.2}};
  nlohmann::ordered_json j;
  j["schema"] = kReportSchema;
  auto describe = [&](const std::vector<TestFunction>& members) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& u : members) {
      nlohmann::ordered_json m;
      m["id"] = u.id();
      m["support_radius"] = u.support() ? nlohmann::ordered_json(u.support()->radius) : nlohmann::ordered_json(nullptr);
      auto vals = nlohmann::ordered_json::array();
      for (const auto& p : probes) vals.push_back(u(p));
      m["values"] = vals;
      arr.push_back(m);
      std::cout << u.id() << "\n";
    }
    return arr;
  };
  j["compact"] = describe(corpus::compact(cfg.R));
  j["odd"] = describe(odd_corpus(abars.back()));
  auto mats = nlohmann::ordered_json::array();
  for (const auto& a : abars) mats.push_back({a(0, 0), a(0, 1), a(1, 1)});
  j["matrices"] = mats;
  const fs::path dir = cfg.output_dir();
  fs::create_directories(dir);
  std::ofstream(dir / "corpus.json") << j.dump(2) << "\n";
  return 0;
}

// Re-reads the reports in the output directory and recomputes the summary.
int run_report(const Settings& s) {
  const RunConfig cfg = build_config(s);
  const fs::path dir = cfg.output_dir();
  if (!fs::is_directory(dir)) throw ConfigError("no report directory " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (e.path().extension() == ".json" && name != "summary.json" && name != "timings.json" && name != "corpus.json")
      files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ConfigError("no reports in " + dir.string());
  std::vector<VerificationReport> reports;
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    reports.push_back(report_from_json(ss.str()));
  }
  std::ofstream(dir / "summary.json", std::ios::binary) << summary_json(reports, cfg.to_text());
  print_reports(reports, dir);
  return exit_code(combine(reports));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical checks of Lp estimates for Heisenberg-group operators"};
  app.require_subcommand(1);
  Settings s;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", s.config_file, "key = value config file")->check(CLI::ExistingFile);
    auto flag = [&](const std::string& name, const std::string& key, const std::string& help) {
      sub->add_option_function<std::string>(
          name, [&s, key](const std::string& v) { s.overrides.emplace_back(key, v); }, help);
    };
    flag("--resolution", "resolution", "grid cells per axis");
    flag("--p", "p", "comma separated exponents");
    flag("--k", "k", "comma separated ball ratios");
    flag("--R", "R", "support radius");
    flag("--r", "r", "inner radius");
    flag("--mu", "mu", "ellipticity");
    flag("--matrices", "matrices", "random matrices besides the identity");
    flag("--seed", "seed", "random seed");
    flag("--out", "out_dir", "output directory");
    flag("--workers", "workers", "checks run at once");
    sub->add_option_function<std::vector<std::string>>(
        "--set",
        [&s](const std::vector<std::string>& items) {
          for (const auto& item : items) {
            const auto eq = item.find('=');
            if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + item + "'");
            s.overrides.emplace_back(item.substr(0, eq), item.substr(eq + 1));
          }
        },
        "any config key, as key=value");
  };

  std::vector<std::string> verify_ids;
  int solve_cells = 32, solve_matrix = 0;
  std::function<int()> action;

  auto suite_cmd = [&](const std::string& name, const std::string& help, std::vector<std::string> ids) {
    auto* sub = app.add_subcommand(name, help);
    add_common(sub);
    sub->callback([&, ids] { action = [&, ids] { return run_suite(ids, s); }; });
  };
  suite_cmd("group-check", "group law, gauge and volume checks", {"group", "volume"});
  suite_cmd("calculus-check", "vector field identities and difference orders", {"calculus"});
  suite_cmd("maximal", "maximal function and sharp function checks", {"maximal"});
  suite_cmd("gamma-check", "fundamental solution and Newtonian potential", {"gamma", "newtonian"});

  auto* verify = app.add_subcommand("verify", "run checks by id, or all");
  add_common(verify);
  verify->add_option("ids", verify_ids, "check ids or 'all'")->required();
  verify->callback([&] {
    action = [&] {
      std::vector<std::string> ids;
      for (const auto& id : verify_ids) {
        if (id == "all") ids.insert(ids.end(), check_ids().begin(), check_ids().end());
        else if (std::find(check_ids().begin(), check_ids().end(), id) != check_ids().end()) ids.push_back(id);
        else throw ConfigError("unknown check '" + id + "'");
      }
      return run_suite(ids, s);
    };
  });

  auto* solve = app.add_subcommand("solve", "Dirichlet problem with fundamental-solution data; dumps the grid");
  add_common(solve);
  solve->add_option("--cells", solve_cells, "x-cells across the ball")->check(CLI::Range(24, 512));
  solve->add_option("--matrix", solve_matrix, "0 is the identity, then the sampled matrices");
  solve->callback([&] { action = [&] { return run_solve(s, solve_cells, solve_matrix); }; });

  auto* corpus_cmd = app.add_subcommand("corpus", "write the test-function corpus to corpus.json");
  add_common(corpus_cmd);
  corpus_cmd->callback([&] { action = [&] { return run_corpus(s); }; });

  auto* report = app.add_subcommand("report", "summarise the reports already in the output directory");
  add_common(report);
  report->callback([&] { action = [&] { return run_report(s); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }
  try {
    return action();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
  }
  return 1;
}
