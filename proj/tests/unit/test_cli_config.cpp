#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "carnot/config.hpp"
#include "carnot/suite.hpp"
#include "doctest.h"

using namespace carnot;

TEST_CASE("defaults validate") {
  RunConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.resolution == 64);
  CHECK(cfg.k == std::vector<double>{8, 16, 32, 64});
  CHECK(primary_p(cfg) == 2.0);
}

TEST_CASE("parse reads keys, lists, comments and per-check resolution") {
  const auto cfg = RunConfig::parse(
      "# comment\n"
      "resolution = 48\n"
      "resolution.lemma2 = 96\n"
      "p = 1.2, 4\n"
      "  seed=7  \n"
      "\n"
      "solver.tolerance = 1e-10\n");
  CHECK(cfg.resolution == 48);
  CHECK(cfg.resolution_of("lemma2") == 96);
  CHECK(cfg.resolution_of("bb1") == 48);
  CHECK(cfg.p == std::vector<double>{1.2, 4.0});
  CHECK(cfg.seed == 7);
  CHECK(cfg.solver_tolerance == 1e-10);
}

TEST_CASE("unknown keys and bad values are rejected") {
  CHECK_THROWS_AS(RunConfig::parse("colour = red\n"), ConfigError);
  CHECK_THROWS_AS(RunConfig::parse("resolution.nothing = 32\n"), ConfigError);
  CHECK_THROWS_AS(RunConfig::parse("resolution = 4x\n"), ConfigError);
  CHECK_THROWS_AS(RunConfig::parse("p = \n"), ConfigError);
  CHECK_THROWS_AS(RunConfig::parse("seed = -1\n"), ConfigError);
  CHECK_THROWS_AS(RunConfig::parse("no equals sign\n"), ConfigError);
  try {
    RunConfig::parse("R = 1\nmu = x\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("flags override file values through set") {
  auto cfg = RunConfig::parse("resolution = 48\nk = 8,16\n");
  cfg.set("resolution", "32");
  cfg.set("k", "4,8,16");
  CHECK(cfg.resolution == 32);
  CHECK(cfg.k == std::vector<double>{4, 8, 16});
  CHECK_THROWS_AS(cfg.set("bogus", "1"), ConfigError);
}

TEST_CASE("validate catches out-of-range settings") {
  auto bad = [](const std::string& key, const std::string& v) {
    RunConfig cfg;
    cfg.set(key, v);
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  };
  bad("resolution", "16");
  bad("resolution.lemma1", "8");
  bad("p", "1");
  bad("k", "16,8");
  bad("mu", "1.5");
  bad("amplitudes", "0.6");
  bad("group", "H2");
  bad("workers", "0");
  bad("lattice.ratio", "1");
}

TEST_CASE("load reads a file and reports a missing one") {
  const auto path = std::filesystem::temp_directory_path() / "carnot_cfg_test.cfg";
  {
    std::ofstream out(path);
    out << "matrices = 5\n";
  }
  CHECK(RunConfig::load(path).matrices == 5);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(RunConfig::load(path), ConfigError);
}

TEST_CASE("environment overrides the output directory") {
  RunConfig cfg;
  cfg.set("out_dir", "from-file");
  ::unsetenv("CARNOT_OUT_DIR");
  CHECK(cfg.output_dir() == "from-file");
  ::setenv("CARNOT_OUT_DIR", "/tmp/from-env", 1);
  CHECK(cfg.output_dir() == "/tmp/from-env");
  ::unsetenv("CARNOT_OUT_DIR");
}

TEST_CASE("canonical text parses back to the same config") {
  auto cfg = RunConfig::parse("resolution.thm36 = 40\np = 1.1,2.5\nloglog_scale = 0.003\nworkers = 3\n");
  const auto text = cfg.to_text();
  CHECK(RunConfig::parse(text).to_text() == text);
  for (const auto& key : RunConfig::keys()) CHECK(text.find(key + " = ") != std::string::npos);
}

TEST_CASE("suite rejects unknown checks and runs cheap ones in order") {
  RunConfig cfg;
  CHECK_THROWS_AS(run_check("nope", cfg), ConfigError);
  CHECK_THROWS_AS(run_checks({"group", "nope"}, cfg), ConfigError);
  cfg.workers = 2;
  const auto reports = run_checks({"volume", "group"}, cfg);
  REQUIRE(reports.size() == 2);
  CHECK(reports[0].check == "volume");
  CHECK(reports[1].check == "group");
  CHECK(reports[1].passed());
}
