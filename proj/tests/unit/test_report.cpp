#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "carnot/errors.hpp"
#include "carnot/report.hpp"
#include "doctest.h"

using namespace carnot;

namespace {

VerificationReport sample_report() {
  VerificationReport r;
  r.check = "sample";
  r.param("p", 1.5);
  r.param("k", std::vector<double>{8, 16});
  r.param("field", "loglog");
  r.measurements.push_back({"ball(0)@r=0.5", {{"lhs", 0.1}, {"t1", 1.0 / 3.0}}});
  r.measurements.push_back({"x,\"quoted\"", {{"c", 1e-300}}});
  r.slope = -1.0;
  r.intercept = 0.25;
  r.r2 = 0.999;
  r.verdict = Verdict::pass;
  r.notes = {"note one"};
  r.runtime_seconds = 3.5;
  return r;
}

std::string read(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("report json round trip keeps every field") {
  const auto r = sample_report();
  const auto text = report_json(r);
  const auto back = report_from_json(text);
  CHECK(back.check == r.check);
  CHECK(back.params == r.params);
  REQUIRE(back.measurements.size() == 2);
  CHECK(back.measurements[0].subject == "ball(0)@r=0.5");
  CHECK(back.measurements[0].get("t1") == r.measurements[0].get("t1"));
  CHECK(back.measurements[1].get("c") == 1e-300);
  CHECK(*back.slope == -1.0);
  CHECK(!back.constant.has_value());
  CHECK(back.verdict == Verdict::pass);
  CHECK(back.notes == r.notes);
  CHECK(report_json(back) == text);
}

TEST_CASE("report json omits wall-clock time") {
  auto a = sample_report(), b = sample_report();
  b.runtime_seconds = 99.0;
  CHECK(report_json(a) == report_json(b));
  CHECK(report_json(a).find("runtime") == std::string::npos);
  CHECK(report_json(a).find("\"schema\": 1") != std::string::npos);
}

TEST_CASE("malformed reports are structural errors") {
  CHECK_THROWS_AS(report_from_json("{"), StructuralError);
  CHECK_THROWS_AS(report_from_json("{\"schema\": 2}"), StructuralError);
  auto text = report_json(sample_report());
  text.replace(text.find("\"pass\","), 7, "\"maybe\",");
  CHECK_THROWS_AS(report_from_json(text), StructuralError);
}

TEST_CASE("non-finite values are refused") {
  auto r = sample_report();
  r.measurements[0].values[0].second = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(report_json(r), StructuralError);
}

TEST_CASE("csv is long format with quoting") {
  const auto csv = report_csv(sample_report());
  CHECK(csv.rfind("check,subject,key,value\n", 0) == 0);
  CHECK(csv.find("sample,ball(0)@r=0.5,lhs,0.1\n") != std::string::npos);
  CHECK(csv.find("sample,\"x,\"\"quoted\"\"\",c,1e-300\n") != std::string::npos);
}

TEST_CASE("combined verdicts and exit codes") {
  auto pass = sample_report(), fail = sample_report(), inc = sample_report();
  fail.verdict = Verdict::fail;
  inc.verdict = Verdict::inconclusive;
  CHECK(combine({}) == Verdict::pass);
  CHECK(combine({pass, pass}) == Verdict::pass);
  CHECK(combine({pass, inc}) == Verdict::inconclusive);
  CHECK(combine({inc, fail, pass}) == Verdict::fail);
  CHECK(exit_code(Verdict::pass) == 0);
  CHECK(exit_code(Verdict::inconclusive) == 2);
  CHECK(exit_code(Verdict::fail) == 1);
}

TEST_CASE("write_reports lays out one file pair per check") {
  const auto dir = std::filesystem::temp_directory_path() / "carnot_report_test";
  std::filesystem::remove_all(dir);
  auto a = sample_report(), b = sample_report();
  b.check = "other";
  b.verdict = Verdict::inconclusive;
  const auto written = write_reports(dir, {a, b}, "seed = 1\n");
  CHECK(written.size() == 6);
  for (const auto& p : written) CHECK(std::filesystem::exists(p));
  const auto summary = read(dir / "summary.json");
  CHECK(summary.find("\"verdict\": \"inconclusive\"") != std::string::npos);
  CHECK(summary.find("seed = 1") != std::string::npos);
  CHECK(read(dir / "timings.json").find("3.5") != std::string::npos);
  CHECK(report_from_json(read(dir / "other.json")).verdict == Verdict::inconclusive);
  std::filesystem::remove_all(dir);
}
