#include "carnot/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "carnot/suite.hpp"
#include "carnot/verify.hpp"

namespace carnot {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const std::string t = trim(v);
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
    throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
  return out;
}

long to_integer(const std::string& key, const std::string& v) {
  long out = 0;
  const std::string t = trim(v);
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
    throw ConfigError("'" + key + "' expects an integer, got '" + v + "'");
  return out;
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(key, item));
  if (out.empty()) throw ConfigError("'" + key + "' expects a nonempty list");
  return out;
}

std::string list_text(const std::vector<double>& v) {
  std::string s;
  for (size_t n = 0; n < v.size(); ++n) s += (n ? "," : "") + format_number(v[n]);
  return s;
}

const std::string kResolutionPrefix = "resolution.";

}  // namespace

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> K{
      "group",         "resolution",        "quadrature_cells",    "p",
      "k",             "R",                 "r",                   "mu",
      "matrices",      "lattice.stride",    "lattice.ratio",       "lattice.refinements",
      "amplitudes",    "loglog_scale",      "chain_radius",        "solver.tolerance",
      "solver.max_iterations", "out_dir",   "seed",                "workers"};
  return K;
}

void RunConfig::set(const std::string& raw_key, const std::string& raw_value) {
  const std::string key = trim(raw_key), v = trim(raw_value);
  auto as_int = [&] {
    const long x = to_integer(key, v);
    if (x < -1000000000L || x > 1000000000L) throw ConfigError("'" + key + "' out of range");
    return static_cast<int>(x);
  };
  if (key.rfind(kResolutionPrefix, 0) == 0) {
    const std::string check = key.substr(kResolutionPrefix.size());
    const auto& ids = check_ids();
    if (std::find(ids.begin(), ids.end(), check) == ids.end()) throw ConfigError("unknown check in key '" + key + "'");
    resolution_for[check] = as_int();
    return;
  }
  if (key == "group") group = v;
  else if (key == "resolution") resolution = as_int();
  else if (key == "quadrature_cells") quadrature_cells = as_int();
  else if (key == "p") p = to_list(key, v);
  else if (key == "k") k = to_list(key, v);
  else if (key == "R") R = to_double(key, v);
  else if (key == "r") r = to_double(key, v);
  else if (key == "mu") mu = to_double(key, v);
  else if (key == "matrices") matrices = as_int();
  else if (key == "lattice.stride") lattice_stride = to_double(key, v);
  else if (key == "lattice.ratio") lattice_ratio = to_double(key, v);
  else if (key == "lattice.refinements") lattice_refinements = as_int();
  else if (key == "amplitudes") amplitudes = to_list(key, v);
  else if (key == "loglog_scale") loglog_scale = to_double(key, v);
  else if (key == "chain_radius") chain_radius = to_double(key, v);
  else if (key == "solver.tolerance") solver_tolerance = to_double(key, v);
  else if (key == "solver.max_iterations") solver_max_iterations = as_int();
  else if (key == "out_dir") out_dir = v;
  else if (key == "seed") {
    const long x = to_integer(key, v);
    if (x < 0 || x > 0xffffffffL) throw ConfigError("'seed' must fit in 32 unsigned bits");
    seed = static_cast<unsigned>(x);
  } else if (key == "workers") workers = as_int();
  else throw ConfigError("unknown key '" + key + "'");
}

RunConfig RunConfig::parse(const std::string& text) {
  RunConfig cfg;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    try {
      cfg.set(t.substr(0, eq), t.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void RunConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (group != "H1") fail("only the Heisenberg group H1 is implemented");
  if (resolution < 24) fail("resolution must be at least 24");
  for (const auto& [c, n] : resolution_for)
    if (n < 24) fail("resolution." + c + " must be at least 24");
  if (quadrature_cells < 4) fail("quadrature_cells must be at least 4");
  for (double x : p)
    if (!(x > 1.0)) fail("every p must exceed 1");
  for (double x : k)
    if (!(x >= 2.0)) fail("every k must be at least 2");
  for (size_t n = 1; n < k.size(); ++n)
    if (!(k[n] > k[n - 1])) fail("k must increase");
  if (!(R > 0.0) || !(r > 0.0)) fail("radii must be positive");
  if (!(mu > 0.0 && mu <= 1.0)) fail("mu must lie in (0, 1]");
  if (matrices < 0) fail("matrices must be nonnegative");
  if (!(lattice_stride > 0.0 && lattice_stride <= 1.0)) fail("lattice.stride must lie in (0, 1]");
  if (!(lattice_ratio > 1.0)) fail("lattice.ratio must exceed 1");
  if (lattice_refinements < 0 || lattice_refinements > 3) fail("lattice.refinements must lie in 0..3");
  for (size_t n = 0; n < amplitudes.size(); ++n) {
    if (!(amplitudes[n] > 0.0 && amplitudes[n] <= 1.0 - mu)) fail("amplitudes must lie in (0, 1 - mu]");
    if (n > 0 && !(amplitudes[n] > amplitudes[n - 1])) fail("amplitudes must increase");
  }
  if (!(loglog_scale > 0.0)) fail("loglog_scale must be positive");
  if (!(chain_radius > 0.0)) fail("chain_radius must be positive");
  if (!(solver_tolerance > 0.0 && solver_tolerance < 1.0)) fail("solver.tolerance must lie in (0, 1)");
  if (solver_max_iterations < 1) fail("solver.max_iterations must be positive");
  if (out_dir.empty()) fail("out_dir must not be empty");
  if (workers < 1 || workers > 256) fail("workers must lie in 1..256");
}

int RunConfig::resolution_of(const std::string& check) const {
  auto it = resolution_for.find(check);
  return it == resolution_for.end() ? resolution : it->second;
}

std::filesystem::path RunConfig::output_dir() const {
  if (const char* env = std::getenv("CARNOT_OUT_DIR"); env && *env) return env;
  return out_dir;
}

std::string RunConfig::to_text() const {
  std::ostringstream os;
  os << "group = " << group << "\n"
     << "resolution = " << resolution << "\n";
  for (const auto& [c, n] : resolution_for) os << kResolutionPrefix << c << " = " << n << "\n";
  os << "quadrature_cells = " << quadrature_cells << "\n"
     << "p = " << list_text(p) << "\n"
     << "k = " << list_text(k) << "\n"
     << "R = " << format_number(R) << "\n"
     << "r = " << format_number(r) << "\n"
     << "mu = " << format_number(mu) << "\n"
     << "matrices = " << matrices << "\n"
     << "lattice.stride = " << format_number(lattice_stride) << "\n"
     << "lattice.ratio = " << format_number(lattice_ratio) << "\n"
     << "lattice.refinements = " << lattice_refinements << "\n"
     << "amplitudes = " << list_text(amplitudes) << "\n"
     << "loglog_scale = " << format_number(loglog_scale) << "\n"
     << "chain_radius = " << format_number(chain_radius) << "\n"
     << "solver.tolerance = " << format_number(solver_tolerance) << "\n"
     << "solver.max_iterations = " << solver_max_iterations << "\n"
     << "out_dir = " << out_dir << "\n"
     << "seed = " << seed << "\n"
     << "workers = " << workers << "\n";
  return os.str();
}

}  // namespace carnot
