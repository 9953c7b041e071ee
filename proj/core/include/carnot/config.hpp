#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "carnot/errors.hpp"

namespace carnot {

class ConfigError : public StructuralError {
 public:
  using StructuralError::StructuralError;
};

// Flat key = value settings for a run. Lines starting with '#' are comments;
// lists are comma separated. Unknown keys and malformed values raise ConfigError.
struct RunConfig {
  std::string group = "H1";
  int resolution = 64;                   // default grid cells per axis
  std::map<std::string, int> resolution_for;  // resolution.<check> overrides
  int quadrature_cells = 24;
  std::vector<double> p{1.5, 2.0, 3.0};
  std::vector<double> k{8, 16, 32, 64};
  double R = 1.0;  // support radius of the variable-coefficient checks
  double r = 1.0;  // inner radius of the model-operator lemmas
  double mu = 0.5;
  int matrices = 3;  // random matrices besides the identity
  double lattice_stride = 0.5;  // stride fraction of ball families
  double lattice_ratio = 1.5;   // radius ratio of ball families
  int lattice_refinements = 0;
  std::vector<double> amplitudes{0.05, 0.1, 0.2};  // log-log fields, times 1 - mu = 0.5 by default
  double loglog_scale = 0.01;
  double chain_radius = 80.0;
  double solver_tolerance = 1e-8;
  int solver_max_iterations = 10000;
  std::string out_dir = "carnot-out";
  unsigned seed = 1;
  int workers = 1;

  static RunConfig parse(const std::string& text);
  static RunConfig load(const std::filesystem::path& path);
  // One setting, with the same typing as the file; flags go through here.
  void set(const std::string& key, const std::string& value);
  static const std::vector<std::string>& keys();
  void validate() const;

  int resolution_of(const std::string& check) const;
  // CARNOT_OUT_DIR wins over out_dir when set and nonempty.
  std::filesystem::path output_dir() const;
  // Canonical text, parseable back to an equal config.
  std::string to_text() const;
};

}  // namespace carnot
