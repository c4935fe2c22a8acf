#pragma once

#include "fracpm/solver.hpp"

#include <optional>
#include <string>
#include <vector>

namespace fracpm {

/// Named coefficient families mapped to centroid-sampled callbacks.
///   identity                A = I
///   diagonal:c1[,c2]        A = diag(c1, c2)        (constants)
///   full:a11,a12,a22        constant symmetric 2x2
///   affine:c0,c1            A = (c0 + c1 x) I       (1D and 2D)
struct CoefficientSpec {
  enum class Kind { identity, diagonal, full, affine };
  Kind kind = Kind::identity;
  double p0 = 1.0, p1 = 1.0, p2 = 1.0;

  CoefficientFn to_fn() const;
  std::string to_string() const;
  static std::optional<CoefficientSpec> parse(const std::string& text);
};

struct ExperimentConfig {
  // [domain]
  int dimension = 1;
  int resolution = 100;
  std::vector<Side> gamma0{Side::left};
  CoefficientSpec coefficient;
  // [operator]
  double s = 0.5;
  MassMode mass_mode = MassMode::lumped;
  // [solver]
  SolverConfig solver;  // s/mass_mode mirrored in from the operator block
  std::string initial = "sine_compatible";
  // [sweep]
  std::vector<double> delta_grid{1e-1, 5e-2, 2.5e-2, 1.25e-2};
  std::vector<double> mu_grid{1e-2, 5e-3, 2.5e-3, 1.25e-3};
  // [output]
  std::string output_dir = "out";
  std::vector<double> snapshot_times;

  SolverConfig solver_config() const;  // with s and mass_mode applied
  std::string serialize() const;       // canonical text, reparses losslessly
  std::uint64_t hash() const;          // FNV-1a of the canonical text
};

struct ConfigError {
  int line = 0;  // 0 = file-level
  std::string message;
};

struct ParseResult {
  std::optional<ExperimentConfig> config;
  std::vector<ConfigError> errors;
  bool ok() const { return config.has_value() && errors.empty(); }
};

/// Parses the flat `key = value` format with [domain] [operator] [solver]
/// [sweep] [output] sections and # comments. Reports every violation, not
/// just the first. Missing sections fall back to defaults.
ParseResult parse_config(const std::string& text);

ParseResult parse_config_file(const std::string& path);

}  // namespace fracpm
