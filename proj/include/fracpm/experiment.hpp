#pragma once

#include "fracpm/config.hpp"
#include "fracpm/csv.hpp"

#include <string>

namespace fracpm {

struct RunOptions {
  std::string out_dir;  // overrides the config's output directory when nonempty
  int jobs = 0;         // <= 0: available parallelism
  bool no_timestamp = false;
  bool dump_operators = false;
};

// Exit codes: 0 success, 1 verification failure, 3 runtime failure.
// (2, config error, is produced by the CLI when parsing fails.)

/// Eigenvalue CSV (k,lambda) and the operator-law suite CSV.
int cmd_spectral(const ExperimentConfig& config, const RunOptions& options);

/// Trajectory CSV, snapshot CSVs at the requested times, one diagnostics CSV
/// per check.
int cmd_solve(const ExperimentConfig& config, const RunOptions& options);

/// Sweep CSV (Cauchy/drift table) plus per-run summaries.
int cmd_sweep(const ExperimentConfig& config, const RunOptions& options);

/// Full invariant suite on this config; report.csv; exit 0 iff everything
/// gating passes.
int cmd_verify(const ExperimentConfig& config, const RunOptions& options);

}  // namespace fracpm
