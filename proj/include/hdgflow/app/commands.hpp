#pragma once

// The CLI subcommands. Each writes its files and manifest.json into
// config.output_dir and returns a process exit status.

#include <iosfwd>
#include <string>

#include "hdgflow/app/config.hpp"

namespace hdgflow::app {

enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailed = 1, // a threshold or invariant was violated, or Picard did not converge
  kExitUsage = 2,       // invalid command line or config
  kExitError = 3,       // I/O or solver failure
};

/// Example 1 or custom convergence study. Writes convergence.csv,
/// solution.txt (finest level), config.json and manifest.json.
int cmd_convergence(const RunConfig& config, std::ostream& log);

/// Example 2 solve. Writes example2.vtk, solution.txt, config.json and
/// manifest.json, and reports the conservation residuals and the global
/// boundary flux balance.
int cmd_example2(const RunConfig& config, std::ostream& log);

/// Rebuilds the discretization of config (finest level) and checks a stored
/// solution: conservation residuals against thresholds.max_conservation
/// (default 1e-9) and, for example2, the boundary flux balance against
/// thresholds.max_flux_balance (default 1e-8). Writes check.json and
/// manifest.json.
int cmd_check(const RunConfig& config, const std::string& solution_path, std::ostream& log);

/// Writes mesh.vtk (finest level) and manifest.json.
int cmd_mesh_dump(const RunConfig& config, std::ostream& log);

} // namespace hdgflow::app
