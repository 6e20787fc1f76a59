#pragma once

// Run configuration: a nested JSON document. Unknown keys are rejected.

#include <cstdint>
#include <optional>
#include <string>

#include "hdgflow/solver.hpp"

namespace hdgflow::app {

enum class Experiment { Example1, Example2, Custom };
enum class KappaSelector { Kappa1, Kappa2, Random, File, Unit };

const char* to_string(Experiment e);
const char* to_string(KappaSelector k);

/// Optional pass/fail gates. A command exits nonzero when one is violated.
struct Thresholds {
  std::optional<double> min_rate_E_u;
  std::optional<double> min_rate_L2_u;
  std::optional<double> min_rate_L2_p;
  std::optional<double> max_conservation; // relative to ||u_h||
  std::optional<double> max_flux_balance; // |int u_h . n| / ||u_h||
  std::optional<int> max_picard_iterations;

  bool operator==(const Thresholds&) const = default;
};

struct RunConfig {
  Experiment experiment = Experiment::Example1;
  int k = 1;
  std::optional<double> beta; // unset: 8 k^2
  double mu = 0.1;
  double alpha = 1.0;
  bool convection = true;
  KappaSelector kappa = KappaSelector::Kappa1;
  std::string kappa_file; // KappaSelector::File
  std::optional<std::uint64_t> seed;
  int n = 4;      // cells per unit length (coarsest level for convergence studies)
  int levels = 4; // convergence studies; 1 for example2
  SolverParams solver;
  Thresholds thresholds;
  std::string output_dir = "output";

  double penalty() const { return beta ? *beta : default_penalty(k); }

  /// Throws std::invalid_argument with the offending key.
  void validate() const;
  bool operator==(const RunConfig&) const = default;
};

/// Defaults for the given experiment: kappa1 and 4 levels from n = 4 for
/// example1, random kappa on n = 64 with k = 2 for example2. The custom
/// experiment is a convergence study of the polynomial exact solution with
/// kappa = 1 ("unit"), which the method reproduces.
RunConfig default_config(Experiment e);

/// Missing keys take the defaults of the document's experiment. Throws
/// std::invalid_argument on unknown keys, wrong types or failed validation.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
/// Every field written explicitly; parse_config(serialize_config(c)) == c.
std::string serialize_config(const RunConfig& config);

/// HDGFLOW_OUTPUT_DIR, when set and non-empty, replaces output_dir.
void apply_environment(RunConfig& config);

} // namespace hdgflow::app
