#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "hdgflow/app/commands.hpp"
#include "hdgflow/app/config.hpp"
#include "hdgflow/simd.hpp"

using namespace hdgflow;
using namespace hdgflow::app;

namespace {

/// Command-line values that override the config file.
struct Overrides {
  std::string config_path;
  std::string experiment;
  std::optional<int> k, n, levels, picard_max_iter, anderson_depth, workers;
  std::optional<double> beta, mu, alpha, picard_tol, relaxation;
  std::string kappa, kappa_file, initial_guess, output_dir, simd;
  std::optional<std::uint64_t> seed;
  std::optional<bool> convection, condense;
};

void add_config_options(CLI::App& cmd, Overrides& o, bool experiment_flag)
{
  cmd.add_option("-c,--config", o.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  if (experiment_flag)
    cmd.add_option("--experiment", o.experiment, "example1, example2 or custom")
        ->check(CLI::IsMember({"example1", "example2", "custom"}));
  cmd.add_option("-k,--degree", o.k, "polynomial degree k (1..3)");
  cmd.add_option("--beta", o.beta, "interior penalty (default 8 k^2)");
  cmd.add_option("--mu", o.mu, "viscosity");
  cmd.add_option("--alpha", o.alpha, "slip coefficient");
  cmd.add_option("--kappa", o.kappa, "kappa1, kappa2, random, file or unit")
      ->check(CLI::IsMember({"kappa1", "kappa2", "random", "file", "unit"}));
  cmd.add_option("--kappa-file", o.kappa_file, "per-cell permeability file (kappa = file)");
  cmd.add_option("--seed", o.seed, "seed of the random permeability");
  cmd.add_option("-n,--cells", o.n, "cells per unit length (coarsest level)");
  cmd.add_option("--levels", o.levels, "mesh levels");
  cmd.add_flag("--convection,!--no-convection", o.convection, "include the convective term");
  cmd.add_option("--picard-tol", o.picard_tol, "relative Picard tolerance");
  cmd.add_option("--picard-max-iter", o.picard_max_iter, "Picard iteration limit");
  cmd.add_flag("--condense,!--no-condense", o.condense, "static condensation before the sparse solve");
  cmd.add_option("--initial-guess", o.initial_guess, "stokes_darcy or zero")
      ->check(CLI::IsMember({"stokes_darcy", "zero"}));
  cmd.add_option("--relaxation", o.relaxation, "Picard relaxation in (0, 1]");
  cmd.add_option("--anderson-depth", o.anderson_depth, "Anderson mixing depth (0: plain Picard)");
  cmd.add_option("-j,--workers", o.workers, "assembly threads");
  cmd.add_option("-o,--output-dir", o.output_dir, "output directory (HDGFLOW_OUTPUT_DIR overrides)");
  cmd.add_option("--simd", o.simd, "scalar or avx2 (default: best supported)")
      ->check(CLI::IsMember({"scalar", "avx2"}));
}

RunConfig resolve(const Overrides& o, std::optional<Experiment> forced)
{
  RunConfig c;
  if (!o.config_path.empty()) {
    c = load_config(o.config_path);
  } else {
    Experiment e = forced.value_or(Experiment::Example1);
    if (o.experiment == "example2")
      e = Experiment::Example2;
    else if (o.experiment == "custom")
      e = Experiment::Custom;
    c = default_config(e);
  }
  if (forced && c.experiment != *forced)
    throw std::invalid_argument(std::string("config: this command needs experiment '") + to_string(*forced) + "'");
  if (!o.experiment.empty() && o.experiment != to_string(c.experiment))
    throw std::invalid_argument("--experiment conflicts with the config file");

  if (o.k)
    c.k = *o.k;
  if (o.beta)
    c.beta = *o.beta;
  if (o.mu)
    c.mu = *o.mu;
  if (o.alpha)
    c.alpha = *o.alpha;
  if (!o.kappa.empty()) {
    static const std::map<std::string, KappaSelector> names{{"kappa1", KappaSelector::Kappa1},
                                                            {"kappa2", KappaSelector::Kappa2},
                                                            {"random", KappaSelector::Random},
                                                            {"file", KappaSelector::File},
                                                            {"unit", KappaSelector::Unit}};
    c.kappa = names.at(o.kappa);
  }
  if (!o.kappa_file.empty())
    c.kappa_file = o.kappa_file;
  if (o.seed)
    c.seed = *o.seed;
  if (o.n)
    c.n = *o.n;
  if (o.levels)
    c.levels = *o.levels;
  if (o.convection)
    c.convection = *o.convection;
  if (o.picard_tol)
    c.solver.picard_tol = *o.picard_tol;
  if (o.picard_max_iter)
    c.solver.picard_max_iter = *o.picard_max_iter;
  if (o.condense)
    c.solver.condense = *o.condense;
  if (!o.initial_guess.empty())
    c.solver.initial_guess = o.initial_guess == "zero" ? InitialGuess::Zero : InitialGuess::StokesDarcy;
  if (o.relaxation)
    c.solver.relaxation = *o.relaxation;
  if (o.anderson_depth)
    c.solver.anderson_depth = *o.anderson_depth;
  if (o.workers) {
    if (*o.workers < 1)
      throw std::invalid_argument("--workers must be >= 1");
    c.solver.workers = static_cast<unsigned>(*o.workers);
  }
  if (!o.output_dir.empty())
    c.output_dir = o.output_dir;
  apply_environment(c);
  c.validate();

  if (!o.simd.empty()) {
    const simd::Backend b = o.simd == "avx2" ? simd::Backend::Avx2 : simd::Backend::Scalar;
    if (!simd::backend_supported(b))
      throw std::invalid_argument("--simd " + o.simd + " is not supported on this machine");
    simd::set_backend(b);
  }
  return c;
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"HDG solver for coupled Navier-Stokes / Darcy flow"};
  app.require_subcommand(1);

  Overrides conv, ex2, check, dump;
  std::string solution_path;
  CLI::App* c_conv = app.add_subcommand("convergence", "mesh convergence study (example1 or custom)");
  add_config_options(*c_conv, conv, true);
  CLI::App* c_ex2 = app.add_subcommand("example2", "coupled flow with a random permeability field");
  add_config_options(*c_ex2, ex2, false);
  CLI::App* c_check = app.add_subcommand("check", "conservation checks on a stored solution");
  add_config_options(*c_check, check, true);
  c_check->add_option("-s,--solution", solution_path, "solution.txt written by another subcommand")
      ->required()
      ->check(CLI::ExistingFile);
  CLI::App* c_dump = app.add_subcommand("mesh-dump", "write the finest mesh as legacy VTK");
  add_config_options(*c_dump, dump, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (c_conv->parsed()) {
      const RunConfig cfg = resolve(conv, std::nullopt);
      if (cfg.experiment == Experiment::Example2)
        throw std::invalid_argument("convergence: use the example2 subcommand for example2");
      return cmd_convergence(cfg, std::cout);
    }
    if (c_ex2->parsed())
      return cmd_example2(resolve(ex2, Experiment::Example2), std::cout);
    if (c_check->parsed())
      return cmd_check(resolve(check, std::nullopt), solution_path, std::cout);
    if (c_dump->parsed())
      return cmd_mesh_dump(resolve(dump, std::nullopt), std::cout);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitUsage;
}
