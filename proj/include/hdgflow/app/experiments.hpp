#pragma once

// Problem setups for the two experiments and the per-cell permeability
// fields used by the second one.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "hdgflow/analysis.hpp"
#include "hdgflow/app/config.hpp"

namespace hdgflow::app {

/// Uniform double in [0, 1) from the top 53 bits of one mt19937_64 output.
double unit_uniform(std::uint64_t bits);

/// kappa = mu 10^-r on every porous cell, r = 2 + 4 u with u drawn from
/// std::mt19937_64(seed) in increasing cell order, one draw per porous
/// cell. Free-flow cells get 0.
std::vector<double> gen_random_kappa(const Mesh& mesh, double mu, std::uint64_t seed);

/// Text file with one positive value per porous cell in increasing cell
/// order. Blank lines and lines starting with '#' are skipped. Free-flow
/// cells get 0.
std::vector<double> read_kappa_file(const std::string& path, const Mesh& mesh);

/// [0,1]^2 with the interface at y = 0.6.
DomainSpec example2_domain();

/// Inflow u = (sin(pi/8 (10 y - 6)) (1 - x/5), 0) on the free-flow boundary,
/// u . n = 0 on the porous side walls, p = 2 - x on the bottom, no sources,
/// piecewise constant kappa taken from kappa_cells.
ProblemData example2_problem(double mu, double alpha, double beta, bool convection,
                             std::shared_ptr<const std::vector<double>> kappa_cells);

ManufacturedCase manufactured_case(const RunConfig& config);

/// Mesh, space and forms of a single solve described by a config. Example 1
/// and custom use the finest level of the study.
struct Discretization {
  std::shared_ptr<const Mesh> mesh;
  std::shared_ptr<const SpaceLayout> layout;
  std::shared_ptr<const std::vector<double>> kappa_cells; // example2 only
  std::unique_ptr<FormContext> forms;
};

/// Finest mesh resolution of the config: n 2^(levels-1).
int finest_n(const RunConfig& config);
/// Finest mesh of the config.
std::shared_ptr<const Mesh> build_mesh(const RunConfig& config);
Discretization discretize(const RunConfig& config);

} // namespace hdgflow::app
