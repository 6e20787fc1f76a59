#include "hdgflow/app/experiments.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace hdgflow::app {

double unit_uniform(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

std::vector<double> gen_random_kappa(const Mesh& mesh, double mu, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::vector<double> kappa(mesh.num_cells(), 0.0);
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    if (mesh.cells()[c].subdomain != Subdomain::Darcy)
      continue;
    const double r = 2.0 + 4.0 * unit_uniform(rng());
    kappa[c] = mu * std::pow(10.0, -r);
  }
  return kappa;
}

std::vector<double> read_kappa_file(const std::string& path, const Mesh& mesh)
{
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot read permeability file '" + path + "'");
  std::vector<double> values;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#')
      continue;
    std::istringstream ls(line);
    double v = 0.0;
    std::string rest;
    if (!(ls >> v) || (ls >> rest) || !(v > 0.0) || !std::isfinite(v))
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected one positive number");
    values.push_back(v);
  }
  std::size_t porous = 0;
  for (const Cell& c : mesh.cells())
    porous += c.subdomain == Subdomain::Darcy;
  if (values.size() != porous)
    throw std::runtime_error(path + ": " + std::to_string(values.size()) + " values for " + std::to_string(porous) +
                             " porous cells");
  std::vector<double> kappa(mesh.num_cells(), 0.0);
  std::size_t next = 0;
  for (std::size_t c = 0; c < mesh.num_cells(); ++c)
    if (mesh.cells()[c].subdomain == Subdomain::Darcy)
      kappa[c] = values[next++];
  return kappa;
}

DomainSpec example2_domain()
{
  DomainSpec d;
  d.x0 = 0.0;
  d.x1 = 1.0;
  d.y0 = 0.0;
  d.y1 = 1.0;
  d.y_interface = 0.6;
  return d;
}

ProblemData example2_problem(double mu, double alpha, double beta, bool convection,
                             std::shared_ptr<const std::vector<double>> kappa_cells)
{
  if (!kappa_cells)
    throw std::invalid_argument("example2_problem: permeability field missing");
  ProblemData d;
  d.mu = mu;
  d.alpha = alpha;
  d.beta = beta;
  d.convection = convection;
  d.permeability = isotropic_permeability([kappa_cells](int cell, const Vec2&) { return kappa_cells->at(cell); });
  d.velocity_bc = [](const Vec2& x) {
    return Vec2(std::sin(std::numbers::pi / 8.0 * (10.0 * x.y() - 6.0)) * (1.0 - x.x() / 5.0), 0.0);
  };
  d.pressure_bc = [](const Vec2& x) { return 2.0 - x.x(); };
  d.darcy_sides[static_cast<int>(BoundarySide::Bottom)] = DarcyBoundary::Pressure;
  return d;
}

ManufacturedCase manufactured_case(const RunConfig& config)
{
  switch (config.experiment) {
  case Experiment::Example1:
    return make_example1(config.mu, config.kappa == KappaSelector::Kappa2 ? KappaChoice::Kappa2 : KappaChoice::Kappa1,
                         config.alpha, config.convection);
  case Experiment::Custom: {
    ManufacturedCase mc = make_polynomial_case(config.k, config.mu, config.alpha);
    mc.convection = config.convection;
    return mc;
  }
  case Experiment::Example2:
    break;
  }
  throw std::invalid_argument("example2 has no exact solution");
}

int finest_n(const RunConfig& config) { return config.n << (config.levels - 1); }

std::shared_ptr<const Mesh> build_mesh(const RunConfig& config)
{
  if (config.experiment == Experiment::Example2)
    return std::make_shared<const Mesh>(build_structured_mesh(example2_domain(), config.n));
  // same mesh sequence as the convergence study
  Mesh mesh = build_structured_mesh(manufactured_case(config).domain, config.n);
  for (int l = 1; l < config.levels; ++l)
    mesh = refine_uniform(mesh);
  return std::make_shared<const Mesh>(std::move(mesh));
}

Discretization discretize(const RunConfig& config)
{
  config.validate();
  Discretization d;
  d.mesh = build_mesh(config);
  if (config.experiment == Experiment::Example2) {
    d.kappa_cells = std::make_shared<const std::vector<double>>(
        config.kappa == KappaSelector::Random ? gen_random_kappa(*d.mesh, config.mu, *config.seed)
                                              : read_kappa_file(config.kappa_file, *d.mesh));
    ProblemData data = example2_problem(config.mu, config.alpha, config.penalty(), config.convection, d.kappa_cells);
    d.layout = std::make_shared<const SpaceLayout>(d.mesh, config.k, needs_mean_multiplier(data));
    d.forms = std::make_unique<FormContext>(d.layout, std::move(data));
    return d;
  }
  const ManufacturedCase mc = manufactured_case(config);
  d.layout = std::make_shared<const SpaceLayout>(d.mesh, config.k, true);
  d.forms = std::make_unique<FormContext>(d.layout, to_problem_data(mc, config.penalty()));
  return d;
}

} // namespace hdgflow::app
