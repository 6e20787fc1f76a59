#include "hdgflow/app/commands.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "hdgflow/app/experiments.hpp"
#include "hdgflow/app/export.hpp"

namespace hdgflow::app {

using nlohmann::json;

namespace {

class Stopwatch {
public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

/// Collects threshold violations for the log and the manifest.
class Gate {
public:
  explicit Gate(std::ostream& log) : log_(log) {}

  void at_most(const std::string& what, double value, std::optional<double> limit)
  {
    if (limit && !(value <= *limit))
      fail(what + " = " + format_real(value) + " exceeds " + format_real(*limit));
  }

  void at_least(const std::string& what, double value, std::optional<double> limit)
  {
    if (limit && !(value >= *limit))
      fail(what + " = " + format_real(value) + " is below " + format_real(*limit));
  }

  void fail(const std::string& msg)
  {
    log_ << "FAIL: " << msg << '\n';
    violations_.push_back(msg);
  }

  bool ok() const { return violations_.empty(); }
  const std::vector<std::string>& violations() const { return violations_; }

private:
  std::ostream& log_;
  std::vector<std::string> violations_;
};

json conservation_json(const ConservationReport& c)
{
  return {{"velocity_l2", c.velocity_l2},         {"divergence", c.divergence},
          {"normal_jump", c.normal_jump},         {"interface_trace", c.interface_trace},
          {"max_relative", c.max_relative()},     {"boundary_flux", c.boundary_flux},
          {"multiplier", c.multiplier}};
}

json solve_json(const SolveReport& r)
{
  return {{"picard_iterations", r.iterations},
          {"converged", r.converged},
          {"final_relative_increment", r.relative_increments.empty() ? 0.0 : r.relative_increments.back()},
          {"linear_residual", r.residual},
          {"wall_seconds", r.wall_seconds}};
}

double flux_balance(const ConservationReport& c)
{
  return c.velocity_l2 > 0.0 ? std::abs(c.boundary_flux) / c.velocity_l2 : std::abs(c.boundary_flux);
}

json manifest(const char* command, const RunConfig& config, const std::vector<std::string>& outputs,
              json results, const Gate& gate, const Stopwatch& clock)
{
  json m;
  m["command"] = command;
  m["config"] = json::parse(serialize_config(config));
  m["versions"] = version_info();
  m["outputs"] = outputs;
  m["results"] = std::move(results);
  m["status"] = gate.ok() ? "ok" : "failed";
  m["violations"] = gate.violations();
  m["wall_seconds"] = clock.seconds();
  return m;
}

std::string save_solution(const DiscreteField& uh)
{
  std::ostringstream out;
  uh.save(out);
  return out.str();
}

void log_conservation(std::ostream& log, const ConservationReport& c)
{
  log << "  conservation: divergence " << format_real(c.divergence) << ", normal jump " << format_real(c.normal_jump)
      << ", interface trace " << format_real(c.interface_trace) << " (max relative " << format_real(c.max_relative())
      << ")\n";
}

} // namespace

int cmd_convergence(const RunConfig& config, std::ostream& log)
{
  const Stopwatch clock;
  config.validate();
  if (config.experiment == Experiment::Example2)
    throw std::invalid_argument("convergence: experiment must be example1 or custom");
  const ManufacturedCase mc = manufactured_case(config);

  ConvergenceOptions opt;
  opt.k = config.k;
  opt.levels = config.levels;
  opt.coarse_n = config.n;
  opt.beta = config.penalty();
  opt.solver = config.solver;
  std::string finest_solution;
  opt.on_level = [&](const LevelResult& row, const DiscreteField& uh, const FormContext&) {
    log << "level " << row.level << ": h " << format_real(row.h) << ", " << row.dofs << " unknowns, "
        << row.solve.iterations << " Picard iterations" << (row.solve.converged ? "" : " (not converged)")
        << ", E error " << format_real(row.errors.err_E_u) << '\n';
    if (row.level == config.levels - 1)
      finest_solution = save_solution(uh);
  };
  const ConvergenceReport report = run_convergence(mc, opt);

  Gate gate(log);
  json levels = json::array();
  for (std::size_t l = 0; l < report.levels.size(); ++l) {
    const LevelResult& r = report.levels[l];
    const std::string tag = "level " + std::to_string(l) + " ";
    if (!r.solve.converged)
      gate.fail(tag + "Picard iteration did not converge");
    gate.at_most(tag + "conservation residual", r.conservation.max_relative(), config.thresholds.max_conservation);
    if (config.thresholds.max_picard_iterations)
      gate.at_most(tag + "Picard iterations", r.solve.iterations, *config.thresholds.max_picard_iterations);
    levels.push_back({{"level", r.level},
                      {"h", r.h},
                      {"dofs", r.dofs},
                      {"errors", {{"E_u", r.errors.err_E_u}, {"L2_u", r.errors.err_L2_u}, {"L2_p", r.errors.err_L2_p}}},
                      {"solve", solve_json(r.solve)},
                      {"conservation", conservation_json(r.conservation)}});
  }
  const std::size_t last = report.levels.size() - 1;
  gate.at_least("finest rate_E_u", report.rate_E_u(last), config.thresholds.min_rate_E_u);
  gate.at_least("finest rate_L2_u", report.rate_L2_u(last), config.thresholds.min_rate_L2_u);
  gate.at_least("finest rate_L2_p", report.rate_L2_p(last), config.thresholds.min_rate_L2_p);

  std::ostringstream csv;
  report.write_csv(csv);
  std::vector<std::string> outputs{"convergence.csv", "solution.txt", "config.json", "manifest.json"};
  write_text_file(config.output_dir, "convergence.csv", csv.str());
  write_text_file(config.output_dir, "solution.txt", finest_solution);
  write_text_file(config.output_dir, "config.json", serialize_config(config));
  const json results = {{"levels", levels},
                        {"finest_rates",
                         {{"E_u", report.rate_E_u(last)}, {"L2_u", report.rate_L2_u(last)}, {"L2_p", report.rate_L2_p(last)}}}};
  write_text_file(config.output_dir, "manifest.json",
                  manifest("convergence", config, outputs, results, gate, clock).dump(2) + "\n");
  log << csv.str();
  return gate.ok() ? kExitOk : kExitCheckFailed;
}

int cmd_example2(const RunConfig& config, std::ostream& log)
{
  const Stopwatch clock;
  if (config.experiment != Experiment::Example2)
    throw std::invalid_argument("example2: experiment must be example2");
  const Discretization d = discretize(config);
  log << "example2: " << d.mesh->num_cells() << " triangles, " << d.layout->size() << " unknowns, mu "
      << format_real(config.mu) << ", k " << config.k << '\n';
  const PicardResult result = picard_solve(*d.forms, config.solver);
  const ConservationReport c = conservation_report(result.solution, *d.forms);
  const double balance = flux_balance(c);

  Gate gate(log);
  log << "  Picard iterations " << result.report.iterations << (result.report.converged ? "" : " (not converged)")
      << ", linear residual " << format_real(result.report.residual) << '\n';
  log_conservation(log, c);
  log << "  boundary flux balance |int u.n| / ||u|| = " << format_real(balance) << '\n';
  if (!result.report.converged)
    gate.fail("Picard iteration did not converge; exporting the last iterate");
  gate.at_most("conservation residual", c.max_relative(), config.thresholds.max_conservation);
  gate.at_most("boundary flux balance", balance, config.thresholds.max_flux_balance);
  if (config.thresholds.max_picard_iterations)
    gate.at_most("Picard iterations", result.report.iterations, *config.thresholds.max_picard_iterations);

  std::ostringstream vtk;
  write_fields_vtk(*d.mesh, sample_fields(result.solution, *d.kappa_cells), vtk);
  std::vector<std::string> outputs{"example2.vtk", "solution.txt", "config.json", "manifest.json"};
  write_text_file(config.output_dir, "example2.vtk", vtk.str());
  write_text_file(config.output_dir, "solution.txt", save_solution(result.solution));
  write_text_file(config.output_dir, "config.json", serialize_config(config));

  double kmin = INFINITY, kmax = 0.0;
  for (double k : *d.kappa_cells)
    if (k > 0.0) {
      kmin = std::min(kmin, k);
      kmax = std::max(kmax, k);
    }
  const json results = {{"cells", d.mesh->num_cells()},
                        {"unknowns", d.layout->size()},
                        {"solve", solve_json(result.report)},
                        {"conservation", conservation_json(c)},
                        {"flux_balance", balance},
                        {"permeability_range", {kmin, kmax}}};
  write_text_file(config.output_dir, "manifest.json",
                  manifest("example2", config, outputs, results, gate, clock).dump(2) + "\n");
  return gate.ok() ? kExitOk : kExitCheckFailed;
}

int cmd_check(const RunConfig& config, const std::string& solution_path, std::ostream& log)
{
  const Stopwatch clock;
  const Discretization d = discretize(config);
  std::ifstream in(solution_path);
  if (!in)
    throw std::runtime_error("cannot read solution file '" + solution_path + "'");
  const DiscreteField uh = DiscreteField::load(in, d.layout);
  const ConservationReport c = conservation_report(uh, *d.forms);

  Gate gate(log);
  log << "check " << solution_path << '\n';
  log_conservation(log, c);
  gate.at_most("conservation residual", c.max_relative(), config.thresholds.max_conservation.value_or(1e-9));
  json results = {{"solution", solution_path}, {"conservation", conservation_json(c)}};
  if (config.experiment == Experiment::Example2) {
    const double balance = flux_balance(c);
    log << "  boundary flux balance " << format_real(balance) << '\n';
    gate.at_most("boundary flux balance", balance, config.thresholds.max_flux_balance.value_or(1e-8));
    results["flux_balance"] = balance;
  } else {
    const ErrorReport e = error_norms(manufactured_case(config), uh);
    log << "  errors: E " << format_real(e.err_E_u) << ", L2 u " << format_real(e.err_L2_u) << ", L2 p "
        << format_real(e.err_L2_p) << '\n';
    results["errors"] = {{"E_u", e.err_E_u}, {"L2_u", e.err_L2_u}, {"L2_p", e.err_L2_p}};
  }
  log << (gate.ok() ? "check passed\n" : "check failed\n");
  results["passed"] = gate.ok();
  write_text_file(config.output_dir, "check.json", results.dump(2) + "\n");
  write_text_file(config.output_dir, "manifest.json",
                  manifest("check", config, {"check.json", "manifest.json"}, results, gate, clock).dump(2) + "\n");
  return gate.ok() ? kExitOk : kExitCheckFailed;
}

int cmd_mesh_dump(const RunConfig& config, std::ostream& log)
{
  const Stopwatch clock;
  config.validate();
  const std::shared_ptr<const Mesh> mesh = build_mesh(config);
  std::ostringstream vtk;
  write_mesh_vtk(*mesh, vtk);
  const std::string path = write_text_file(config.output_dir, "mesh.vtk", vtk.str());
  log << "wrote " << path << " (" << mesh->num_cells() << " triangles, " << mesh->num_facets() << " facets)\n";
  const Gate gate(log);
  const json results = {{"cells", mesh->num_cells()}, {"facets", mesh->num_facets()}, {"h", mesh->h()}};
  write_text_file(config.output_dir, "manifest.json",
                  manifest("mesh-dump", config, {"mesh.vtk", "manifest.json"}, results, gate, clock).dump(2) + "\n");
  return kExitOk;
}

} // namespace hdgflow::app
