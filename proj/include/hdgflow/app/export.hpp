#pragma once

// Result files: cell-sampled fields as legacy VTK, and the run manifest.

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "hdgflow/fespace.hpp"

namespace hdgflow::app {

/// Discrete fields sampled at cell centroids.
struct FieldExport {
  std::vector<Vec2> velocity;
  std::vector<double> pressure;
  std::vector<int> subdomain;       // 0 free flow, 1 porous
  std::vector<double> permeability; // 0 on free-flow cells

  /// Throws std::runtime_error unless every array has one finite entry per cell.
  void validate(const Mesh& mesh) const;
};

/// permeability may be empty (all zero) or hold one value per cell.
FieldExport sample_fields(const DiscreteField& uh, const std::vector<double>& permeability);

/// Mesh geometry followed by cell data: subdomain, velocity (3-vector),
/// velocity_magnitude, pressure, permeability. Reals printed with %.17g.
void write_fields_vtk(const Mesh& mesh, const FieldExport& fields, std::ostream& out);

std::string format_real(double v);

/// Versions of this library and its dependencies, and the SIMD backend.
nlohmann::json version_info();

/// Writes text to dir/name, creating dir. Throws std::runtime_error on
/// I/O failure. Returns the path written.
std::string write_text_file(const std::string& dir, const std::string& name, const std::string& text);

} // namespace hdgflow::app
