#include "hdgflow/app/export.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include "hdgflow/simd.hpp"
#include "hdgflow/solver.hpp"

#ifndef HDGFLOW_VERSION
#define HDGFLOW_VERSION "unknown"
#endif

namespace hdgflow::app {

void FieldExport::validate(const Mesh& mesh) const
{
  const std::size_t n = mesh.num_cells();
  if (velocity.size() != n || pressure.size() != n || subdomain.size() != n || permeability.size() != n)
    throw std::runtime_error("field export: sample count does not match the mesh");
  for (std::size_t c = 0; c < n; ++c)
    if (!velocity[c].allFinite() || !std::isfinite(pressure[c]) || !std::isfinite(permeability[c]))
      throw std::runtime_error("field export: non-finite value on cell " + std::to_string(c));
}

FieldExport sample_fields(const DiscreteField& uh, const std::vector<double>& permeability)
{
  const Mesh& mesh = uh.mesh();
  const std::size_t n = mesh.num_cells();
  if (!permeability.empty() && permeability.size() != n)
    throw std::invalid_argument("sample_fields: permeability size does not match the mesh");
  FieldExport f;
  f.velocity.reserve(n);
  f.pressure.reserve(n);
  f.subdomain.reserve(n);
  for (std::size_t c = 0; c < n; ++c) {
    const int cell = static_cast<int>(c);
    const Vec2 x = mesh.centroid(cell);
    f.velocity.push_back(uh.velocity(cell, x));
    f.pressure.push_back(uh.pressure(cell, x));
    f.subdomain.push_back(mesh.cell(cell).subdomain == Subdomain::Stokes ? 0 : 1);
  }
  f.permeability = permeability.empty() ? std::vector<double>(n, 0.0) : permeability;
  f.validate(mesh);
  return f;
}

std::string format_real(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_fields_vtk(const Mesh& mesh, const FieldExport& fields, std::ostream& out)
{
  fields.validate(mesh);
  write_mesh_vtk(mesh, out, "hdgflow fields");
  out << "VECTORS velocity double\n";
  for (const Vec2& u : fields.velocity)
    out << format_real(u.x()) << ' ' << format_real(u.y()) << " 0\n";
  auto scalars = [&](const char* name, auto value) {
    out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (std::size_t c = 0; c < mesh.num_cells(); ++c)
      out << format_real(value(c)) << '\n';
  };
  scalars("velocity_magnitude", [&](std::size_t c) { return fields.velocity[c].norm(); });
  scalars("pressure", [&](std::size_t c) { return fields.pressure[c]; });
  scalars("permeability", [&](std::size_t c) { return fields.permeability[c]; });
}

nlohmann::json version_info()
{
  nlohmann::json v;
  v["hdgflow"] = HDGFLOW_VERSION;
  v["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
               std::to_string(EIGEN_MINOR_VERSION);
  v["sparse_solver"] = sparse_solver_version();
  v["json"] = std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
              std::to_string(NLOHMANN_JSON_VERSION_PATCH);
#if defined(__clang__)
  v["compiler"] = "clang " __clang_version__;
#elif defined(__GNUC__)
  v["compiler"] = "gcc " __VERSION__;
#endif
  v["simd"] = std::string(simd::backend_name(simd::active_backend()));
  return v;
}

std::string write_text_file(const std::string& dir, const std::string& name, const std::string& text)
{
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec)
    throw std::runtime_error("cannot create output directory '" + dir + "': " + ec.message());
  const std::string path = (std::filesystem::path(dir) / name).string();
  std::ofstream out(path, std::ios::binary);
  out << text;
  out.close();
  if (!out)
    throw std::runtime_error("cannot write '" + path + "'");
  return path;
}

} // namespace hdgflow::app
