#include "hdgflow/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>

namespace hdgflow {

const char* to_string(FacetClass cls)
{
  switch (cls) {
  case FacetClass::InteriorS: return "InteriorS";
  case FacetClass::InteriorD: return "InteriorD";
  case FacetClass::Interface: return "Interface";
  case FacetClass::ExteriorS: return "ExteriorS";
  case FacetClass::ExteriorD: return "ExteriorD";
  }
  return "?";
}

void DomainSpec::validate() const
{
  if (!(x1 > x0) || !(y1 > y0))
    throw std::invalid_argument("DomainSpec: empty rectangle");
  if (!(y_interface > y0 && y_interface < y1))
    throw std::invalid_argument("DomainSpec: interface ordinate " + std::to_string(y_interface) +
                                " must lie strictly inside (" + std::to_string(y0) + ", " +
                                std::to_string(y1) + ")");
}

Mesh::Mesh(DomainSpec spec, std::vector<Vec2> vertices, std::vector<Cell> cells)
    : spec_(spec), vertices_(std::move(vertices)), cells_(std::move(cells))
{
  spec_.validate();
  for (std::size_t c = 0; c < cells_.size(); ++c) {
    Cell& cell = cells_[c];
    const Vec2& a = vertices_[cell.vertices[0]];
    const Vec2& b = vertices_[cell.vertices[1]];
    const Vec2& d = vertices_[cell.vertices[2]];
    cell.jacobian.col(0) = b - a;
    cell.jacobian.col(1) = d - a;
    cell.det = cell.jacobian.determinant();
    if (!(cell.det > 0.0))
      throw std::invalid_argument("Mesh: cell " + std::to_string(c) +
                                  " is degenerate or clockwise");
    cell.inverse_jacobian = cell.jacobian.inverse();
    cell.diameter = std::max({(b - a).norm(), (d - b).norm(), (a - d).norm()});
    h_ = std::max(h_, cell.diameter);
  }
  build_facets();
}

void Mesh::build_facets()
{
  std::map<std::pair<int, int>, int> edge_to_facet;
  facets_.clear();
  for (int c = 0; c < static_cast<int>(cells_.size()); ++c) {
    Cell& cell = cells_[c];
    for (int i = 0; i < 3; ++i) {
      const int a = cell.vertices[(i + 1) % 3];
      const int b = cell.vertices[(i + 2) % 3];
      const auto key = std::minmax(a, b);
      auto [it, inserted] = edge_to_facet.try_emplace({key.first, key.second},
                                                      static_cast<int>(facets_.size()));
      if (inserted) {
        Facet f;
        f.vertices = {a, b};
        f.cells = {c, -1};
        f.local_index = {static_cast<std::int8_t>(i), -1};
        facets_.push_back(f);
        cell.facet_sign[i] = 1.0;
      } else {
        Facet& f = facets_[it->second];
        if (f.cells[1] >= 0)
          throw std::invalid_argument("Mesh: edge shared by more than two cells");
        f.cells[1] = c;
        f.local_index[1] = static_cast<std::int8_t>(i);
        cell.facet_sign[i] = -1.0;
      }
      cell.facets[i] = it->second;
    }
  }

  const double tol = 1e-10 * std::max(spec_.x1 - spec_.x0, spec_.y1 - spec_.y0);
  for (auto& f : facets_) {
    if (f.cells[1] >= 0) {
      const Subdomain s0 = cells_[f.cells[0]].subdomain;
      const Subdomain s1 = cells_[f.cells[1]].subdomain;
      if (s0 != s1) {
        f.cls = FacetClass::Interface;
        if (s0 == Subdomain::Darcy) {
          // store the interface normal pointing from the free-flow side
          std::swap(f.cells[0], f.cells[1]);
          std::swap(f.local_index[0], f.local_index[1]);
          std::swap(f.vertices[0], f.vertices[1]);
          cells_[f.cells[0]].facet_sign[f.local_index[0]] = 1.0;
          cells_[f.cells[1]].facet_sign[f.local_index[1]] = -1.0;
        }
      } else {
        f.cls = s0 == Subdomain::Stokes ? FacetClass::InteriorS : FacetClass::InteriorD;
      }
    } else {
      f.cls = cells_[f.cells[0]].subdomain == Subdomain::Stokes ? FacetClass::ExteriorS
                                                                 : FacetClass::ExteriorD;
      const Vec2 mid = 0.5 * (vertices_[f.vertices[0]] + vertices_[f.vertices[1]]);
      if (std::abs(mid.y() - spec_.y0) < tol)
        f.side = BoundarySide::Bottom;
      else if (std::abs(mid.x() - spec_.x1) < tol)
        f.side = BoundarySide::Right;
      else if (std::abs(mid.y() - spec_.y1) < tol)
        f.side = BoundarySide::Top;
      else if (std::abs(mid.x() - spec_.x0) < tol)
        f.side = BoundarySide::Left;
      else
        throw std::invalid_argument("Mesh: boundary facet not on the domain rectangle");
      f.boundary_label = spec_.side_labels[static_cast<int>(f.side)];
    }
    const Vec2 edge = vertices_[f.vertices[1]] - vertices_[f.vertices[0]];
    f.length = edge.norm();
    f.tangent = edge / f.length;
    f.normal = Vec2(f.tangent.y(), -f.tangent.x());
    // re-derive the tangent from the normal so that n . tau is exactly zero
    f.tangent = Vec2(-f.normal.y(), f.normal.x());
  }
}

Vec2 Mesh::to_physical(int c, const Vec2& xi) const
{
  const Cell& cell = cells_[c];
  return vertices_[cell.vertices[0]] + cell.jacobian * xi;
}

Vec2 Mesh::to_reference(int c, const Vec2& x) const
{
  const Cell& cell = cells_[c];
  return cell.inverse_jacobian * (x - vertices_[cell.vertices[0]]);
}

Vec2 Mesh::facet_point(int f, double t) const
{
  const Facet& facet = facets_[f];
  const Vec2& a = vertices_[facet.vertices[0]];
  const Vec2& b = vertices_[facet.vertices[1]];
  return a + t * (b - a);
}

Vec2 Mesh::centroid(int c) const
{
  const Cell& cell = cells_[c];
  return (vertices_[cell.vertices[0]] + vertices_[cell.vertices[1]] + vertices_[cell.vertices[2]]) / 3.0;
}

Vec2 Mesh::outward_normal(int c, int f) const
{
  const Facet& facet = facets_[f];
  if (facet.cells[0] == c)
    return facet.normal;
  if (facet.cells[1] == c)
    return -facet.normal;
  throw std::invalid_argument("outward_normal: cell does not touch facet");
}

Mesh build_structured_mesh(const DomainSpec& spec, int n)
{
  spec.validate();
  if (n < 1)
    throw std::invalid_argument("build_structured_mesh: n must be >= 1");
  const int nx = std::max(1, static_cast<int>(std::lround((spec.x1 - spec.x0) * n)));
  const int ny_d = std::max(1, static_cast<int>(std::lround((spec.y_interface - spec.y0) * n)));
  const int ny_s = std::max(1, static_cast<int>(std::lround((spec.y1 - spec.y_interface) * n)));
  const int ny = ny_d + ny_s;

  std::vector<double> ys(ny + 1);
  for (int j = 0; j <= ny_d; ++j)
    ys[j] = spec.y0 + (spec.y_interface - spec.y0) * j / ny_d;
  for (int j = 1; j <= ny_s; ++j)
    ys[ny_d + j] = spec.y_interface + (spec.y1 - spec.y_interface) * j / ny_s;
  ys[ny_d] = spec.y_interface;
  ys[ny] = spec.y1;

  std::vector<Vec2> vertices;
  vertices.reserve((nx + 1) * (ny + 1));
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      const double x = i == nx ? spec.x1 : spec.x0 + (spec.x1 - spec.x0) * i / nx;
      vertices.emplace_back(x, ys[j]);
    }
  auto vid = [nx](int i, int j) { return j * (nx + 1) + i; };

  std::vector<Cell> cells;
  cells.reserve(2 * nx * ny);
  for (int j = 0; j < ny; ++j) {
    const Subdomain sub = j < ny_d ? Subdomain::Darcy : Subdomain::Stokes;
    for (int i = 0; i < nx; ++i) {
      Cell lower, upper;
      lower.vertices = {vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)};
      upper.vertices = {vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)};
      lower.subdomain = upper.subdomain = sub;
      cells.push_back(lower);
      cells.push_back(upper);
    }
  }
  return Mesh(spec, std::move(vertices), std::move(cells));
}

Mesh refine_uniform(const Mesh& mesh)
{
  std::vector<Vec2> vertices = mesh.vertices();
  const int nv = static_cast<int>(vertices.size());
  for (const Facet& f : mesh.facets())
    vertices.push_back(0.5 * (mesh.vertices()[f.vertices[0]] + mesh.vertices()[f.vertices[1]]));

  std::vector<Cell> cells;
  cells.reserve(4 * mesh.num_cells());
  for (const Cell& parent : mesh.cells()) {
    const auto& v = parent.vertices;
    // m[i] is the midpoint of the edge opposite vertex i
    const std::array<int, 3> m{nv + parent.facets[0], nv + parent.facets[1], nv + parent.facets[2]};
    const std::array<std::array<int, 3>, 4> children{{
        {v[0], m[2], m[1]},
        {m[2], v[1], m[0]},
        {m[1], m[0], v[2]},
        {m[0], m[1], m[2]},
    }};
    for (const auto& child : children) {
      Cell c;
      c.vertices = child;
      c.subdomain = parent.subdomain;
      cells.push_back(c);
    }
  }
  return Mesh(mesh.domain(), std::move(vertices), std::move(cells));
}

FacetFrame facet_frame(const Mesh& mesh, int facet)
{
  if (facet < 0 || facet >= static_cast<int>(mesh.num_facets()))
    throw std::out_of_range("facet_frame: unknown facet id " + std::to_string(facet));
  const Facet& f = mesh.facet(facet);
  return {f.normal, f.tangent};
}

void write_mesh_vtk(const Mesh& mesh, std::ostream& out, const char* title)
{
  char buf[128];
  out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.vertices().size() << " double\n";
  for (const Vec2& p : mesh.vertices()) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g 0\n", p.x(), p.y());
    out << buf;
  }
  out << "CELLS " << mesh.num_cells() << ' ' << 4 * mesh.num_cells() << '\n';
  for (const Cell& c : mesh.cells())
    out << "3 " << c.vertices[0] << ' ' << c.vertices[1] << ' ' << c.vertices[2] << '\n';
  out << "CELL_TYPES " << mesh.num_cells() << '\n';
  for (std::size_t c = 0; c < mesh.num_cells(); ++c)
    out << "5\n";
  out << "CELL_DATA " << mesh.num_cells() << "\nSCALARS subdomain int 1\nLOOKUP_TABLE default\n";
  for (const Cell& c : mesh.cells())
    out << (c.subdomain == Subdomain::Stokes ? 0 : 1) << '\n';
}

} // namespace hdgflow
