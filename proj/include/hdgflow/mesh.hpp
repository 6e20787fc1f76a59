#pragma once

// Conforming triangulations of a rectangle split horizontally into a free-flow
// part (above the interface ordinate) and a porous part (below it).

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "hdgflow/types.hpp"

namespace hdgflow {

enum class Subdomain : std::uint8_t { Stokes, Darcy };

enum class FacetClass : std::uint8_t { InteriorS, InteriorD, Interface, ExteriorS, ExteriorD };

enum class BoundarySide : std::int8_t { None = -1, Bottom = 0, Right = 1, Top = 2, Left = 3 };

const char* to_string(FacetClass cls);

/// Axis-aligned rectangle [x0, x1] x [y0, y1]; the free-flow region lies above
/// y = y_interface, the porous region below.
struct DomainSpec {
  double x0 = 0.0, x1 = 1.0;
  double y0 = -1.0, y1 = 1.0;
  double y_interface = 0.0;
  /// User labels copied onto exterior facets, indexed by BoundarySide.
  std::array<int, 4> side_labels{0, 1, 2, 3};

  /// Throws std::invalid_argument on an empty rectangle or an interface
  /// ordinate not strictly inside (y0, y1).
  void validate() const;
  double area() const { return (x1 - x0) * (y1 - y0); }
};

struct Cell {
  std::array<int, 3> vertices{};      // counter-clockwise
  std::array<int, 3> facets{};        // facet i is opposite vertex i
  std::array<double, 3> facet_sign{}; // +1 if the stored facet normal points out of this cell
  Subdomain subdomain = Subdomain::Stokes;
  Mat2 jacobian;                      // columns v1 - v0, v2 - v0
  Mat2 inverse_jacobian;
  double det = 0.0;                   // > 0
  double diameter = 0.0;              // longest edge
};

struct Facet {
  std::array<int, 2> vertices{};        // x(t) = v0 + t (v1 - v0)
  std::array<int, 2> cells{-1, -1};     // cells[0]: normal points out of it
  std::array<int, 2> local_index{-1, -1};
  FacetClass cls = FacetClass::InteriorS;
  BoundarySide side = BoundarySide::None;
  int boundary_label = -1;
  Vec2 normal;  // unit; Interface: from the free-flow cell into the porous cell
  Vec2 tangent; // unit, (-n_y, n_x)
  double length = 0.0;

  bool is_boundary() const { return cells[1] < 0; }
};

class Mesh {
public:
  Mesh(DomainSpec spec, std::vector<Vec2> vertices, std::vector<Cell> cells);

  const DomainSpec& domain() const { return spec_; }
  const std::vector<Vec2>& vertices() const { return vertices_; }
  const std::vector<Cell>& cells() const { return cells_; }
  const std::vector<Facet>& facets() const { return facets_; }
  const Cell& cell(int c) const { return cells_.at(c); }
  const Facet& facet(int f) const { return facets_.at(f); }
  std::size_t num_cells() const { return cells_.size(); }
  std::size_t num_facets() const { return facets_.size(); }

  /// max over cells of the longest edge
  double h() const { return h_; }
  double cell_area(int c) const { return 0.5 * cells_[c].det; }

  Vec2 to_physical(int c, const Vec2& xi) const;
  Vec2 to_reference(int c, const Vec2& x) const;
  Vec2 facet_point(int f, double t) const;
  Vec2 centroid(int c) const;

  /// Outward unit normal of facet f seen from cell c (which must touch f).
  Vec2 outward_normal(int c, int f) const;

private:
  void build_facets();

  DomainSpec spec_;
  std::vector<Vec2> vertices_;
  std::vector<Cell> cells_;
  std::vector<Facet> facets_;
  double h_ = 0.0;
};

/// Uniform structured triangulation: grid squares of side about 1/n, each cut
/// into two triangles by the lower-left to upper-right diagonal. Rows are
/// laid out separately on each side of the interface so no triangle crosses
/// it; each subdomain gets max(1, round(height * n)) rows and the domain
/// max(1, round(width * n)) columns.
Mesh build_structured_mesh(const DomainSpec& spec, int n);

/// Red refinement: every triangle split into four similar ones.
Mesh refine_uniform(const Mesh& mesh);

struct FacetFrame {
  Vec2 normal;
  Vec2 tangent;
};

/// Throws std::out_of_range on an unknown facet id.
FacetFrame facet_frame(const Mesh& mesh, int facet);

/// Legacy-VTK unstructured grid with subdomain tags (0 free flow, 1 porous)
/// as cell data. Further cell arrays may be appended to the stream.
void write_mesh_vtk(const Mesh& mesh, std::ostream& out, const char* title = "hdgflow mesh");

} // namespace hdgflow
