#include "doctest.h"

#include <cmath>
#include <sstream>

#include "hdgflow/mesh.hpp"

using namespace hdgflow;

namespace {

DomainSpec unit_square_half() { return {0.0, 1.0, 0.0, 1.0, 0.5, {0, 1, 2, 3}}; }
DomainSpec two_unit_squares() { return {0.0, 1.0, -1.0, 1.0, 0.0, {0, 1, 2, 3}}; }

int count_class(const Mesh& m, FacetClass cls)
{
  int n = 0;
  for (const Facet& f : m.facets())
    n += f.cls == cls;
  return n;
}

int count_cells(const Mesh& m, Subdomain s)
{
  int n = 0;
  for (const Cell& c : m.cells())
    n += c.subdomain == s;
  return n;
}

void check_mesh_invariants(const Mesh& m)
{
  double area = 0.0, hmax = 0.0;
  for (int c = 0; c < static_cast<int>(m.num_cells()); ++c) {
    const Cell& cell = m.cell(c);
    CHECK(cell.det > 0.0);
    area += m.cell_area(c);
    hmax = std::max(hmax, cell.diameter);
    const double yc = m.centroid(c).y();
    CHECK((cell.subdomain == Subdomain::Stokes) == (yc > m.domain().y_interface));
    for (int l = 0; l < 3; ++l) {
      const int f = cell.facets[l];
      const Facet& facet = m.facet(f);
      // facet l is opposite vertex l; outward normal points away from it
      const Vec2 n = facet.normal * cell.facet_sign[l];
      const Vec2 opposite = m.vertices()[cell.vertices[l]];
      CHECK(n.dot(m.facet_point(f, 0.5) - opposite) > 0.0);
      CHECK(n == m.outward_normal(c, f));
    }
  }
  CHECK(std::abs(area - m.domain().area()) <= 1e-13 * m.domain().area());
  CHECK(m.h() == hmax);

  for (int f = 0; f < static_cast<int>(m.num_facets()); ++f) {
    const Facet& facet = m.facet(f);
    CHECK(std::abs(facet.normal.norm() - 1.0) < 1e-15);
    CHECK(std::abs(facet.tangent.norm() - 1.0) < 1e-15);
    CHECK(facet.normal.dot(facet.tangent) == 0.0);
    const bool boundary = facet.cls == FacetClass::ExteriorS || facet.cls == FacetClass::ExteriorD;
    CHECK(boundary == facet.is_boundary());
    if (facet.cls == FacetClass::Interface) {
      CHECK(m.cell(facet.cells[0]).subdomain == Subdomain::Stokes);
      CHECK(m.cell(facet.cells[1]).subdomain == Subdomain::Darcy);
      CHECK(facet.normal.y() == doctest::Approx(-1.0));
      // n^s = -n^d exactly
      CHECK(m.outward_normal(facet.cells[0], f) == -m.outward_normal(facet.cells[1], f));
    }
  }
}

} // namespace

TEST_CASE("smallest structured mesh")
{
  const Mesh m = build_structured_mesh(unit_square_half(), 2);
  CHECK(count_cells(m, Subdomain::Stokes) == 4);
  CHECK(count_cells(m, Subdomain::Darcy) == 4);
  CHECK(count_class(m, FacetClass::Interface) == 2);
  check_mesh_invariants(m);
}

TEST_CASE("structured mesh on the two-square domain")
{
  const Mesh m = build_structured_mesh(two_unit_squares(), 2);
  CHECK(m.num_cells() == 16);
  CHECK(count_class(m, FacetClass::Interface) == 2);
  check_mesh_invariants(m);
}

TEST_CASE("structured mesh with an interface off the unit grid")
{
  const DomainSpec spec{0.0, 1.0, 0.0, 1.0, 0.6, {0, 1, 2, 3}};
  const Mesh m = build_structured_mesh(spec, 64);
  CHECK(m.num_cells() == 8192);
  check_mesh_invariants(m);
}

TEST_CASE("invalid domain is rejected")
{
  DomainSpec bad = unit_square_half();
  bad.y_interface = 1.5;
  CHECK_THROWS_AS(build_structured_mesh(bad, 2), std::invalid_argument);
  CHECK_THROWS_AS(build_structured_mesh(unit_square_half(), 0), std::invalid_argument);
}

TEST_CASE("uniform refinement")
{
  Mesh m = build_structured_mesh(two_unit_squares(), 2);
  for (int level = 0; level < 3; ++level) {
    const Mesh r = refine_uniform(m);
    CHECK(r.num_cells() == 4 * m.num_cells());
    CHECK(r.h() == doctest::Approx(m.h() / 2).epsilon(1e-14));
    CHECK(count_class(r, FacetClass::Interface) == 2 * count_class(m, FacetClass::Interface));
    CHECK(count_cells(r, Subdomain::Darcy) == 4 * count_cells(m, Subdomain::Darcy));
    check_mesh_invariants(r);
    m = r;
  }
}

TEST_CASE("facet frames")
{
  const Mesh m = build_structured_mesh(two_unit_squares(), 2);
  for (int f = 0; f < static_cast<int>(m.num_facets()); ++f) {
    const auto [n, t] = facet_frame(m, f);
    CHECK(n.dot(t) == 0.0);
    const Facet& facet = m.facet(f);
    if (facet.side == BoundarySide::Right) {
      CHECK(n.x() == doctest::Approx(1.0));
      CHECK(std::abs(n.y()) < 1e-15);
    }
    if (facet.cls == FacetClass::Interface) {
      CHECK(n.y() == doctest::Approx(-1.0));
    }
  }
  CHECK_THROWS_AS(facet_frame(m, -1), std::out_of_range);
  CHECK_THROWS_AS(facet_frame(m, static_cast<int>(m.num_facets())), std::out_of_range);
}

TEST_CASE("boundary facets carry side labels")
{
  DomainSpec spec = two_unit_squares();
  spec.side_labels = {10, 11, 12, 13};
  const Mesh m = build_structured_mesh(spec, 3);
  int counts[4] = {0, 0, 0, 0};
  for (const Facet& f : m.facets())
    if (f.is_boundary()) {
      REQUIRE(f.side != BoundarySide::None);
      CHECK(f.boundary_label == 10 + static_cast<int>(f.side));
      ++counts[static_cast<int>(f.side)];
    }
  CHECK(counts[0] == 3);
  CHECK(counts[1] == 6);
  CHECK(counts[2] == 3);
  CHECK(counts[3] == 6);
}

TEST_CASE("mesh VTK dump")
{
  const Mesh m = build_structured_mesh(unit_square_half(), 2);
  std::ostringstream out;
  write_mesh_vtk(m, out);
  const std::string s = out.str();
  CHECK(s.rfind("# vtk DataFile Version 3.0", 0) == 0);
  CHECK(s.find("CELLS 8 32") != std::string::npos);
  CHECK(s.find("CELL_TYPES 8") != std::string::npos);
}
