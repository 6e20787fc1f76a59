#include "hdgflow/norms.hpp"

#include <cmath>

namespace hdgflow {

TripleNorms discrete_triple_norms(const DiscreteField& field)
{
  const SpaceLayout& layout = field.layout();
  const Mesh& mesh = layout.mesh();
  const int k = layout.degree();
  const QuadratureRule cr = quad_triangle(3 * k + 2);
  const QuadratureRule fr = quad_segment(3 * k + 2);
  double vs = 0.0, vd = 0.0, vt = 0.0, pp = 0.0;

  for (int c = 0; c < static_cast<int>(mesh.num_cells()); ++c) {
    const Cell& cell = mesh.cell(c);
    const Subdomain side = cell.subdomain;
    for (std::size_t q = 0; q < cr.size(); ++q) {
      const Vec2 x = mesh.to_physical(c, cr.points[q]);
      const double w = cr.weights[q] * cell.det;
      const double p = field.pressure(c, x);
      pp += w * p * p;
      if (side == Subdomain::Stokes) {
        vs += w * field.velocity_gradient(c, x).squaredNorm();
      } else {
        const double div = field.divergence(c, x);
        vd += w * (field.velocity(c, x).squaredNorm() + div * div);
      }
    }
    for (int l = 0; l < 3; ++l) {
      const int f = cell.facets[l];
      const Facet& facet = mesh.facet(f);
      const Vec2 n = mesh.outward_normal(c, f);
      for (std::size_t q = 0; q < fr.size(); ++q) {
        const double t = fr.points[q].x();
        const Vec2 x = mesh.facet_point(f, t);
        const double w = fr.weights[q] * facet.length;
        pp += w * cell.diameter * std::pow(field.facet_pressure(f, side, t), 2);
        if (side == Subdomain::Stokes) {
          vs += w / cell.diameter * (field.velocity(c, x) - field.facet_velocity(f, t)).squaredNorm();
        } else if (facet.cls == FacetClass::Interface) {
          const double d = (field.velocity(c, x) - field.facet_velocity(f, t)).dot(n);
          vd += w / cell.diameter * d * d;
        }
      }
    }
  }

  for (int f = 0; f < static_cast<int>(mesh.num_facets()); ++f) {
    const Facet& facet = mesh.facet(f);
    for (std::size_t q = 0; q < fr.size(); ++q) {
      const double t = fr.points[q].x();
      const Vec2 x = mesh.facet_point(f, t);
      const double w = fr.weights[q] * facet.length;
      if (facet.cls == FacetClass::InteriorD) {
        const double jump = (field.velocity(facet.cells[0], x) - field.velocity(facet.cells[1], x)).dot(facet.normal);
        vd += w / facet.length * jump * jump;
      } else if (facet.cls == FacetClass::ExteriorD) {
        const double un = field.velocity(facet.cells[0], x).dot(facet.normal);
        vd += w / facet.length * un * un;
      } else if (facet.cls == FacetClass::Interface) {
        const double ut = field.facet_velocity(f, t).dot(facet.tangent);
        vt += w * ut * ut;
      }
    }
  }
  TripleNorms out;
  out.v_s = std::sqrt(vs);
  out.v_d = std::sqrt(vd);
  out.interface_tangential = std::sqrt(vt);
  out.v = std::sqrt(vs + vd + vt);
  out.p = std::sqrt(pp);
  return out;
}

} // namespace hdgflow
