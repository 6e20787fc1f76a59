#pragma once

// Independent check of the BDM interpolation moments: for every cell,
// int_F (u - Pi u).n q for q in P_k(F) on each edge, and
// int_K div(u - Pi u) q for q in P_{k-1}(K) after integration by parts.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "hdgflow/fespace.hpp"

namespace hdgflow::testing {

// max over cells/facets of the BDM moment residuals, independent quadrature
struct MomentResiduals {
  double facet = 0.0;
  double divergence = 0.0;
};

inline MomentResiduals bdm_residuals(const Mesh& mesh, int k, const CellPolynomialField& pi_u,
                              const std::function<Vec2(const Vec2&)>& u)
{
  MomentResiduals r;
  const SegmentBasis sb(k);
  const QuadratureRule fr = quad_segment(std::min(3 * k + 10, kMaxQuadratureDegree));
  std::vector<double> psi(k + 1);
  for (int c = 0; c < static_cast<int>(mesh.num_cells()); ++c) {
    const Cell& cell = mesh.cell(c);
    for (int l = 0; l < 3; ++l) {
      const int f = cell.facets[l];
      const Vec2 n = mesh.facet(f).normal;
      std::vector<double> acc(k + 1, 0.0);
      for (std::size_t q = 0; q < fr.size(); ++q) {
        const double t = fr.points[q].x();
        const Vec2 x = mesh.facet_point(f, t);
        const Vec2 d(u(x).x() - pi_u.value(c, x, 0), u(x).y() - pi_u.value(c, x, 1));
        sb.values(t, psi);
        for (int m = 0; m <= k; ++m)
          acc[m] += fr.weights[q] * mesh.facet(f).length * psi[m] * d.dot(n);
      }
      for (double a : acc)
        r.facet = std::max(r.facet, std::abs(a));
    }
    // int_K q div(u - Pi u) = int_dK q (u - Pi u).n - int_K grad q . (u - Pi u)
    const TriangleBasis qb(k - 1);
    const QuadratureRule cr = quad_triangle(std::min(3 * k + 10, kMaxQuadratureDegree));
    std::vector<double> qv(qb.size()), qx(qb.size()), qy(qb.size());
    std::vector<double> acc(qb.size(), 0.0);
    for (std::size_t q = 0; q < cr.size(); ++q) {
      const Vec2 x = mesh.to_physical(c, cr.points[q]);
      const Vec2 d(u(x).x() - pi_u.value(c, x, 0), u(x).y() - pi_u.value(c, x, 1));
      qb.gradients(cr.points[q], qx, qy);
      const Mat2& inv = cell.inverse_jacobian;
      for (int i = 0; i < qb.size(); ++i) {
        const Vec2 g(inv(0, 0) * qx[i] + inv(1, 0) * qy[i], inv(0, 1) * qx[i] + inv(1, 1) * qy[i]);
        acc[i] -= cr.weights[q] * cell.det * g.dot(d);
      }
    }
    for (int l = 0; l < 3; ++l) {
      const int f = cell.facets[l];
      const Vec2 n = mesh.outward_normal(c, f);
      for (std::size_t q = 0; q < fr.size(); ++q) {
        const Vec2 x = mesh.facet_point(f, fr.points[q].x());
        const Vec2 d(u(x).x() - pi_u.value(c, x, 0), u(x).y() - pi_u.value(c, x, 1));
        qb.values(mesh.to_reference(c, x), qv);
        for (int i = 0; i < qb.size(); ++i)
          acc[i] += fr.weights[q] * mesh.facet(f).length * qv[i] * d.dot(n);
      }
    }
    for (double a : acc)
      r.divergence = std::max(r.divergence, std::abs(a));
  }
  return r;
}

} // namespace hdgflow::testing
