#pragma once

// Element and facet kernels of the HDG discretization. Each kernel carries
// its global row and column indices; nothing is scattered here.
//
// Velocity test functions are (v, vbar), pressure test functions (q, qbar).
// Kernels over a free-flow cell order their unknowns as the cell velocity
// block followed by the facet velocity blocks of local facets 0, 1, 2.

#include <array>
#include <memory>
#include <vector>

#include "hdgflow/fespace.hpp"
#include "hdgflow/problem.hpp"

namespace hdgflow {

struct LocalKernel {
  RowMatrix matrix;       // rows.size() x cols.size(), or empty
  Eigen::VectorXd vector; // rows.size(), or empty
  std::vector<int> rows;
  std::vector<int> cols;
};

/// Reference-element tables for one quadrature degree.
struct QuadTables {
  QuadratureRule cell_rule;
  BasisTable velocity;             // P_k at cell points
  BasisTable pressure;             // P_{k-1} at cell points
  QuadratureRule facet_rule;       // on [0, 1]
  std::array<BasisTable, 3> edge_velocity; // P_k at the points of local edge l
  std::array<BasisTable, 3> edge_pressure;
  RowMatrix facet_forward;         // P_k(F) at s
  RowMatrix facet_reverse;         // P_k(F) at 1 - s

  QuadTables(const SpaceLayout& layout, int degree);

  /// Facet basis at the points of a local edge traversed with this sign.
  const RowMatrix& facet_values(double sign) const { return sign > 0 ? facet_forward : facet_reverse; }
};

/// Reference point of local edge l at edge parameter s (from vertex l+1 to
/// vertex l+2).
Vec2 reference_edge_point(int l, double s);

class FormContext {
public:
  /// Forms are integrated with degree 3k+2. Data integrals (sources and
  /// boundary data) use 3k+10 so compatibility defects stay near rounding.
  FormContext(std::shared_ptr<const SpaceLayout> layout, ProblemData data);

  const SpaceLayout& layout() const { return *layout_; }
  const std::shared_ptr<const SpaceLayout>& layout_ptr() const { return layout_; }
  const Mesh& mesh() const { return layout_->mesh(); }
  const ProblemData& data() const { return data_; }
  const QuadTables& assembly() const { return assembly_; }
  const QuadTables& data_tables() const { return data_tables_; }

  /// Physical gradients of the velocity basis at the cell quadrature points.
  void physical_gradients(int cell, const QuadTables& t, RowMatrix& dx, RowMatrix& dy) const;

  /// Without pressure boundary data the discrete flux data must balance the
  /// porous source exactly, or the mean multiplier absorbs the quadrature
  /// error and the divergence constraint holds only up to that constant.
  /// The imbalance is removed by a constant shift of the normal flux data
  /// on the porous exterior boundary.
  double compatibility_defect() const { return compatibility_defect_; }
  double normal_flux_shift() const { return flux_shift_; }

private:
  void balance_flux_data();

  std::shared_ptr<const SpaceLayout> layout_;
  ProblemData data_;
  QuadTables assembly_;
  QuadTables data_tables_;
  double compatibility_defect_ = 0.0;
  double flux_shift_ = 0.0;
};

/// Free-flow viscous form: volume 2 mu eps(u):eps(v), penalty
/// 2 beta mu / h_K (u - ubar).(v - vbar) and the two consistency terms.
LocalKernel local_ahs(const FormContext& ctx, int cell);
/// Porous form int mu kappa^{-1} u . v. Throws std::runtime_error if kappa is
/// not SPD at a quadrature point.
LocalKernel local_ad(const FormContext& ctx, int cell);
/// Interface slip form alpha mu / sqrt(tau . kappa tau) (ubar.tau)(vbar.tau)
/// with kappa from the porous neighbour.
LocalKernel local_aI(const FormContext& ctx, int facet);
/// Convection form frozen at w (cell velocity of w, free-flow cells):
/// -int u (x) w : grad v + int_dK (v - vbar).(max(w.n,0) u + min(w.n,0) ubar)
/// + int over interface facets of (w.n) ubar . vbar.
LocalKernel local_th(const FormContext& ctx, int cell, const DiscreteField& w);
/// b_h^j on one cell: rows are the cell velocity, columns the cell pressure
/// followed by the facet pressures p^j of local facets 0, 1, 2.
LocalKernel local_bh(const FormContext& ctx, int cell);
/// -int pbar^j vbar . n^j on one facet; rows are the facet velocity,
/// columns the facet pressure of side j. n^s is the facet normal, n^d its
/// negative. On free-flow exterior facets (j = s) this term carries the
/// Dirichlet lifting of the normal velocity.
LocalKernel local_bhI(const FormContext& ctx, int facet, Subdomain side);
/// Loads int f^s . v (free-flow cells) or int f^d q (porous cells).
LocalKernel local_rhs(const FormContext& ctx, int cell);
/// Boundary and interface loads of one facet: int qbar g_n on porous flux
/// facets, int g_I . vbar on interface facets. Empty for other facets.
LocalKernel bc_contributions(const FormContext& ctx, int facet);
/// Column (int_K q) of the zero-mean multiplier for one cell.
LocalKernel local_mean(const FormContext& ctx, int cell);

/// Unknowns fixed by essential boundary data: ubar on free-flow exterior
/// facets and pbar^d on pressure facets.
struct DofConstraints {
  std::vector<int> dofs;
  std::vector<double> values;
};
DofConstraints essential_constraints(const FormContext& ctx);

/// Pi_Q of chi^d f^d, integrated with the same rule as the loads; used by
/// conservation checks.
CellPolynomialField projected_porous_source(const FormContext& ctx);

} // namespace hdgflow
