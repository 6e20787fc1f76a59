#pragma once

// Degree-of-freedom layout for the five HDG fields and the projection and
// interpolation operators onto them.
//
// Global ordering is by field block:
//   [u_h cells][p_h cells][ubar_h facets][pbar_s facets][pbar_d facets][multiplier]
// Cell velocity blocks store the x-component coefficients followed by the
// y-component; facet velocity blocks likewise.

#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "hdgflow/mesh.hpp"
#include "hdgflow/polybasis.hpp"

namespace hdgflow {

struct DofRange {
  int offset = 0;
  int size = 0;

  bool empty() const { return size == 0; }
  int operator[](int i) const { return offset + i; }
  int end() const { return offset + size; }
};

enum class FieldBlock { Velocity, Pressure, FacetVelocity, FacetPressureS, FacetPressureD, Multiplier };

bool has_facet_velocity(FacetClass cls);
bool has_facet_pressure(FacetClass cls, Subdomain side);

class SpaceLayout {
public:
  /// k >= 1. The multiplier slot carries the zero-mean constraint on p_h.
  SpaceLayout(std::shared_ptr<const Mesh> mesh, int k, bool mean_multiplier);

  const Mesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const Mesh>& mesh_ptr() const { return mesh_; }
  int degree() const { return k_; }
  int size() const { return size_; }
  bool has_multiplier() const { return multiplier_; }

  const TriangleBasis& velocity_basis() const { return vbasis_; } // P_k
  const TriangleBasis& pressure_basis() const { return pbasis_; } // P_{k-1}
  const SegmentBasis& facet_basis() const { return fbasis_; }     // P_k(F)

  int cell_velocity_size() const { return 2 * vbasis_.size(); }
  int cell_pressure_size() const { return pbasis_.size(); }
  int facet_velocity_size() const { return 2 * fbasis_.size(); }
  int facet_pressure_size() const { return fbasis_.size(); }

  DofRange cell_velocity(int c) const;
  DofRange cell_pressure(int c) const;
  /// Empty range on facets outside the free-flow skeleton.
  DofRange facet_velocity(int f) const;
  DofRange facet_pressure(int f, Subdomain side) const;
  DofRange multiplier() const;
  DofRange block(FieldBlock b) const { return blocks_[static_cast<int>(b)]; }

  /// One-line description of the block structure, used to validate stored
  /// coefficient files against a rebuilt layout.
  std::string descriptor() const;

  /// Integrals over the reference triangle of the pressure basis functions;
  /// also the coefficients of the constant 1.
  const std::vector<double>& pressure_basis_integrals() const { return pmean_; }

private:
  std::shared_ptr<const Mesh> mesh_;
  int k_;
  bool multiplier_;
  TriangleBasis vbasis_;
  TriangleBasis pbasis_;
  SegmentBasis fbasis_;
  std::vector<int> ubar_index_;  // per facet, -1 if none
  std::vector<int> pbar_s_index_;
  std::vector<int> pbar_d_index_;
  DofRange blocks_[6];
  int size_ = 0;
  std::vector<double> pmean_;
};

/// Coefficient vector over a SpaceLayout: (u_h, ubar_h, p_h, pbar_s, pbar_d).
class DiscreteField {
public:
  explicit DiscreteField(std::shared_ptr<const SpaceLayout> layout);
  DiscreteField(std::shared_ptr<const SpaceLayout> layout, Eigen::VectorXd coefficients);

  const SpaceLayout& layout() const { return *layout_; }
  const std::shared_ptr<const SpaceLayout>& layout_ptr() const { return layout_; }
  const Mesh& mesh() const { return layout_->mesh(); }

  Eigen::VectorXd& coefficients() { return coeffs_; }
  const Eigen::VectorXd& coefficients() const { return coeffs_; }

  std::span<const double> block(DofRange r) const { return {coeffs_.data() + r.offset, static_cast<std::size_t>(r.size)}; }
  std::span<double> block(DofRange r) { return {coeffs_.data() + r.offset, static_cast<std::size_t>(r.size)}; }

  Vec2 velocity(int cell, const Vec2& x) const;
  /// (i, j) = d u_i / d x_j
  Mat2 velocity_gradient(int cell, const Vec2& x) const;
  double divergence(int cell, const Vec2& x) const;
  double pressure(int cell, const Vec2& x) const;
  /// Facet traces at facet parameter t in [0, 1].
  Vec2 facet_velocity(int facet, double t) const;
  double facet_pressure(int facet, Subdomain side, double t) const;
  double multiplier() const;

  /// Text format: header with the layout descriptor, then one coefficient
  /// per line printed with 17 significant digits.
  void save(std::ostream& out) const;
  /// Throws std::runtime_error if the stored descriptor does not match.
  static DiscreteField load(std::istream& in, std::shared_ptr<const SpaceLayout> layout);

private:
  std::shared_ptr<const SpaceLayout> layout_;
  Eigen::VectorXd coeffs_;
};

using CellScalarFn = std::function<double(int cell, const Vec2& x)>;
using CellVectorFn = std::function<Vec2(int cell, const Vec2& x)>;
using FacetScalarFn = std::function<double(int facet, const Vec2& x)>;
using FacetVectorFn = std::function<Vec2(int facet, const Vec2& x)>;

/// Broken polynomial field: P_degree per cell with `components` components.
struct CellPolynomialField {
  std::shared_ptr<const Mesh> mesh;
  int degree = 0;
  int components = 1;
  std::shared_ptr<const TriangleBasis> basis;
  Eigen::VectorXd coefficients; // [cell][component][basis]

  int basis_size() const { return triangle_dim(degree); }
  std::span<const double> block(int cell, int component) const;
  std::span<double> block(int cell, int component);
  double value(int cell, const Vec2& x, int component = 0) const;
};

/// Cellwise L2 projection onto P_degree.
CellPolynomialField project_cell(std::shared_ptr<const Mesh> mesh, int degree, const CellScalarFn& f);
CellPolynomialField project_cell(std::shared_ptr<const Mesh> mesh, int degree, const CellVectorFn& f);

/// Pi_Q: writes the L2 projection of f onto the P_{k-1} cell pressure block.
void project_pressure(DiscreteField& field, const CellScalarFn& f);
/// Pi_bar_V: L2 projection of g onto ubar_h on every facet that carries it.
void project_facet_velocity(DiscreteField& field, const FacetVectorFn& g);
/// Pi_bar_Q^j: L2 projection onto pbar^j on every facet of that subdomain.
void project_facet_pressure(DiscreteField& field, Subdomain side, const FacetScalarFn& g);

/// Pi_V: BDM interpolation of degree k. Per cell, matches the normal moments
/// against P_k on each edge, the moments against gradients of P_{k-1}, and
/// the moments against curls of bubble * P_{k-2}. Throws std::runtime_error
/// on a singular local system.
CellPolynomialField bdm_interpolate(std::shared_ptr<const Mesh> mesh, int k, const CellVectorFn& u);
/// Writes Pi_V u into the cell velocity block.
void bdm_interpolate(DiscreteField& field, const CellVectorFn& u);

/// Subtracts the domain mean of p_h from the cell pressure blocks.
void enforce_zero_mean(DiscreteField& field);
void enforce_zero_mean(CellPolynomialField& p);

/// Integral of p_h over the whole domain.
double pressure_integral(const DiscreteField& field);

} // namespace hdgflow
