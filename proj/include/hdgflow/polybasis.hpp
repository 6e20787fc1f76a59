#pragma once

// Polynomial bases on the reference triangle {x, y >= 0, x + y <= 1} and the
// reference segment [0, 1], plus Gauss-type quadrature rules on both.

#include <span>
#include <vector>

#include "hdgflow/types.hpp"

namespace hdgflow {

/// Highest polynomial degree the quadrature generators accept.
inline constexpr int kMaxQuadratureDegree = 40;

/// Quadrature on a reference element. Segment rules store the abscissa in
/// points[i].x() with y = 0.
struct QuadratureRule {
  int dim = 0;
  int degree = 0;
  std::vector<Vec2> points;
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }
};

/// Gauss-Legendre points and weights on [0, 1]; exact for degree 2m - 1.
void gauss_legendre(int m, std::vector<double>& points, std::vector<double>& weights);

/// Collapsed (Duffy) tensor Gauss rule, exact for total degree `degree`.
/// Weights sum to 1/2. Throws std::invalid_argument if degree is negative or
/// above kMaxQuadratureDegree.
QuadratureRule quad_triangle(int degree);

/// Gauss-Legendre rule on [0, 1] exact for `degree`. Weights sum to 1.
QuadratureRule quad_segment(int degree);

inline constexpr int triangle_dim(int k) { return k < 0 ? 0 : (k + 1) * (k + 2) / 2; }

/// Orthonormal basis of P_k on the reference triangle: Gram-Schmidt applied
/// to monomials ordered by total degree, so the first triangle_dim(j)
/// functions span P_j for every j <= k.
class TriangleBasis {
public:
  explicit TriangleBasis(int k);

  int degree() const { return k_; }
  int size() const { return dim_; }

  void values(const Vec2& xi, std::span<double> out) const;
  /// Reference-coordinate gradients.
  void gradients(const Vec2& xi, std::span<double> dx, std::span<double> dy) const;
  /// Reference-coordinate second derivatives.
  void hessians(const Vec2& xi, std::span<double> dxx, std::span<double> dxy,
                std::span<double> dyy) const;

private:
  void monomials(const Vec2& xi, std::span<double> m) const;

  int k_;
  int dim_;
  std::vector<std::pair<int, int>> exponents_;
  RowMatrix coeffs_; // basis i = sum_j coeffs_(i, j) * monomial j
};

/// Orthonormal Legendre basis of P_k on [0, 1]: sqrt(2n+1) P_n(2t - 1).
class SegmentBasis {
public:
  explicit SegmentBasis(int k);

  int degree() const { return k_; }
  int size() const { return k_ + 1; }

  void values(double t, std::span<double> out) const;
  void derivatives(double t, std::span<double> out) const;

private:
  int k_;
};

/// Table of basis values (points x size, row-major) and, for triangles,
/// reference gradients.
struct BasisTable {
  RowMatrix values;
  RowMatrix dx;
  RowMatrix dy;
};

BasisTable eval_basis(const TriangleBasis& basis, std::span<const Vec2> points);
BasisTable eval_basis(const SegmentBasis& basis, std::span<const double> points);

} // namespace hdgflow
