#pragma once

// Manufactured solutions, error norms, conservation residuals and mesh
// convergence studies.

#include <iosfwd>
#include <string>
#include <vector>

#include "hdgflow/norms.hpp"
#include "hdgflow/solver.hpp"

namespace hdgflow {

enum class KappaChoice { Kappa1, Kappa2 };

/// Exact solution with closed-form derivatives. Permeability is isotropic,
/// kappa(x) I. Free-flow fields are defined above the interface, porous
/// fields below.
struct ManufacturedCase {
  std::string name;
  DomainSpec domain;
  double mu = 1.0;
  double alpha = 1.0;
  bool convection = false;

  std::function<Vec2(const Vec2&)> u_s;
  std::function<Mat2(const Vec2&)> grad_u_s;                // (i, j) = d_j u_i
  std::function<std::array<Mat2, 2>(const Vec2&)> hess_u_s; // Hessian of u_1, u_2
  std::function<double(const Vec2&)> p_s;
  std::function<Vec2(const Vec2&)> grad_p_s;
  std::function<double(const Vec2&)> p_d;
  std::function<Vec2(const Vec2&)> grad_p_d;
  std::function<Mat2(const Vec2&)> hess_p_d;
  std::function<double(const Vec2&)> kappa;
  std::function<Vec2(const Vec2&)> grad_kappa;

  /// u^d = -kappa / mu grad p^d
  Vec2 u_d(const Vec2& x) const;
  /// f^d = -div u^d
  double f_d(const Vec2& x) const;
  /// f^s = (u.grad) u - mu lap u + grad p (convection term only when on)
  Vec2 f_s(const Vec2& x) const;
  /// Residual of the interface force balance and slip law of the exact
  /// solution: 2 mu eps(u^s) n - p^s n + alpha mu / sqrt(kappa) (u^s.tau) tau + p^d n.
  Vec2 interface_traction(const Vec2& x, const Vec2& n, const Vec2& tau) const;

  Vec2 velocity(Subdomain side, const Vec2& x) const { return side == Subdomain::Stokes ? u_s(x) : u_d(x); }
  double pressure(Subdomain side, const Vec2& x) const { return side == Subdomain::Stokes ? p_s(x) : p_d(x); }
};

/// Smooth solution on [0,1] x [-1,1] with the interface at y = 0, the
/// permeability kappa1 = alpha^2 (pi x + 1)^2 / 4 or
/// kappa2 = kappa1 exp(-15 sin^2(10 y)).
ManufacturedCase make_example1(double mu, KappaChoice kappa, double alpha = 1.0, bool convection = true);

/// Globally polynomial solution with u in P_k (P_1 for k = 1, P_2 otherwise)
/// and p in P_{k-1}, on the same geometry with kappa = 1. The discrete
/// solution reproduces it exactly.
ManufacturedCase make_polynomial_case(int k, double mu, double alpha = 1.0);

/// Problem data for a manufactured case: Dirichlet velocity on the
/// free-flow boundary, normal flux on the porous boundary, interface
/// traction data, zero-mean pressure.
ProblemData to_problem_data(const ManufacturedCase& mc, double beta);

/// Domain mean of the exact pressure.
double exact_pressure_mean(const ManufacturedCase& mc, const Mesh& mesh, int degree);

struct ErrorReport {
  double err_E_u = 0.0;  // sqrt(sum_{K free} |e|_{1,K}^2 + ||e||_{porous}^2)
  double err_L2_u = 0.0; // ||u - u_h||
  double err_L2_p = 0.0; // ||p - mean(p) - p_h||
  TripleNorms discrete;  // triple norms of (interpolant - discrete solution)
};

/// Errors of a discrete solution against a manufactured case, degree 3k+2
/// quadrature. The exact pressure is shifted to zero mean when the layout
/// carries the mean multiplier.
ErrorReport error_norms(const ManufacturedCase& mc, const DiscreteField& uh);

/// Interpolant of the exact solution in the discrete space: BDM velocity,
/// facet projections and cell pressure projection.
DiscreteField interpolate_exact(const ManufacturedCase& mc, std::shared_ptr<const SpaceLayout> layout);

/// |||(u - Pi_V u, u - Pibar_V u)|||_{v'} including the h_K^2 |.|_{2,K}^2 term.
double interpolation_error_vprime(const ManufacturedCase& mc, std::shared_ptr<const SpaceLayout> layout);

struct ConservationReport {
  double velocity_l2 = 0.0;    // ||u_h||
  double divergence = 0.0;     // max |div u_h + chi^d Pi_Q f^d|
  double normal_jump = 0.0;    // max |[u_h . n]| on interior and interface facets
  double interface_trace = 0.0; // max |u_h . n - ubar_h . n| on interface facets, both sides
  double boundary_flux = 0.0;  // integral of u_h . n over the boundary
  double multiplier = 0.0;

  /// Largest of the three pointwise residuals divided by ||u_h|| (absolute
  /// when u_h = 0).
  double max_relative() const;
};

ConservationReport conservation_report(const DiscreteField& uh, const FormContext& ctx);

struct LevelResult {
  int level = 0;
  double h = 0.0;
  int dofs = 0;
  ErrorReport errors;
  SolveReport solve;
  ConservationReport conservation;
};

struct ConvergenceReport {
  std::vector<LevelResult> levels;

  /// log2(e_l / e_{l+1}) for l >= 1, NaN where either error is <= 1e-14.
  static double rate(double coarse, double fine);
  double rate_E_u(std::size_t level) const;
  double rate_L2_u(std::size_t level) const;
  double rate_L2_p(std::size_t level) const;

  /// Header plus one row per level; rates of the first level are empty.
  void write_csv(std::ostream& out) const;
};

struct ConvergenceOptions {
  int k = 1;
  int levels = 4;
  int coarse_n = 4; // cells per unit length on the coarsest level
  double beta = 0.0; // 0 selects 8 k^2
  SolverParams solver;
  /// Called with each level's solution before the next level starts.
  std::function<void(const LevelResult&, const DiscreteField&, const FormContext&)> on_level;
};

/// Solves the case on coarse_n, 2 coarse_n, ... and collects errors, rates
/// and conservation residuals. Requires levels >= 3 (>= 1 when
/// allow_short is set, used by tests).
ConvergenceReport run_convergence(const ManufacturedCase& mc, const ConvergenceOptions& options,
                                  bool allow_short = false);

} // namespace hdgflow
