#pragma once

// Coefficients, sources and boundary data of a coupled free-flow / porous
// flow problem. Empty callables mean zero.

#include <array>
#include <functional>

#include "hdgflow/mesh.hpp"

namespace hdgflow {

/// Condition on one side of the porous exterior boundary.
enum class DarcyBoundary : std::uint8_t { NormalFlux, Pressure };

struct ProblemData {
  double mu = 1.0;    // kinematic viscosity
  double alpha = 1.0; // slip coefficient of the interface law
  double beta = 8.0;  // interior penalty
  bool convection = false;

  /// Permeability tensor, evaluated with the index of the porous cell that
  /// contains x (interface terms pass the porous neighbour).
  std::function<Mat2(int cell, const Vec2& x)> permeability;

  std::function<Vec2(const Vec2& x)> source_s;   // f^s
  std::function<double(const Vec2& x)> source_d; // f^d, with -div u = f^d
  /// u = g on the free-flow exterior boundary.
  std::function<Vec2(const Vec2& x)> velocity_bc;
  /// u . n = g_n on porous sides marked NormalFlux (n outward).
  std::function<double(const Vec2& x, const Vec2& n)> normal_flux_bc;
  /// p = g_p on porous sides marked Pressure.
  std::function<double(const Vec2& x)> pressure_bc;
  /// Data added to the interface force balance; zero for physical problems,
  /// nonzero when a manufactured solution does not satisfy it.
  std::function<Vec2(const Vec2& x, const Vec2& n, const Vec2& tau)> interface_traction;

  std::array<DarcyBoundary, 4> darcy_sides{DarcyBoundary::NormalFlux, DarcyBoundary::NormalFlux,
                                           DarcyBoundary::NormalFlux, DarcyBoundary::NormalFlux};

  bool has_pressure_boundary() const;
  /// Throws std::invalid_argument on non-positive parameters or a missing
  /// permeability.
  void validate() const;
};

inline double default_penalty(int k) { return 8.0 * k * k; }

/// kappa = value * I
std::function<Mat2(int, const Vec2&)> isotropic_permeability(std::function<double(int, const Vec2&)> value);

} // namespace hdgflow
