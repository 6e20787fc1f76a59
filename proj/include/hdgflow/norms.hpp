#pragma once

// Mesh-dependent norms of discrete velocity and pressure pairs.

#include "hdgflow/fespace.hpp"

namespace hdgflow {

struct TripleNorms {
  double v_s = 0.0;                  // free-flow part
  double v_d = 0.0;                  // porous part
  double interface_tangential = 0.0; // ||vbar . tau|| on the interface
  double v = 0.0;                    // sqrt of the sum of squares of the three above
  double p = 0.0;                    // pressure triple norm
};

/// |||(v, vbar)|||_v and |||(q, qbar)|||_p of a discrete field, with degree
/// 3k+2 quadrature.
///   v,s^2 = sum_K ||grad v||_K^2 + h_K^-1 ||v - vbar||_dK^2      (free-flow cells)
///   v,d^2 = ||v||_div^2 + sum_F h_F^-1 ||[v.n]||_F^2
///           + sum_K h_K^-1 ||(v - vbar).n||_{dK on interface}^2   (porous cells)
///   p^2   = ||q||^2 + sum_K h_K ||qbar^j||_dK^2
TripleNorms discrete_triple_norms(const DiscreteField& field);

} // namespace hdgflow
