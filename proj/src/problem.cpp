#include "hdgflow/problem.hpp"

#include <algorithm>
#include <stdexcept>

namespace hdgflow {

bool ProblemData::has_pressure_boundary() const
{
  return std::any_of(darcy_sides.begin(), darcy_sides.end(),
                     [](DarcyBoundary b) { return b == DarcyBoundary::Pressure; });
}

void ProblemData::validate() const
{
  if (!(mu > 0.0))
    throw std::invalid_argument("ProblemData: viscosity must be positive");
  if (!(alpha > 0.0))
    throw std::invalid_argument("ProblemData: alpha must be positive");
  if (!(beta > 0.0))
    throw std::invalid_argument("ProblemData: penalty beta must be positive");
  if (!permeability)
    throw std::invalid_argument("ProblemData: permeability is not set");
}

std::function<Mat2(int, const Vec2&)> isotropic_permeability(std::function<double(int, const Vec2&)> value)
{
  return [value = std::move(value)](int cell, const Vec2& x) -> Mat2 {
    return value(cell, x) * Mat2::Identity();
  };
}

} // namespace hdgflow
