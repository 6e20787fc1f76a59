#pragma once

#include <Eigen/Dense>

namespace hdgflow {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

} // namespace hdgflow
