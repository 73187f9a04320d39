// Copyright 2026 The NUTS Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef NUTS_PROJECTION_HPP
#define NUTS_PROJECTION_HPP

#include "nuts/tensor.hpp"

#include <algorithm>

namespace nuts {

/// Euclidean projection of `point` onto the closed l2 ball of radius `radius`
/// centred at `center`: center + (point - center) * min(1, radius / |point - center|).
template <typename DerivedP, typename DerivedC>
Matrix<typename DerivedP::Scalar> l2_project(const Eigen::MatrixBase<DerivedP>& point,
                                             const Eigen::MatrixBase<DerivedC>& center,
                                             typename DerivedP::Scalar radius) {
  using Scalar = typename DerivedP::Scalar;
  require(point.rows() == center.rows() && point.cols() == center.cols(), "l2_project: shape mismatch");
  require(radius > Scalar(0), "l2_project: radius must be positive");
  Matrix<Scalar> offset = point - center;
  const Scalar norm = offset.norm();
  if (norm <= radius) return point;
  offset *= radius / norm;
  return center + offset;
}

}  // namespace nuts

#endif  // NUTS_PROJECTION_HPP
