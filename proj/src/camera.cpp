// Copyright 2026 flowba authors
// SPDX-License-Identifier: Apache-2.0

#include "flowba/camera.hpp"

namespace flowba {

bool try_project(const Eigen::Vector3d& point, const Intrinsics& k, Pixel& out) {
  if (!(point.z() > kMinDepth)) return false;
  const double iz = 1.0 / point.z();
  out.x() = k.fx * point.x() * iz + k.cx;
  out.y() = k.fy * point.y() * iz + k.cy;
  return true;
}

Pixel project(const Eigen::Vector3d& point, const Intrinsics& k) {
  Pixel out;
  if (!try_project(point, k, out)) {
    throw Error(ErrorCode::DepthBehindCamera, "point z <= cheirality cutoff");
  }
  return out;
}

Eigen::Vector3d backproject(const Pixel& pixel, double depth, const Intrinsics& k) {
  if (!(depth > 0.0)) {
    throw Error(ErrorCode::NonPositiveDepth, "depth must be positive");
  }
  return depth * pixel_ray(pixel, k);
}

Eigen::Matrix<double, 2, 3> projection_jacobian(const Eigen::Vector3d& point, const Intrinsics& k) {
  const double iz = 1.0 / point.z();
  const double iz2 = iz * iz;
  Eigen::Matrix<double, 2, 3> j;
  j << k.fx * iz, 0.0, -k.fx * point.x() * iz2,
       0.0, k.fy * iz, -k.fy * point.y() * iz2;
  return j;
}

TransformProjection transform_project(const Pixel& pixel, double depth, const Pose& transform,
                                      const Intrinsics& k) {
  TransformProjection out;
  const Eigen::Vector3d ray = pixel_ray(pixel, k);
  const Eigen::Vector3d x = depth * ray;
  const Eigen::Vector3d y = transform * x;
  out.point = y;
  if (!try_project(y, k, out.pixel)) return out;
  out.valid = true;

  const Eigen::Matrix<double, 2, 3> dpi = projection_jacobian(y, k);
  // Left perturbation T <- exp(xi) T moves y by omega x y + v.
  out.j_pose.block<2, 3>(0, 0) = -dpi * skew(y);
  out.j_pose.block<2, 3>(0, 3) = dpi;
  // x scales linearly with depth, so dy/dd = R * ray.
  out.j_depth = dpi * (transform.rotation * ray);
  return out;
}

}  // namespace flowba
