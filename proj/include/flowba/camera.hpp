// Copyright 2026 flowba authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FLOWBA_CAMERA_HPP
#define FLOWBA_CAMERA_HPP

#include <Eigen/Core>
#include <optional>

#include "flowba/error.hpp"
#include "flowba/se3.hpp"

namespace flowba {

// Continuous image coordinate, u along width, v along height.
using Pixel = Eigen::Vector2d;

// Cheirality cutoff: points with camera z at or below this are rejected and
// excluded from residuals through validity masks.
constexpr double kMinDepth = 1e-3;

struct Intrinsics {
  double fx = 0, fy = 0;
  double cx = 0, cy = 0;
  int width = 0, height = 0;

  bool valid() const {
    return fx > 0 && fy > 0 && cx > 0 && cx < width && cy > 0 && cy < height;
  }
  bool in_bounds(const Pixel& p) const {
    return p.x() >= 0.0 && p.x() <= width - 1.0 && p.y() >= 0.0 && p.y() <= height - 1.0;
  }
};

// Pinhole projection. Throws Error(DepthBehindCamera) at or behind the
// cheirality cutoff; try_project is the noexcept form for dense loops.
Pixel project(const Eigen::Vector3d& point, const Intrinsics& k);
bool try_project(const Eigen::Vector3d& point, const Intrinsics& k, Pixel& out);

// Inverse projection: pixel plus depth to a camera-frame point. Depth is
// z-depth, not ray length. Throws Error(NonPositiveDepth) for d <= 0.
Eigen::Vector3d backproject(const Pixel& pixel, double depth, const Intrinsics& k);

// Unit-depth ray (z component 1) through a pixel.
inline Eigen::Vector3d pixel_ray(const Pixel& pixel, const Intrinsics& k) {
  return {(pixel.x() - k.cx) / k.fx, (pixel.y() - k.cy) / k.fy, 1.0};
}

// Projection of a back-projected pixel through a relative transform, with
// analytic derivatives. j_pose is taken w.r.t. the left-multiplied twist of
// the transform, j_depth w.r.t. the source depth.
struct TransformProjection {
  bool valid = false;            // false when the mapped point fails cheirality
  Pixel pixel = Pixel::Zero();
  Eigen::Vector3d point = Eigen::Vector3d::Zero();  // transformed camera-frame point
  Eigen::Matrix<double, 2, 6> j_pose = Eigen::Matrix<double, 2, 6>::Zero();
  Eigen::Vector2d j_depth = Eigen::Vector2d::Zero();
};

TransformProjection transform_project(const Pixel& pixel, double depth, const Pose& transform,
                                      const Intrinsics& k);

// d pi / d point at a camera-frame point (2x3).
Eigen::Matrix<double, 2, 3> projection_jacobian(const Eigen::Vector3d& point, const Intrinsics& k);

}  // namespace flowba

#endif  // FLOWBA_CAMERA_HPP
