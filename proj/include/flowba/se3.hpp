// Copyright 2026 flowba authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FLOWBA_SE3_HPP
#define FLOWBA_SE3_HPP

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace flowba {

// Tangent-space increment, rotation block first: [wx wy wz vx vy vz].
// Updates are applied on the left: T <- exp(xi) * T.
using Twist = Eigen::Matrix<double, 6, 1>;

// Rigid transform. Rotation is kept as an orthonormal matrix; quaternions
// appear only at file I/O boundaries.
struct Pose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static Pose identity() { return {}; }

  Eigen::Vector3d operator*(const Eigen::Vector3d& p) const { return rotation * p + translation; }

  Pose operator*(const Pose& other) const {
    return {rotation * other.rotation, rotation * other.translation + translation};
  }

  Pose inverse() const {
    const Eigen::Matrix3d rt = rotation.transpose();
    return {rt, -(rt * translation)};
  }

  Eigen::Matrix4d matrix() const {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.block<3, 3>(0, 0) = rotation;
    m.block<3, 1>(0, 3) = translation;
    return m;
  }
};

inline Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d s;
  s << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return s;
}

// Exponential and logarithm maps of SE(3); log is valid for rotation angles
// strictly below pi.
Pose se3_exp(const Twist& xi);
Twist se3_log(const Pose& pose);

Eigen::Matrix3d so3_exp(const Eigen::Vector3d& omega);
Eigen::Vector3d so3_log(const Eigen::Matrix3d& rotation);

// Adj(T), mapping twists across a frame change: T exp(xi) T^-1 = exp(Adj(T) xi).
Eigen::Matrix<double, 6, 6> se3_adjoint(const Pose& pose);

}  // namespace flowba

#endif  // FLOWBA_SE3_HPP
