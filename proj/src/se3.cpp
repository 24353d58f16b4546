// Copyright 2026 flowba authors
// SPDX-License-Identifier: Apache-2.0

#include "flowba/se3.hpp"

#include <cmath>

namespace flowba {

namespace {

// Series switch point. Below this angle the closed forms lose digits to
// cancellation in (1 - cos) and (theta - sin), the truncated series is exact
// to well under 1e-12 there.
constexpr double kSmallAngle = 1e-4;

struct RotationCoeffs {
  double a;  // sin(t)/t
  double b;  // (1 - cos(t))/t^2
  double c;  // (t - sin(t))/t^3
};

RotationCoeffs rotation_coeffs(double theta) {
  RotationCoeffs k;
  const double t2 = theta * theta;
  if (theta < kSmallAngle) {
    k.a = 1.0 - t2 / 6.0 * (1.0 - t2 / 20.0);
    k.b = 0.5 - t2 / 24.0 * (1.0 - t2 / 30.0);
    k.c = 1.0 / 6.0 - t2 / 120.0 * (1.0 - t2 / 42.0);
  } else {
    k.a = std::sin(theta) / theta;
    k.b = (1.0 - std::cos(theta)) / t2;
    k.c = (theta - std::sin(theta)) / (t2 * theta);
  }
  return k;
}

}  // namespace

Eigen::Matrix3d so3_exp(const Eigen::Vector3d& omega) {
  const double theta = omega.norm();
  const RotationCoeffs k = rotation_coeffs(theta);
  const Eigen::Matrix3d w = skew(omega);
  return Eigen::Matrix3d::Identity() + k.a * w + k.b * w * w;
}

Eigen::Vector3d so3_log(const Eigen::Matrix3d& rotation) {
  // Quaternion route: stable over the whole angle range below pi.
  Eigen::Quaterniond q(rotation);
  if (q.w() < 0) q.coeffs() = -q.coeffs();
  const Eigen::Vector3d v = q.vec();
  const double n = v.norm();
  if (n < 1e-9) {
    // theta/sin(theta/2) ~ 2/w reduces to first order here
    return 2.0 / q.w() * v;
  }
  const double theta = 2.0 * std::atan2(n, q.w());
  return (theta / n) * v;
}

Pose se3_exp(const Twist& xi) {
  const Eigen::Vector3d omega = xi.head<3>();
  const Eigen::Vector3d v = xi.tail<3>();
  const double theta = omega.norm();
  const RotationCoeffs k = rotation_coeffs(theta);
  const Eigen::Matrix3d w = skew(omega);
  const Eigen::Matrix3d w2 = w * w;
  Pose out;
  out.rotation = Eigen::Matrix3d::Identity() + k.a * w + k.b * w2;
  const Eigen::Matrix3d V = Eigen::Matrix3d::Identity() + k.b * w + k.c * w2;
  out.translation = V * v;
  return out;
}

Twist se3_log(const Pose& pose) {
  const Eigen::Vector3d omega = so3_log(pose.rotation);
  const double theta = omega.norm();
  const Eigen::Matrix3d w = skew(omega);
  const Eigen::Matrix3d w2 = w * w;
  // V^-1 = I - w/2 + d * w^2 with d = (1 - a/(2b)) / theta^2
  double d;
  if (theta < kSmallAngle) {
    const double t2 = theta * theta;
    d = 1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0;
  } else {
    const RotationCoeffs k = rotation_coeffs(theta);
    d = (1.0 - k.a / (2.0 * k.b)) / (theta * theta);
  }
  const Eigen::Matrix3d v_inv = Eigen::Matrix3d::Identity() - 0.5 * w + d * w2;
  Twist xi;
  xi.head<3>() = omega;
  xi.tail<3>() = v_inv * pose.translation;
  return xi;
}

Eigen::Matrix<double, 6, 6> se3_adjoint(const Pose& pose) {
  Eigen::Matrix<double, 6, 6> adj = Eigen::Matrix<double, 6, 6>::Zero();
  adj.block<3, 3>(0, 0) = pose.rotation;
  adj.block<3, 3>(3, 3) = pose.rotation;
  adj.block<3, 3>(3, 0) = skew(pose.translation) * pose.rotation;
  return adj;
}

}  // namespace flowba
