// Copyright 2026 flowba authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FLOWBA_TRAJECTORY_IO_HPP
#define FLOWBA_TRAJECTORY_IO_HPP

#include <Eigen/Core>
#include <string>
#include <vector>

#include "flowba/trajectory.hpp"

namespace flowba {

// Text trajectory format: one "timestamp tx ty tz qx qy qz qw" line per pose
// (Hamilton quaternion, camera-to-world), '#' starts a comment line. Reading
// renormalizes quaternions whose norm is within 1e-3 of 1 and throws
// Error(NonUnitQuaternion) beyond that; malformed lines throw
// Error(ParseError) naming the line number.
Trajectory read_trajectory(const std::string& path);
void write_trajectory(const std::string& path, const Trajectory& trajectory);

// Binary little-endian PLY with float32 x, y, z vertex properties.
// Writing an empty cloud throws Error(EmptyCloud); unreadable or malformed
// files throw Error(IoError) / Error(ParseError).
void write_ply(const std::string& path, const std::vector<Eigen::Vector3d>& points);
std::vector<Eigen::Vector3d> read_ply(const std::string& path);

}  // namespace flowba

#endif  // FLOWBA_TRAJECTORY_IO_HPP
