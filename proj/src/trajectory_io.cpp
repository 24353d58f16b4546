// Copyright 2026 flowba authors
// SPDX-License-Identifier: Apache-2.0

#include "flowba/trajectory_io.hpp"

#include <Eigen/Geometry>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "flowba/error.hpp"

namespace flowba {

namespace {

bool blank_or_comment(const std::string& line) {
  for (char c : line) {
    if (c == ' ' || c == '\t' || c == '\r') continue;
    return c == '#';
  }
  return true;
}

}  // namespace

Trajectory read_trajectory(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  Trajectory out;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (blank_or_comment(line)) continue;
    std::istringstream fields(line);
    double v[8];
    for (int i = 0; i < 8; ++i)
      if (!(fields >> v[i]))
        throw Error(ErrorCode::ParseError,
                    path + ":" + std::to_string(line_number) + ": expected 8 fields");
    std::string extra;
    if (fields >> extra)
      throw Error(ErrorCode::ParseError,
                  path + ":" + std::to_string(line_number) + ": trailing fields");
    Eigen::Quaterniond q(v[7], v[4], v[5], v[6]);  // (w, x, y, z) from x y z w order
    if (std::abs(q.norm() - 1.0) > 1e-3)
      throw Error(ErrorCode::NonUnitQuaternion,
                  path + ":" + std::to_string(line_number) + ": quaternion norm " +
                      std::to_string(q.norm()));
    TimedPose tp;
    tp.timestamp = v[0];
    tp.pose.rotation = q.normalized().toRotationMatrix();
    tp.pose.translation = Eigen::Vector3d(v[1], v[2], v[3]);
    out.push_back(tp);
  }
  return out;
}

void write_trajectory(const std::string& path, const Trajectory& trajectory) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << "# timestamp tx ty tz qx qy qz qw\n";
  char buf[256];
  for (const TimedPose& tp : trajectory) {
    Eigen::Quaterniond q(tp.pose.rotation);
    if (q.w() < 0.0) q.coeffs() = -q.coeffs();  // canonical sign, same rotation
    std::snprintf(buf, sizeof(buf), "%.6f %.12f %.12f %.12f %.12f %.12f %.12f %.12f\n",
                  tp.timestamp, tp.pose.translation.x(), tp.pose.translation.y(),
                  tp.pose.translation.z(), q.x(), q.y(), q.z(), q.w());
    out << buf;
  }
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path);
}

void write_ply(const std::string& path, const std::vector<Eigen::Vector3d>& points) {
  if (points.empty()) throw Error(ErrorCode::EmptyCloud, "refusing to write empty cloud");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << "ply\n"
      << "format binary_little_endian 1.0\n"
      << "element vertex " << points.size() << "\n"
      << "property float x\n"
      << "property float y\n"
      << "property float z\n"
      << "end_header\n";
  for (const Eigen::Vector3d& p : points) {
    const float xyz[3] = {float(p.x()), float(p.y()), float(p.z())};
    out.write(reinterpret_cast<const char*>(xyz), sizeof(xyz));
  }
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path);
}

std::vector<Eigen::Vector3d> read_ply(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || (line != "ply" && line != "ply\r"))
    throw Error(ErrorCode::ParseError, path + ": missing ply magic");
  size_t count = 0;
  bool header_done = false;
  int property_index = 0;
  const char* expected_props[3] = {"property float x", "property float y", "property float z"};
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line == "end_header") {
      header_done = true;
      break;
    }
    if (line.rfind("comment", 0) == 0) continue;
    if (line == "format binary_little_endian 1.0") continue;
    if (line.rfind("element vertex ", 0) == 0) {
      count = size_t(std::stoull(line.substr(15)));
      continue;
    }
    if (property_index < 3 && line == expected_props[property_index]) {
      ++property_index;
      continue;
    }
    throw Error(ErrorCode::ParseError, path + ": unsupported header line: " + line);
  }
  if (!header_done || property_index != 3)
    throw Error(ErrorCode::ParseError, path + ": incomplete header");
  std::vector<Eigen::Vector3d> points;
  points.reserve(count);
  for (size_t i = 0; i < count; ++i) {
    float xyz[3];
    in.read(reinterpret_cast<char*>(xyz), sizeof(xyz));
    if (!in) throw Error(ErrorCode::ParseError, path + ": truncated vertex data");
    points.emplace_back(double(xyz[0]), double(xyz[1]), double(xyz[2]));
  }
  return points;
}

}  // namespace flowba
