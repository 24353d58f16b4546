// Copyright 2026 flowba authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FLOWBA_TRAJECTORY_HPP
#define FLOWBA_TRAJECTORY_HPP

#include <vector>

#include "flowba/se3.hpp"

namespace flowba {

// Timestamped camera-to-world pose sample.
struct TimedPose {
  double timestamp = 0.0;
  Pose pose;
};

using Trajectory = std::vector<TimedPose>;

}  // namespace flowba

#endif  // FLOWBA_TRAJECTORY_HPP
