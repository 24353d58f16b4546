// Copyright 2026 flowba authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FLOWBA_TYPES_HPP
#define FLOWBA_TYPES_HPP

#include <Eigen/Core>

#include "flowba/grid.hpp"

namespace flowba {

// Per-keyframe dense depth at working resolution, meters. Pixels can be
// flagged invalid (no surface along the ray); values there are placeholders.
struct DepthMap {
  int frame_id = -1;
  GridF values;
  GridMask valid;

  DepthMap() = default;
  DepthMap(int frame, int w, int h)
      : frame_id(frame), values(w, h, 1.0), valid(w, h, uint8_t{1}) {}
};

// Dense 2D displacement field for a directed keyframe pair, pixels, plus a
// per-pixel confidence in [0, 1].
struct FlowField {
  int source_id = -1;
  int target_id = -1;
  GridV2 flow;
  GridF confidence;

  FlowField() = default;
  FlowField(int source, int target, int w, int h)
      : source_id(source),
        target_id(target),
        flow(w, h, Eigen::Vector2d::Zero()),
        confidence(w, h, 0.5) {}
};

// Residual rasters for one directed edge (i, j), defined on frame i's grid.
//   valid      forward mapping passed cheirality, flow residual defined
//   geo_valid  round trip fully defined (in-bounds target sample, both
//              cheirality checks); subset of valid
//   omega_set  geo_valid pixels passing the consistency gate; subset of
//              geo_valid, so of valid as well
struct EdgeResiduals {
  GridV2 r_flow;
  GridF r_geo;
  GridMask valid;
  GridMask geo_valid;
  GridMask omega_set;

  EdgeResiduals() = default;
  EdgeResiduals(int w, int h)
      : r_flow(w, h, Eigen::Vector2d::Zero()),
        r_geo(w, h, 0.0),
        valid(w, h, uint8_t{0}),
        geo_valid(w, h, uint8_t{0}),
        omega_set(w, h, uint8_t{0}) {}
};

}  // namespace flowba

#endif  // FLOWBA_TYPES_HPP
