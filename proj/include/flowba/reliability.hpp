// Copyright 2026 flowba authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FLOWBA_RELIABILITY_HPP
#define FLOWBA_RELIABILITY_HPP

#include <vector>

#include "flowba/types.hpp"

namespace flowba {

struct ReliabilityConfig {
  double tau_edge = 5.0;  // px
  double tau_node = 5.0;  // px
};

// Per-edge mask: 1 iff the pixel is valid and its flow residual magnitude is
// below tau_edge.
GridMask edge_mask(const GridV2& r_flow, const GridMask& valid, double tau_edge);

// Per-frame mask over the frame's out-edges: 1 iff the mean geometry
// residual stays below tau_node. Pixels a neighbor cannot verify (geo-invalid
// there) contribute a saturated tau_node instead of being skipped, so
// unverifiable evidence counts against reliability without hard-vetoing.
// Throws Error(NoNeighbors) when the edge list is empty.
GridMask node_mask(const std::vector<const EdgeResiduals*>& out_edges, double tau_node);

// Pixelwise AND.
GridMask combine(const GridMask& edge, const GridMask& node);

}  // namespace flowba

#endif  // FLOWBA_RELIABILITY_HPP
