// Copyright 2026 flowba authors
// SPDX-License-Identifier: Apache-2.0

#include "flowba/reliability.hpp"

#include "flowba/error.hpp"

namespace flowba {

GridMask edge_mask(const GridV2& r_flow, const GridMask& valid, double tau_edge) {
  GridMask out(r_flow.width(), r_flow.height(), uint8_t{0});
  for (int64_t p = 0; p < r_flow.size(); ++p) {
    out[p] = (valid[p] && r_flow[p].norm() < tau_edge) ? 1 : 0;
  }
  return out;
}

GridMask node_mask(const std::vector<const EdgeResiduals*>& out_edges, double tau_node) {
  if (out_edges.empty()) {
    throw Error(ErrorCode::NoNeighbors, "node mask needs at least one out-edge");
  }
  const int w = out_edges.front()->r_geo.width();
  const int h = out_edges.front()->r_geo.height();
  GridMask out(w, h, uint8_t{0});
  const double n = double(out_edges.size());
  for (int64_t p = 0; p < out.size(); ++p) {
    double sum = 0.0;
    for (const EdgeResiduals* e : out_edges) {
      sum += e->geo_valid[p] ? e->r_geo[p] : tau_node;
    }
    out[p] = (sum / n < tau_node) ? 1 : 0;
  }
  return out;
}

GridMask combine(const GridMask& edge, const GridMask& node) {
  GridMask out(edge.width(), edge.height(), uint8_t{0});
  for (int64_t p = 0; p < out.size(); ++p) out[p] = (edge[p] && node[p]) ? 1 : 0;
  return out;
}

}  // namespace flowba
