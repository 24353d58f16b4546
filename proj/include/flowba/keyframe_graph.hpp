// Copyright 2026 flowba authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FLOWBA_KEYFRAME_GRAPH_HPP
#define FLOWBA_KEYFRAME_GRAPH_HPP

#include <utility>
#include <vector>

#include "flowba/ba_solver.hpp"
#include "flowba/flow_frontend.hpp"
#include "flowba/reliability.hpp"

namespace flowba {

// Keyframes, directed covisibility edges, and the outer schedule: one flow
// refinement pass, two damped Gauss-Newton steps, then a residual and mask
// refresh feeding the next refinement.

struct Keyframe {
  int id = -1;
  Pose pose;  // world-to-camera
  DepthMap depth;
  GridF features;
  GeometryPrior prior;
};

struct CovisEdge {
  int i = -1;
  int j = -1;
  FlowField flow;
  EdgeResiduals residuals;
  GridMask mask_edge;
  GridMask mask;  // edge mask AND source-node mask; drives refinement

  CovisEdge() = default;
  CovisEdge(int i_, int j_, int w, int h)
      : i(i_), j(j_), flow(i_, j_, w, h), residuals(w, h),
        mask_edge(w, h, uint8_t{1}), mask(w, h, uint8_t{1}) {}
};

class CovisGraph {
 public:
  // Node ids are dense indices assigned in insertion order.
  int add_node(Keyframe kf);
  void add_edge(int i, int j);  // throws Error(ConfigError) on bad endpoints or self-edge

  int node_count() const { return int(nodes_.size()); }
  Keyframe& node(int id) { return nodes_.at(size_t(id)); }
  const Keyframe& node(int id) const { return nodes_.at(size_t(id)); }

  std::vector<CovisEdge>& edges() { return edges_; }
  const std::vector<CovisEdge>& edges() const { return edges_; }
  bool has_edge(int i, int j) const;
  const std::vector<int>& out_edges(int i) const { return out_.at(size_t(i)); }

  // Structural invariants: endpoints exist, no self-edges, no duplicates.
  void check() const;

 private:
  std::vector<Keyframe> nodes_;
  std::vector<CovisEdge> edges_;
  std::vector<std::vector<int>> out_;  // node -> edge indices with i == node
};

struct GraphConfig {
  double admit_threshold = 2.5;  // px mean flow to the last keyframe
  int online_k = 3;              // connect a new keyframe to its k latest predecessors
  int batch_radius = 2;          // batch edges span |i - j| <= radius
};

// Admission: accept when the graph is empty or the mean flow magnitude over
// valid pixels exceeds the threshold.
bool admit_keyframe(const GridV2& flow_to_last, const GridMask& valid, double threshold,
                    bool graph_empty);

// Directed pairs (i, j), i != j, |i - j| <= radius; 6 frames at radius 2
// give the 18-edge batch topology.
std::vector<std::pair<int, int>> batch_edge_pairs(int frames, int radius);

// Bidirectional pairs linking new node `frames - 1` to its k predecessors.
std::vector<std::pair<int, int>> online_edge_pairs(int frames, int k);

struct OuterConfig {
  FrontendConfig frontend;
  BAConfig ba;
  ReliabilityConfig reliability;
  bool enable_edge_mask = true;
  bool enable_node_mask = true;
  bool refine_flows = true;  // false holds flows and confidence exactly as given
};

struct IterationTrace {
  double cost = 0.0;              // combined cost at the refreshed state
  double mask_on_fraction = 0.0;  // mean of m over valid pixels
  double omega_mean = 0.0;        // mean confidence over valid pixels
  int ba_rejected = 0;            // damping rejections during the BA steps
};

// One closed-loop iteration: refine every edge's flow under the current
// masks, run the BA steps, then refresh residuals and masks from the new
// state. lambda_io carries damping across iterations when given.
IterationTrace outer_iteration(CovisGraph& graph, const Intrinsics& k, const OuterConfig& cfg,
                               double* lambda_io = nullptr);

}  // namespace flowba

#endif  // FLOWBA_KEYFRAME_GRAPH_HPP
