// Copyright 2026 flowba authors
// SPDX-License-Identifier: Apache-2.0

#include "flowba/keyframe_graph.hpp"

#include <algorithm>
#include <cmath>

#include "flowba/error.hpp"
#include "flowba/residuals.hpp"

namespace flowba {

int CovisGraph::add_node(Keyframe kf) {
  const int id = int(nodes_.size());
  kf.id = id;
  nodes_.push_back(std::move(kf));
  out_.emplace_back();
  return id;
}

void CovisGraph::add_edge(int i, int j) {
  const int n = node_count();
  if (i < 0 || i >= n || j < 0 || j >= n)
    throw Error(ErrorCode::ConfigError, "edge endpoint out of range");
  if (i == j) throw Error(ErrorCode::ConfigError, "self-edge rejected");
  if (has_edge(i, j)) throw Error(ErrorCode::ConfigError, "duplicate edge rejected");
  const Grid<double>& d = nodes_[size_t(i)].depth.values;
  out_[size_t(i)].push_back(int(edges_.size()));
  edges_.emplace_back(i, j, d.width(), d.height());
}

bool CovisGraph::has_edge(int i, int j) const {
  for (int e : out_.at(size_t(i)))
    if (edges_[size_t(e)].j == j) return true;
  return false;
}

void CovisGraph::check() const {
  const int n = node_count();
  if (out_.size() != size_t(n)) throw Error(ErrorCode::ConfigError, "adjacency size mismatch");
  for (size_t e = 0; e < edges_.size(); ++e) {
    const CovisEdge& edge = edges_[e];
    if (edge.i < 0 || edge.i >= n || edge.j < 0 || edge.j >= n)
      throw Error(ErrorCode::ConfigError, "edge endpoint out of range");
    if (edge.i == edge.j) throw Error(ErrorCode::ConfigError, "self-edge present");
    for (size_t f = e + 1; f < edges_.size(); ++f)
      if (edges_[f].i == edge.i && edges_[f].j == edge.j)
        throw Error(ErrorCode::ConfigError, "duplicate edge present");
  }
}

bool admit_keyframe(const GridV2& flow_to_last, const GridMask& valid, double threshold,
                    bool graph_empty) {
  if (graph_empty) return true;
  double sum = 0.0;
  int count = 0;
  for (int idx = 0; idx < flow_to_last.size(); ++idx) {
    if (!valid[idx]) continue;
    sum += flow_to_last[idx].norm();
    ++count;
  }
  if (count == 0) return false;
  return sum / count > threshold;
}

std::vector<std::pair<int, int>> batch_edge_pairs(int frames, int radius) {
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < frames; ++i)
    for (int j = std::max(0, i - radius); j <= std::min(frames - 1, i + radius); ++j)
      if (j != i) pairs.emplace_back(i, j);
  return pairs;
}

std::vector<std::pair<int, int>> online_edge_pairs(int frames, int k) {
  std::vector<std::pair<int, int>> pairs;
  const int latest = frames - 1;
  for (int p = std::max(0, latest - k); p < latest; ++p) {
    pairs.emplace_back(p, latest);
    pairs.emplace_back(latest, p);
  }
  return pairs;
}

IterationTrace outer_iteration(CovisGraph& graph, const Intrinsics& k, const OuterConfig& cfg,
                               double* lambda_io) {
  graph.check();
  const Exec exec = cfg.ba.exec;
  const int n = graph.node_count();

  // 1. Flow refinement under the current masks; confidence from the same volume.
  // With refinement disabled the flow fields are held fixed, confidence
  // included, so the solver sees the observations exactly as given.
  if (cfg.refine_flows) {
    for (CovisEdge& edge : graph.edges()) {
      const Keyframe& src = graph.node(edge.i);
      const Keyframe& dst = graph.node(edge.j);
      const Pose t_ji = dst.pose * src.pose.inverse();
      const PriorFlow prior = geometry_prior_flow(src.prior, t_ji, k, exec);
      const CorrelationVolume corr =
          correlation_volume(src.features, dst.features, edge.flow.flow, cfg.frontend.radius, exec);
      edge.flow.flow = refine_flow(corr, edge.mask, edge.flow.flow, prior, cfg.frontend, exec);
      edge.flow.confidence = predict_confidence(corr, edge.mask, cfg.frontend, exec);
    }
  }

  // 2. Joint pose and depth refinement.
  KeyframeState state;
  state.poses.reserve(size_t(n));
  state.depths.reserve(size_t(n));
  for (int i = 0; i < n; ++i) {
    state.poses.push_back(graph.node(i).pose);
    state.depths.push_back(graph.node(i).depth);
  }
  std::vector<EdgeObservation> obs;
  obs.reserve(graph.edges().size());
  for (const CovisEdge& edge : graph.edges()) obs.push_back({edge.i, edge.j, &edge.flow});
  const BATrace ba_trace = ba_iterate(state, obs, k, cfg.ba, lambda_io);
  for (int i = 0; i < n; ++i) {
    graph.node(i).pose = state.poses[size_t(i)];
    graph.node(i).depth = state.depths[size_t(i)];
  }

  // 3. Residual refresh, then edge and node masks for the next refinement.
  for (CovisEdge& edge : graph.edges()) {
    const EdgeEval eval =
        evaluate_edge(graph.node(edge.i).pose, graph.node(edge.j).pose, graph.node(edge.i).depth,
                      graph.node(edge.j).depth, edge.flow, k, cfg.ba.tau, exec);
    edge.residuals = eval.res;
    if (cfg.enable_edge_mask)
      edge.mask_edge = edge_mask(edge.residuals.r_flow, edge.residuals.valid,
                                 cfg.reliability.tau_edge);
    else
      edge.mask_edge.fill(uint8_t{1});
  }
  std::vector<GridMask> node_masks;
  node_masks.reserve(size_t(n));
  for (int i = 0; i < n; ++i) {
    const Grid<double>& d = graph.node(i).depth.values;
    if (!cfg.enable_node_mask || graph.out_edges(i).empty()) {
      node_masks.emplace_back(d.width(), d.height(), uint8_t{1});
      continue;
    }
    std::vector<const EdgeResiduals*> res;
    for (int e : graph.out_edges(i)) res.push_back(&graph.edges()[size_t(e)].residuals);
    node_masks.push_back(node_mask(res, cfg.reliability.tau_node));
  }
  for (CovisEdge& edge : graph.edges())
    edge.mask = combine(edge.mask_edge, node_masks[size_t(edge.i)]);

  IterationTrace trace;
  for (const BAStepTrace& step : ba_trace.steps) trace.ba_rejected += step.rejected;
  double omega_sum = 0.0, mask_sum = 0.0;
  long valid_count = 0;
  for (const CovisEdge& edge : graph.edges()) {
    const CombinedCost cc =
        combined_cost(edge.residuals, edge.flow.confidence, cfg.ba.huber_delta,
                      cfg.ba.geometry_term);
    trace.cost += cc.total;
    for (int idx = 0; idx < edge.residuals.valid.size(); ++idx) {
      if (!edge.residuals.valid[idx]) continue;
      ++valid_count;
      omega_sum += edge.flow.confidence[idx];
      mask_sum += edge.mask[idx];
    }
  }
  if (valid_count > 0) {
    trace.omega_mean = omega_sum / double(valid_count);
    trace.mask_on_fraction = mask_sum / double(valid_count);
  }
  return trace;
}

}  // namespace flowba
