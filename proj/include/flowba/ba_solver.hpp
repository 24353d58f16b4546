// Copyright 2026 flowba authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FLOWBA_BA_SOLVER_HPP
#define FLOWBA_BA_SOLVER_HPP

#include <limits>
#include <vector>

#include "flowba/residuals.hpp"

namespace flowba {

// Damped Gauss-Newton over keyframe poses and dense depths. Depth variables
// are eliminated through their (block-)diagonal Hessian; the reduced pose
// system is solved densely. Poses are world-to-camera with tangent updates
// applied on the left: P <- exp(xi) * P.

struct BAConfig {
  int inner_ba_steps = 2;
  double lambda0 = 1e-4;
  double lambda_grow = 10.0;
  double lambda_shrink = 0.5;
  double lambda_max = 1e8;
  double lambda_min = 1e-10;
  // Stall exit: a candidate whose cost increase stays within the relative
  // jitter band and whose update is this small ends the step with the state
  // kept, instead of escalating damping at a converged floor.
  double stall_cost_tol = 1e-12;
  double stall_step_tol = 1e-7;
  double depth_min = 1e-2;   // clamp range applied at retraction, meters
  double depth_max = 1e3;
  double huber_delta = 1.0;  // px
  double tau = 1.0;          // geometry gate, px
  bool geometry_term = true;
  std::vector<int> fixed_frames = {0};
  // Monocular scale gauge: the mean inverse depth of this frame is anchored
  // through a stiff rank-1 term, eliminated exactly in the Schur step. With
  // anchor_target set, the spring pulls toward that value and its penalty
  // joins the step objective; left NaN it only damps the scale direction of
  // the current linearization, which lets scale creep over many steps
  // because the geometry residual is measured in depth units and shrinks
  // with the scene. -1 disables.
  int scale_anchor_frame = 0;
  double gauge_weight = 1e6;
  double anchor_target = std::numeric_limits<double>::quiet_NaN();
  Exec exec = Exec::Parallel;
};

// Mean of 1/depth over valid pixels; the quantity the gauge anchor pins.
// Returns 0 when no pixel is valid.
double mean_inverse_depth(const DepthMap& depth);

struct KeyframeState {
  std::vector<Pose> poses;  // world-to-camera
  std::vector<DepthMap> depths;
};

struct EdgeObservation {
  int i = -1;
  int j = -1;
  const FlowField* flow = nullptr;  // displacement + confidence for (i -> j)
};

// Structures captured at a linearization point and held fixed through the
// accept/reject cycle of one step: pixel validity, the geometry gate, the
// bilinear depth_j samples, and the confidence weights. The cost these
// define is the objective each step must not increase.
struct FrozenEdge {
  int i = -1;
  int j = -1;
  const FlowField* flow = nullptr;
  EdgeResiduals res;
  GridF dj;
};

std::vector<FrozenEdge> freeze_edges(const KeyframeState& state,
                                     const std::vector<EdgeObservation>& edges,
                                     const Intrinsics& k, const BAConfig& config);

double frozen_cost(const KeyframeState& state, const std::vector<FrozenEdge>& frozen,
                   const Intrinsics& k, const BAConfig& config);

struct LinearSystem {
  std::vector<int> pose_slot;  // frame -> reduced slot, -1 when fixed
  int num_pose_vars = 0;       // 6 * free frames
  Eigen::MatrixXd h_pose;
  Eigen::VectorXd g_pose;

  struct FrameDepthBlock {
    std::vector<int> slots;  // pose slots coupled to this frame's depths
    Eigen::VectorXd h_diag;  // per pixel
    Eigen::VectorXd g;
    Eigen::MatrixXd cross;   // row u: [J_p^T w J_d]^T per slot, 6 each
    std::vector<uint8_t> active;
  };
  std::vector<FrameDepthBlock> depth;

  int anchor_frame = -1;
  double anchor_alpha = 0.0;
  Eigen::VectorXd anchor_v;  // gradient of mean inverse depth, anchor frame

  int64_t valid_pixel_count = 0;
};

// Throws Error(EmptySystem) when no pixel survives the validity masks.
LinearSystem linearize(const KeyframeState& state, const std::vector<FrozenEdge>& frozen,
                       const Intrinsics& k, const BAConfig& config);

struct Delta {
  std::vector<Twist> pose;             // per frame; zero for fixed frames
  std::vector<Eigen::VectorXd> depth;  // per frame, one entry per pixel
};

// Depth elimination + dense reduced pose solve + back-substitution. Throws
// Error(SingularSystem) when the damped reduced system cannot be solved to
// 1e-8 relative residual.
Delta schur_solve(const LinearSystem& sys, double lambda);

// Reference route: assembles the full (pose + depth) system as one dense
// matrix and solves it directly. Intended for small instances in tests.
Delta dense_solve(const LinearSystem& sys, double lambda);

KeyframeState retract(const KeyframeState& state, const Delta& delta, const BAConfig& config);

struct BAStepTrace {
  double cost_before = 0.0;
  double cost_after = 0.0;
  double lambda = 0.0;
  int rejected = 0;
};

struct BATrace {
  std::vector<BAStepTrace> steps;
};

// Runs config.inner_ba_steps linearize -> solve -> retract cycles with
// Levenberg damping (reject and raise lambda on cost increase). lambda_io,
// when given, carries the damping state across calls. Throws
// Error(MaxDampingExceeded) past lambda_max.
BATrace ba_iterate(KeyframeState& state, const std::vector<EdgeObservation>& edges,
                   const Intrinsics& k, const BAConfig& config, double* lambda_io = nullptr);

}  // namespace flowba

#endif  // FLOWBA_BA_SOLVER_HPP
