// Copyright 2026 flowba authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FLOWBA_RESIDUALS_HPP
#define FLOWBA_RESIDUALS_HPP

#include "flowba/camera.hpp"
#include "flowba/parallel.hpp"
#include "flowba/types.hpp"

namespace flowba {

// Huber kernel, knee at delta. cost is rho, weight is rho'(r)/r, the factor
// that turns squared-error normal equations into the robust ones.
inline double huber_cost(double r, double delta) {
  const double a = std::abs(r);
  return a <= delta ? 0.5 * r * r : delta * (a - 0.5 * delta);
}

inline double huber_weight(double r, double delta) {
  const double a = std::abs(r);
  return a <= delta ? 1.0 : delta / a;
}

// Per-edge evaluation at the current state. Poses are world-to-camera.
// res.r_flow(u) = u_proj - (u + F(u)) on valid pixels.
// res.r_geo(u)  = round-trip error: forward-project u with depth_i, sample
//                depth_j bilinearly at the target, back-project with the
//                inverse transform, measure the pixel gap. Defined on
//                geo_valid; omega_set gates it at r_geo < tau.
// dj holds the bilinear depth_j samples so callers can relinearize against
// the exact values this evaluation used.
struct EdgeEval {
  EdgeResiduals res;
  GridF dj;
};

EdgeEval evaluate_edge(const Pose& pose_i, const Pose& pose_j, const DepthMap& depth_i,
                       const DepthMap& depth_j, const FlowField& flow, const Intrinsics& k,
                       double tau, Exec exec = Exec::Parallel);

// Narrow views matching the two residual definitions individually.
struct FlowResidualResult {
  GridV2 r;
  GridMask valid;
};
FlowResidualResult flow_residual(const Pose& pose_i, const Pose& pose_j, const DepthMap& depth_i,
                                 const FlowField& flow, const Intrinsics& k,
                                 Exec exec = Exec::Parallel);

struct GeometryResidualResult {
  GridF r;
  GridMask valid;  // round trip defined
  GridMask omega;  // r < tau
};
GeometryResidualResult geometry_residual(const Pose& pose_i, const Pose& pose_j,
                                         const DepthMap& depth_i, const DepthMap& depth_j,
                                         const Intrinsics& k, double tau,
                                         Exec exec = Exec::Parallel);

// Confidence-weighted robust combination:
//   cost(u) = w(u) * rho(|r_flow(u)|)            on valid
//           + (1 - w(u)) * rho(r_geo(u))         added on omega_set
// w_flow / w_geo are the per-pixel scalar weights (confidence times IRLS
// factor) that the normal equations consume; zero where a term is gated off.
struct CombinedCost {
  GridF cost;
  GridF w_flow;
  GridF w_geo;
  double total = 0.0;
};

CombinedCost combined_cost(const EdgeResiduals& res, const GridF& confidence, double huber_delta,
                           bool geometry_term = true);

}  // namespace flowba

#endif  // FLOWBA_RESIDUALS_HPP
