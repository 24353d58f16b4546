// Copyright 2026 flowba authors
// SPDX-License-Identifier: Apache-2.0

#include "flowba/residuals.hpp"

namespace flowba {

EdgeEval evaluate_edge(const Pose& pose_i, const Pose& pose_j, const DepthMap& depth_i,
                       const DepthMap& depth_j, const FlowField& flow, const Intrinsics& k,
                       double tau, Exec exec) {
  const int w = k.width, h = k.height;
  EdgeEval out;
  out.res = EdgeResiduals(w, h);
  out.dj = GridF(w, h, 0.0);

  const Pose t_ji = pose_j * pose_i.inverse();
  const Pose t_ij = t_ji.inverse();

  parallel_for(exec, h, [&](int64_t yy) {
    const int y = int(yy);
    for (int x = 0; x < w; ++x) {
      if (!depth_i.valid(x, y)) continue;
      const Pixel u = Pixel(double(x), double(y));
      const double di = depth_i.values(x, y);

      Pixel u_j;
      if (!try_project(t_ji * backproject(u, di, k), k, u_j)) continue;
      out.res.valid(x, y) = 1;
      out.res.r_flow(x, y) = u_j - (u + flow.flow(x, y));

      const auto dj = sample_bilinear(depth_j.values, u_j.x(), u_j.y(), &depth_j.valid);
      if (!dj || !(*dj > 0.0)) continue;

      Pixel u_back;
      if (!try_project(t_ij * backproject(u_j, *dj, k), k, u_back)) continue;
      out.res.geo_valid(x, y) = 1;
      out.dj(x, y) = *dj;
      const double r_geo = (u_back - u).norm();
      out.res.r_geo(x, y) = r_geo;
      if (r_geo < tau) out.res.omega_set(x, y) = 1;
    }
  });
  return out;
}

FlowResidualResult flow_residual(const Pose& pose_i, const Pose& pose_j, const DepthMap& depth_i,
                                 const FlowField& flow, const Intrinsics& k, Exec exec) {
  const int w = k.width, h = k.height;
  FlowResidualResult out{GridV2(w, h, Eigen::Vector2d::Zero()), GridMask(w, h, uint8_t{0})};
  const Pose t_ji = pose_j * pose_i.inverse();
  parallel_for(exec, h, [&](int64_t yy) {
    const int y = int(yy);
    for (int x = 0; x < w; ++x) {
      if (!depth_i.valid(x, y)) continue;
      const Pixel u = Pixel(double(x), double(y));
      Pixel u_j;
      if (!try_project(t_ji * backproject(u, depth_i.values(x, y), k), k, u_j)) continue;
      out.valid(x, y) = 1;
      out.r(x, y) = u_j - (u + flow.flow(x, y));
    }
  });
  return out;
}

GeometryResidualResult geometry_residual(const Pose& pose_i, const Pose& pose_j,
                                         const DepthMap& depth_i, const DepthMap& depth_j,
                                         const Intrinsics& k, double tau, Exec exec) {
  FlowField dummy(-1, -1, k.width, k.height);
  const EdgeEval eval = evaluate_edge(pose_i, pose_j, depth_i, depth_j, dummy, k, tau, exec);
  return {eval.res.r_geo, eval.res.geo_valid, eval.res.omega_set};
}

CombinedCost combined_cost(const EdgeResiduals& res, const GridF& confidence, double huber_delta,
                           bool geometry_term) {
  const int w = res.valid.width(), h = res.valid.height();
  CombinedCost out{GridF(w, h, 0.0), GridF(w, h, 0.0), GridF(w, h, 0.0), 0.0};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!res.valid(x, y)) continue;
      const double omega = confidence(x, y);
      const double rf = res.r_flow(x, y).norm();
      double c = omega * huber_cost(rf, huber_delta);
      out.w_flow(x, y) = omega * huber_weight(rf, huber_delta);
      if (geometry_term && res.omega_set(x, y)) {
        const double rg = res.r_geo(x, y);
        c += (1.0 - omega) * huber_cost(rg, huber_delta);
        out.w_geo(x, y) = (1.0 - omega) * huber_weight(rg, huber_delta);
      }
      out.cost(x, y) = c;
      out.total += c;
    }
  }
  return out;
}

}  // namespace flowba
