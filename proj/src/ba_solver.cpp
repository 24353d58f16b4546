// Copyright 2026 flowba authors
// SPDX-License-Identifier: Apache-2.0

#include "flowba/ba_solver.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "flowba/error.hpp"

namespace flowba {

namespace {

using Matrix6d = Eigen::Matrix<double, 6, 6>;
using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix26 = Eigen::Matrix<double, 2, 6>;

// d ray / d pixel; the ray's z component is constant 1.
Eigen::Matrix<double, 3, 2> ray_jacobian(const Intrinsics& k) {
  Eigen::Matrix<double, 3, 2> j = Eigen::Matrix<double, 3, 2>::Zero();
  j(0, 0) = 1.0 / k.fx;
  j(1, 1) = 1.0 / k.fy;
  return j;
}

bool is_fixed(int frame, const BAConfig& config) {
  return std::find(config.fixed_frames.begin(), config.fixed_frames.end(), frame) !=
         config.fixed_frames.end();
}

bool anchor_pinned(const KeyframeState& state, const BAConfig& config) {
  return config.scale_anchor_frame >= 0 &&
         config.scale_anchor_frame < int(state.depths.size()) && config.gauge_weight > 0.0 &&
         std::isfinite(config.anchor_target);
}

// Per-row accumulator for the pose side of one edge; rows are merged in
// index order so the assembled system is identical for any thread count.
struct RowPoseAcc {
  Matrix6d h_ii = Matrix6d::Zero();
  Matrix6d h_jj = Matrix6d::Zero();
  Matrix6d h_ij = Matrix6d::Zero();
  Vector6d g_i = Vector6d::Zero();
  Vector6d g_j = Vector6d::Zero();
  int64_t count = 0;
};

}  // namespace

double mean_inverse_depth(const DepthMap& depth) {
  double sum = 0.0;
  int64_t m = 0;
  for (int64_t p = 0; p < depth.values.size(); ++p) {
    if (!depth.valid[p]) continue;
    sum += 1.0 / depth.values[p];
    ++m;
  }
  return m > 0 ? sum / double(m) : 0.0;
}

std::vector<FrozenEdge> freeze_edges(const KeyframeState& state,
                                     const std::vector<EdgeObservation>& edges,
                                     const Intrinsics& k, const BAConfig& config) {
  std::vector<FrozenEdge> out;
  out.reserve(edges.size());
  for (const EdgeObservation& e : edges) {
    EdgeEval eval = evaluate_edge(state.poses.at(e.i), state.poses.at(e.j), state.depths.at(e.i),
                                  state.depths.at(e.j), *e.flow, k, config.tau, config.exec);
    out.push_back({e.i, e.j, e.flow, std::move(eval.res), std::move(eval.dj)});
  }
  return out;
}

double frozen_cost(const KeyframeState& state, const std::vector<FrozenEdge>& frozen,
                   const Intrinsics& k, const BAConfig& config) {
  double total = 0.0;
  for (const FrozenEdge& fe : frozen) {
    const Pose t_ji = state.poses[fe.j] * state.poses[fe.i].inverse();
    const Pose t_ij = t_ji.inverse();
    const DepthMap& depth_i = state.depths[fe.i];
    const int w = k.width, h = k.height;
    std::vector<double> row_cost(size_t(h), 0.0);
    parallel_for(config.exec, h, [&](int64_t yy) {
      const int y = int(yy);
      double acc = 0.0;
      for (int x = 0; x < w; ++x) {
        if (!fe.res.valid(x, y)) continue;
        const Pixel u = Pixel(double(x), double(y));
        Pixel u_j;
        if (!try_project(t_ji * backproject(u, depth_i.values(x, y), k), k, u_j)) continue;
        const double omega = fe.flow->confidence(x, y);
        acc += omega * huber_cost((u_j - (u + fe.flow->flow(x, y))).norm(), config.huber_delta);
        if (config.geometry_term && fe.res.omega_set(x, y)) {
          Pixel u_back;
          if (try_project(t_ij * backproject(u_j, fe.dj(x, y), k), k, u_back)) {
            acc += (1.0 - omega) * huber_cost((u_back - u).norm(), config.huber_delta);
          }
        }
      }
      row_cost[size_t(y)] = acc;
    });
    for (double c : row_cost) total += c;
  }
  if (anchor_pinned(state, config)) {
    const double m = mean_inverse_depth(state.depths[size_t(config.scale_anchor_frame)]);
    const double e = m - config.anchor_target;
    total += 0.5 * config.gauge_weight * e * e;
  }
  return total;
}

LinearSystem linearize(const KeyframeState& state, const std::vector<FrozenEdge>& frozen,
                       const Intrinsics& k, const BAConfig& config) {
  const int num_frames = int(state.poses.size());
  const int w = k.width, h = k.height;
  const int64_t wh = int64_t(w) * h;

  LinearSystem sys;
  sys.pose_slot.assign(size_t(num_frames), -1);
  int free_count = 0;
  for (int f = 0; f < num_frames; ++f) {
    if (!is_fixed(f, config)) sys.pose_slot[f] = free_count++;
  }
  sys.num_pose_vars = 6 * free_count;
  sys.h_pose = Eigen::MatrixXd::Zero(sys.num_pose_vars, sys.num_pose_vars);
  sys.g_pose = Eigen::VectorXd::Zero(sys.num_pose_vars);

  sys.depth.resize(size_t(num_frames));
  for (int f = 0; f < num_frames; ++f) {
    auto& blk = sys.depth[size_t(f)];
    std::vector<int> slots;
    if (sys.pose_slot[f] >= 0) slots.push_back(sys.pose_slot[f]);
    for (const FrozenEdge& fe : frozen) {
      if (fe.i == f && sys.pose_slot[fe.j] >= 0) slots.push_back(sys.pose_slot[fe.j]);
    }
    std::sort(slots.begin(), slots.end());
    slots.erase(std::unique(slots.begin(), slots.end()), slots.end());
    blk.slots = slots;
    blk.h_diag = Eigen::VectorXd::Zero(wh);
    blk.g = Eigen::VectorXd::Zero(wh);
    blk.cross = Eigen::MatrixXd::Zero(wh, 6 * int(slots.size()));
    blk.active.assign(size_t(wh), 0);
  }

  const Eigen::Matrix<double, 3, 2> dray = ray_jacobian(k);

  for (const FrozenEdge& fe : frozen) {
    const Pose t_ji = state.poses[fe.j] * state.poses[fe.i].inverse();
    const Pose t_ij = t_ji.inverse();
    const Matrix6d adj_ji = se3_adjoint(t_ji);
    const Matrix6d adj_ij = se3_adjoint(t_ij);
    const DepthMap& depth_i = state.depths[fe.i];
    auto& blk = sys.depth[size_t(fe.i)];

    const int slot_i = sys.pose_slot[fe.i];
    const int slot_j = sys.pose_slot[fe.j];
    int ci = -1, cj = -1;  // positions of slot_i / slot_j inside blk.slots
    for (size_t s = 0; s < blk.slots.size(); ++s) {
      if (blk.slots[s] == slot_i) ci = int(s);
      if (blk.slots[s] == slot_j) cj = int(s);
    }

    std::vector<RowPoseAcc> rows(size_t(h), RowPoseAcc{});
    parallel_for(config.exec, h, [&](int64_t yy) {
      const int y = int(yy);
      RowPoseAcc& acc = rows[size_t(y)];
      for (int x = 0; x < w; ++x) {
        if (!fe.res.valid(x, y)) continue;
        const Pixel u = Pixel(double(x), double(y));
        const double di = depth_i.values(x, y);
        const TransformProjection fwd = transform_project(u, di, t_ji, k);
        if (!fwd.valid) continue;
        const int64_t px = int64_t(y) * w + x;
        const double omega = fe.flow->confidence(x, y);

        const Matrix26 j_uj_xj = fwd.j_pose;
        const Matrix26 j_uj_xi = -fwd.j_pose * adj_ji;
        const Eigen::Vector2d j_uj_d = fwd.j_depth;

        const auto add = [&](const Matrix26& j_i, const Matrix26& j_j,
                             const Eigen::Vector2d& j_d, const Eigen::Vector2d& r, double wt) {
          if (slot_i >= 0) {
            acc.h_ii.noalias() += wt * j_i.transpose() * j_i;
            acc.g_i.noalias() += wt * j_i.transpose() * r;
          }
          if (slot_j >= 0) {
            acc.h_jj.noalias() += wt * j_j.transpose() * j_j;
            acc.g_j.noalias() += wt * j_j.transpose() * r;
          }
          if (slot_i >= 0 && slot_j >= 0) acc.h_ij.noalias() += wt * j_i.transpose() * j_j;
          blk.h_diag[px] += wt * j_d.squaredNorm();
          blk.g[px] += wt * j_d.dot(r);
          if (ci >= 0) blk.cross.block<1, 6>(px, 6 * ci) += (wt * j_i.transpose() * j_d).transpose();
          if (cj >= 0) blk.cross.block<1, 6>(px, 6 * cj) += (wt * j_j.transpose() * j_d).transpose();
          blk.active[size_t(px)] = 1;
        };

        const Eigen::Vector2d r_flow = fwd.pixel - (u + fe.flow->flow(x, y));
        const double w_flow = omega * huber_weight(r_flow.norm(), config.huber_delta);
        add(j_uj_xi, j_uj_xj, j_uj_d, r_flow, w_flow);
        ++acc.count;

        if (!config.geometry_term || !fe.res.omega_set(x, y)) continue;
        const double dj = fe.dj(x, y);
        const TransformProjection bwd = transform_project(fwd.pixel, dj, t_ij, k);
        if (!bwd.valid) continue;
        // The geometry residual is the 2-vector back-projection gap; the
        // robust weight acts on its norm. The chain splits into the path
        // through the forward pixel and the direct dependence on the
        // backward transform; the frozen depth sample contributes none.
        const Eigen::Matrix2d b =
            projection_jacobian(bwd.point, k) * (t_ij.rotation * (dj * dray));
        const Matrix26 j_g_i = b * j_uj_xi + bwd.j_pose;
        const Matrix26 j_g_j = b * j_uj_xj - bwd.j_pose * adj_ij;
        const Eigen::Vector2d j_g_d = b * j_uj_d;
        const Eigen::Vector2d e = bwd.pixel - u;
        const double w_geo = (1.0 - omega) * huber_weight(e.norm(), config.huber_delta);
        add(j_g_i, j_g_j, j_g_d, e, w_geo);
      }
    });

    for (const RowPoseAcc& acc : rows) {
      sys.valid_pixel_count += acc.count;
      if (slot_i >= 0) {
        sys.h_pose.block<6, 6>(6 * slot_i, 6 * slot_i) += acc.h_ii;
        sys.g_pose.segment<6>(6 * slot_i) += acc.g_i;
      }
      if (slot_j >= 0) {
        sys.h_pose.block<6, 6>(6 * slot_j, 6 * slot_j) += acc.h_jj;
        sys.g_pose.segment<6>(6 * slot_j) += acc.g_j;
      }
      if (slot_i >= 0 && slot_j >= 0) {
        sys.h_pose.block<6, 6>(6 * slot_i, 6 * slot_j) += acc.h_ij;
        sys.h_pose.block<6, 6>(6 * slot_j, 6 * slot_i) += acc.h_ij.transpose();
      }
    }
  }

  if (sys.valid_pixel_count == 0) {
    throw Error(ErrorCode::EmptySystem, "no valid pixels in any edge");
  }

  if (config.scale_anchor_frame >= 0 && config.scale_anchor_frame < num_frames) {
    const DepthMap& dm = state.depths[size_t(config.scale_anchor_frame)];
    int64_t m = 0;
    for (int64_t p = 0; p < wh; ++p) {
      if (dm.valid[p]) ++m;
    }
    if (m > 0) {
      sys.anchor_frame = config.scale_anchor_frame;
      sys.anchor_alpha = config.gauge_weight;
      sys.anchor_v = Eigen::VectorXd::Zero(wh);
      for (int64_t p = 0; p < wh; ++p) {
        if (dm.valid[p]) {
          const double d = dm.values[p];
          sys.anchor_v[p] = -1.0 / (double(m) * d * d);
        }
      }
      if (anchor_pinned(state, config)) {
        // Restoring gradient of the pinned spring; it rides the regular g
        // so both solve routes treat it identically.
        const double e = mean_inverse_depth(dm) - config.anchor_target;
        auto& ablk = sys.depth[size_t(config.scale_anchor_frame)];
        for (int64_t p = 0; p < wh; ++p) {
          if (dm.valid[p]) ablk.g[p] += config.gauge_weight * e * sys.anchor_v[p];
        }
      }
    }
  }
  return sys;
}

namespace {

// Applies (D + alpha v v^T)^{-1} pieces via Sherman-Morrison; D is the
// damped depth diagonal of one frame.
struct AnchorTerms {
  double beta = 0.0;        // alpha / (1 + alpha v^T D^-1 v)
  Eigen::VectorXd q;        // D^-1 v
};

}  // namespace

Delta schur_solve(const LinearSystem& sys, double lambda) {
  const int p = sys.num_pose_vars;
  const int num_frames = int(sys.depth.size());

  Eigen::MatrixXd s = sys.h_pose + lambda * Eigen::MatrixXd::Identity(p, p);
  Eigen::VectorXd rhs = -sys.g_pose;

  AnchorTerms anchor;
  Eigen::VectorXd wvec = Eigen::VectorXd::Zero(p);
  double s_vg = 0.0;

  for (int f = 0; f < num_frames; ++f) {
    const auto& blk = sys.depth[size_t(f)];
    const int kslots = int(blk.slots.size());
    const int64_t wh = blk.h_diag.size();
    const bool anchored = (f == sys.anchor_frame) && sys.anchor_alpha > 0.0;
    if (anchored) anchor.q = Eigen::VectorXd::Zero(wh);
    double s_vv = 0.0;
    for (int64_t u = 0; u < wh; ++u) {
      const double d = blk.h_diag[u] + lambda;
      const double v = anchored ? sys.anchor_v[u] : 0.0;
      if (!(d > 0.0)) {
        if (blk.active[size_t(u)] || v != 0.0 || blk.g[u] != 0.0) {
          throw Error(ErrorCode::SingularSystem, "undamped depth variable with zero curvature");
        }
        continue;
      }
      const double inv_d = 1.0 / d;
      if (kslots > 0 && blk.active[size_t(u)]) {
        for (int a = 0; a < kslots; ++a) {
          const Vector6d ca = blk.cross.block<1, 6>(u, 6 * a).transpose();
          rhs.segment<6>(6 * blk.slots[a]) += ca * (blk.g[u] * inv_d);
          for (int bi = 0; bi < kslots; ++bi) {
            const Vector6d cb = blk.cross.block<1, 6>(u, 6 * bi).transpose();
            s.block<6, 6>(6 * blk.slots[a], 6 * blk.slots[bi]).noalias() -=
                (ca * inv_d) * cb.transpose();
          }
          if (anchored && v != 0.0) wvec.segment<6>(6 * blk.slots[a]) += ca * (v * inv_d);
        }
      }
      if (anchored && v != 0.0) {
        anchor.q[u] = v * inv_d;
        s_vv += v * v * inv_d;
        s_vg += v * blk.g[u] * inv_d;
      }
    }
    if (anchored) {
      anchor.beta = sys.anchor_alpha / (1.0 + sys.anchor_alpha * s_vv);
      s.noalias() += anchor.beta * wvec * wvec.transpose();
      rhs.noalias() -= anchor.beta * s_vg * wvec;
    }
  }

  Eigen::VectorXd dp = Eigen::VectorXd::Zero(p);
  if (p > 0) {
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(s);
    if (ldlt.info() != Eigen::Success) {
      throw Error(ErrorCode::SingularSystem, "reduced pose system factorization failed");
    }
    dp = ldlt.solve(rhs);
    const double rhs_norm = rhs.norm();
    const double rel = (s * dp - rhs).norm() / std::max(rhs_norm, 1e-300);
    if (!dp.allFinite() || (rhs_norm > 0.0 && rel > 1e-8)) {
      throw Error(ErrorCode::SingularSystem, "reduced pose system rank-deficient");
    }
  }

  Delta delta;
  delta.pose.assign(size_t(num_frames), Twist::Zero());
  delta.depth.resize(size_t(num_frames));
  for (int f = 0; f < num_frames; ++f) {
    if (sys.pose_slot[size_t(f)] >= 0) delta.pose[size_t(f)] = dp.segment<6>(6 * sys.pose_slot[size_t(f)]);
  }
  for (int f = 0; f < num_frames; ++f) {
    const auto& blk = sys.depth[size_t(f)];
    const int kslots = int(blk.slots.size());
    const int64_t wh = blk.h_diag.size();
    Eigen::VectorXd dd = Eigen::VectorXd::Zero(wh);
    const bool anchored = (f == sys.anchor_frame) && sys.anchor_alpha > 0.0;
    double s_vy = 0.0;
    for (int64_t u = 0; u < wh; ++u) {
      const double d = blk.h_diag[u] + lambda;
      if (!(d > 0.0)) continue;
      double y = -blk.g[u];
      if (blk.active[size_t(u)]) {
        for (int a = 0; a < kslots; ++a) {
          y -= blk.cross.block<1, 6>(u, 6 * a).dot(dp.segment<6>(6 * blk.slots[a]));
        }
      }
      dd[u] = y / d;
      if (anchored && sys.anchor_v[u] != 0.0) s_vy += sys.anchor_v[u] * y / d;
    }
    if (anchored) dd.noalias() -= (anchor.beta * s_vy) * anchor.q;
    delta.depth[size_t(f)] = std::move(dd);
  }
  return delta;
}

Delta dense_solve(const LinearSystem& sys, double lambda) {
  const int p = sys.num_pose_vars;
  const int num_frames = int(sys.depth.size());
  int64_t n = p;
  std::vector<int64_t> offset(size_t(num_frames), 0);
  for (int f = 0; f < num_frames; ++f) {
    offset[size_t(f)] = n;
    n += sys.depth[size_t(f)].h_diag.size();
  }

  Eigen::MatrixXd hfull = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd gfull = Eigen::VectorXd::Zero(n);
  hfull.topLeftCorner(p, p) = sys.h_pose;
  gfull.head(p) = sys.g_pose;

  for (int f = 0; f < num_frames; ++f) {
    const auto& blk = sys.depth[size_t(f)];
    const int64_t wh = blk.h_diag.size();
    const int64_t off = offset[size_t(f)];
    for (int64_t u = 0; u < wh; ++u) {
      hfull(off + u, off + u) = blk.h_diag[u];
      gfull[off + u] = blk.g[u];
      for (size_t a = 0; a < blk.slots.size(); ++a) {
        const Vector6d c = blk.cross.block<1, 6>(u, 6 * int(a)).transpose();
        hfull.block<6, 1>(6 * blk.slots[a], off + u) = c;
        hfull.block<1, 6>(off + u, 6 * blk.slots[a]) = c.transpose();
      }
    }
    if (f == sys.anchor_frame && sys.anchor_alpha > 0.0) {
      hfull.block(off, off, wh, wh).noalias() +=
          sys.anchor_alpha * sys.anchor_v * sys.anchor_v.transpose();
    }
  }
  hfull += lambda * Eigen::MatrixXd::Identity(n, n);

  const Eigen::LDLT<Eigen::MatrixXd> ldlt(hfull);
  if (ldlt.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularSystem, "full system factorization failed");
  }
  const Eigen::VectorXd x = ldlt.solve(-gfull);
  if (!x.allFinite()) throw Error(ErrorCode::SingularSystem, "full system solve not finite");

  Delta delta;
  delta.pose.assign(size_t(num_frames), Twist::Zero());
  delta.depth.resize(size_t(num_frames));
  for (int f = 0; f < num_frames; ++f) {
    if (sys.pose_slot[size_t(f)] >= 0) delta.pose[size_t(f)] = x.segment<6>(6 * sys.pose_slot[size_t(f)]);
    delta.depth[size_t(f)] = x.segment(offset[size_t(f)], sys.depth[size_t(f)].h_diag.size());
  }
  return delta;
}

KeyframeState retract(const KeyframeState& state, const Delta& delta, const BAConfig& config) {
  KeyframeState out = state;
  for (size_t f = 0; f < out.poses.size(); ++f) {
    if (!is_fixed(int(f), config)) out.poses[f] = se3_exp(delta.pose[f]) * out.poses[f];
  }
  for (size_t f = 0; f < out.depths.size(); ++f) {
    DepthMap& dm = out.depths[f];
    const Eigen::VectorXd& dd = delta.depth[f];
    for (int64_t u = 0; u < dm.values.size(); ++u) {
      if (!dm.valid[u]) continue;
      dm.values[u] = std::clamp(dm.values[u] + dd[u], config.depth_min, config.depth_max);
    }
  }
  return out;
}

BATrace ba_iterate(KeyframeState& state, const std::vector<EdgeObservation>& edges,
                   const Intrinsics& k, const BAConfig& config, double* lambda_io) {
  BATrace trace;
  double lambda = lambda_io ? *lambda_io : config.lambda0;
  for (int step = 0; step < config.inner_ba_steps; ++step) {
    const std::vector<FrozenEdge> frozen = freeze_edges(state, edges, k, config);
    const LinearSystem sys = linearize(state, frozen, k, config);
    const double cost0 = frozen_cost(state, frozen, k, config);
    BAStepTrace st;
    st.cost_before = cost0;
    while (true) {
      const Delta delta = schur_solve(sys, lambda);
      const KeyframeState cand = retract(state, delta, config);
      const double cost1 = frozen_cost(cand, frozen, k, config);
      if (cost1 <= cost0) {
        state = cand;
        st.cost_after = cost1;
        st.lambda = lambda;
        lambda = std::max(lambda * config.lambda_shrink, config.lambda_min);
        break;
      }
      double step_norm = 0.0;
      for (const Twist& t : delta.pose) step_norm = std::max(step_norm, t.cwiseAbs().maxCoeff());
      for (const Eigen::VectorXd& dd : delta.depth) {
        if (dd.size() > 0) step_norm = std::max(step_norm, dd.cwiseAbs().maxCoeff());
      }
      if (cost1 - cost0 <= config.stall_cost_tol * std::max(1.0, cost0) &&
          step_norm <= config.stall_step_tol) {
        st.cost_after = cost0;
        st.lambda = lambda;
        break;
      }
      lambda *= config.lambda_grow;
      ++st.rejected;
      if (lambda > config.lambda_max) {
        throw Error(ErrorCode::MaxDampingExceeded, "damping exceeded limit without cost decrease");
      }
    }
    trace.steps.push_back(st);
  }
  if (lambda_io) *lambda_io = lambda;
  return trace;
}

}  // namespace flowba
