// Copyright 2026 flowba authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FLOWBA_FLOW_FRONTEND_HPP
#define FLOWBA_FLOW_FRONTEND_HPP

#include "flowba/camera.hpp"
#include "flowba/parallel.hpp"
#include "flowba/types.hpp"

namespace flowba {

// Deterministic flow refiner over a local correlation volume. Reliable
// pixels follow the correlation peak (sub-pixel quadratic fit, step-capped);
// unreliable pixels are pulled to the flow induced by a geometric depth
// prior and never read the correlation scores.

struct FrontendConfig {
  int radius = 3;              // correlation search radius, px
  double step_cap = 3.0;       // max |delta F| per refinement in reliable regions
  double blend = 1.0;          // unreliable update: 1 = full replacement by prior flow
  double score_scale = 0.2;    // feature-difference scale for confidence statistics
  double perfect_match = -1e-12;  // scores at/above this skip the sub-pixel fit
};

// Dense (2r+1)^2 window of similarity scores per pixel, centered on the
// current flow target. score = -(feature difference)^2; out-of-bounds
// targets score -infinity.
class CorrelationVolume {
 public:
  CorrelationVolume(int width, int height, int radius)
      : w_(width), h_(height), r_(radius), win_(2 * radius + 1),
        scores_(size_t(width) * height * win_ * win_, 0.0) {}

  int width() const { return w_; }
  int height() const { return h_; }
  int radius() const { return r_; }

  double& at(int x, int y, int dx, int dy) {
    return scores_[index(x, y, dx, dy)];
  }
  double at(int x, int y, int dx, int dy) const {
    return scores_[index(x, y, dx, dy)];
  }

 private:
  size_t index(int x, int y, int dx, int dy) const {
    return ((size_t(y) * w_ + x) * win_ + (dy + r_)) * win_ + (dx + r_);
  }

  int w_, h_, r_, win_;
  std::vector<double> scores_;
};

CorrelationVolume correlation_volume(const GridF& feat_i, const GridF& feat_j, const GridV2& flow,
                                     int radius, Exec exec = Exec::Parallel);

// Synthetic stand-in for a learned depth prior: a depth map plus the
// fractional noise level it was produced with.
struct GeometryPrior {
  DepthMap depth;
  double noise_fraction = 0.0;
};

// Confidence assigned to prior-driven flow proposals, decaying with the
// prior's noise level and never exceeding the unreliable-region cap.
inline double prior_confidence(double noise_fraction) {
  const double c = 0.5 * (1.0 - 2.0 * noise_fraction);
  return c < 0.0 ? 0.0 : c;
}

struct PriorFlow {
  GridV2 flow;
  GridMask valid;
  double confidence = 0.0;
};

// flow(u) = pi(T_ji * pi^-1(u, prior_depth(u))) - u. t_ji maps camera-frame
// points of the source into the target camera frame.
PriorFlow geometry_prior_flow(const GeometryPrior& prior, const Pose& t_ji, const Intrinsics& k,
                              Exec exec = Exec::Parallel);

// One refinement pass; returns the updated flow grid. Where m = 1 the update
// is the correlation argmax (with sub-pixel fit, capped at step_cap); where
// m = 0 it moves toward prior_flow by cfg.blend and is independent of the
// correlation scores. Exact ties in the discrete argmax resolve to the
// smallest offset, so flat windows yield a zero update.
GridV2 refine_flow(const CorrelationVolume& corr, const GridMask& m, const GridV2& flow,
                   const PriorFlow& prior, const FrontendConfig& cfg,
                   Exec exec = Exec::Parallel);

// Peak statistics to a confidence in [0, 1]: high for sharp unimodal peaks
// with a good best match, capped at 0.5 where m = 0.
GridF predict_confidence(const CorrelationVolume& corr, const GridMask& m,
                         const FrontendConfig& cfg, Exec exec = Exec::Parallel);

}  // namespace flowba

#endif  // FLOWBA_FLOW_FRONTEND_HPP
