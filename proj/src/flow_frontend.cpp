// Copyright 2026 flowba authors
// SPDX-License-Identifier: Apache-2.0

#include "flowba/flow_frontend.hpp"

#include <cmath>
#include <limits>

namespace flowba {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

CorrelationVolume correlation_volume(const GridF& feat_i, const GridF& feat_j, const GridV2& flow,
                                     int radius, Exec exec) {
  // The descriptor of pixel u is its 3x3 feature patch: a scalar channel
  // alone is ambiguous along iso-value contours, so similarity is the
  // negative mean squared patch difference, normalized by the number of
  // in-bounds samples. A candidate whose center leaves the raster scores
  // -inf; border pixels keep finite scores from their surviving samples.
  const int w = feat_i.width(), h = feat_i.height();
  CorrelationVolume vol(w, h, radius);
  parallel_for(exec, h, [&](int64_t yy) {
    const int y = int(yy);
    for (int x = 0; x < w; ++x) {
      const Eigen::Vector2d target = Eigen::Vector2d(x, y) + flow(x, y);
      for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
          if (!sample_bilinear(feat_j, target.x() + dx, target.y() + dy)) {
            vol.at(x, y, dx, dy) = kNegInf;
            continue;
          }
          double sum = 0.0;
          int n = 0;
          for (int py = -1; py <= 1; ++py) {
            for (int px = -1; px <= 1; ++px) {
              if (!feat_i.contains(x + px, y + py)) continue;
              const auto fj =
                  sample_bilinear(feat_j, target.x() + dx + px, target.y() + dy + py);
              if (!fj) continue;
              const double diff = feat_i(x + px, y + py) - *fj;
              sum += diff * diff;
              ++n;
            }
          }
          vol.at(x, y, dx, dy) = n > 0 ? -sum / double(n) : kNegInf;
        }
      }
    }
  });
  return vol;
}

PriorFlow geometry_prior_flow(const GeometryPrior& prior, const Pose& t_ji, const Intrinsics& k,
                              Exec exec) {
  const int w = k.width, h = k.height;
  PriorFlow out{GridV2(w, h, Eigen::Vector2d::Zero()), GridMask(w, h, uint8_t{0}),
                prior_confidence(prior.noise_fraction)};
  parallel_for(exec, h, [&](int64_t yy) {
    const int y = int(yy);
    for (int x = 0; x < w; ++x) {
      if (!prior.depth.valid(x, y)) continue;
      const Pixel u = Pixel(double(x), double(y));
      Pixel u_j;
      if (!try_project(t_ji * backproject(u, prior.depth.values(x, y), k), k, u_j)) continue;
      out.flow(x, y) = u_j - u;
      out.valid(x, y) = 1;
    }
  });
  return out;
}

namespace {

// Vertex of the parabola through scores at offsets -1, 0, +1; zero when the
// fit degenerates. The result lies in (-1, 1) for a true interior peak.
double quadratic_peak(double sm, double s0, double sp) {
  if (!std::isfinite(sm) || !std::isfinite(sp)) return 0.0;
  const double denom = sm - 2.0 * s0 + sp;
  if (!(denom < 0.0)) return 0.0;
  double off = 0.5 * (sm - sp) / denom;
  if (off > 1.0) off = 1.0;
  if (off < -1.0) off = -1.0;
  return off;
}

}  // namespace

GridV2 refine_flow(const CorrelationVolume& corr, const GridMask& m, const GridV2& flow,
                   const PriorFlow& prior, const FrontendConfig& cfg, Exec exec) {
  const int w = flow.width(), h = flow.height();
  const int r = corr.radius();
  GridV2 out = flow;
  parallel_for(exec, h, [&](int64_t yy) {
    const int y = int(yy);
    for (int x = 0; x < w; ++x) {
      if (!m(x, y)) {
        if (prior.valid(x, y)) {
          out(x, y) += cfg.blend * (prior.flow(x, y) - flow(x, y));
        }
        continue;
      }
      // No evidence at the current correspondence (target outside the
      // raster) means nothing in the window can be trusted over it.
      if (!std::isfinite(corr.at(x, y, 0, 0))) continue;
      double best = kNegInf;
      int bx = 0, by = 0;
      int best_norm = 0;
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          const double s = corr.at(x, y, dx, dy);
          const int n2 = dx * dx + dy * dy;
          if (s > best || (s == best && std::isfinite(s) && n2 < best_norm)) {
            best = s;
            bx = dx;
            by = dy;
            best_norm = n2;
          }
        }
      }
      if (!std::isfinite(best)) continue;  // whole window out of bounds
      Eigen::Vector2d delta = Eigen::Vector2d(double(bx), double(by));
      if (best < cfg.perfect_match) {
        // Interior peaks get a sub-pixel quadratic fit per axis.
        if (std::abs(bx) < r) {
          delta.x() += quadratic_peak(corr.at(x, y, bx - 1, by), best, corr.at(x, y, bx + 1, by));
        }
        if (std::abs(by) < r) {
          delta.y() += quadratic_peak(corr.at(x, y, bx, by - 1), best, corr.at(x, y, bx, by + 1));
        }
      }
      const double n = delta.norm();
      if (n > cfg.step_cap) delta *= cfg.step_cap / n;
      out(x, y) += delta;
    }
  });
  return out;
}

GridF predict_confidence(const CorrelationVolume& corr, const GridMask& m,
                         const FrontendConfig& cfg, Exec exec) {
  const int w = corr.width(), h = corr.height();
  const int r = corr.radius();
  const double s2 = cfg.score_scale * cfg.score_scale;
  GridF out(w, h, 0.0);
  parallel_for(exec, h, [&](int64_t yy) {
    const int y = int(yy);
    for (int x = 0; x < w; ++x) {
      double best = kNegInf;
      int bx = 0, by = 0;
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          const double s = corr.at(x, y, dx, dy);
          if (s > best) {
            best = s;
            bx = dx;
            by = dy;
          }
        }
      }
      if (!std::isfinite(best)) continue;  // no usable target: confidence 0
      // Runner-up outside a 2-px ring isolates the peak from its own slope.
      double second = kNegInf;
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          if (std::max(std::abs(dx - bx), std::abs(dy - by)) < 2) continue;
          second = std::max(second, corr.at(x, y, dx, dy));
        }
      }
      const double quality = std::exp(best / s2);
      const double sharpness =
          std::isfinite(second) ? 1.0 - std::exp(-(best - second) / s2) : 1.0;
      double omega = quality * sharpness;
      if (!m(x, y) && omega > 0.5) omega = 0.5;
      out(x, y) = omega;
    }
  });
  return out;
}

}  // namespace flowba
