// Copyright 2026 flowba authors
// SPDX-License-Identifier: Apache-2.0

#include "flowba/synth_world.hpp"

#include <algorithm>
#include <cmath>

#include "flowba/error.hpp"

namespace flowba {

namespace {

constexpr double kRayMin = 1e-2;
constexpr double kRayMax = 200.0;

struct SurfaceHit {
  bool hit = false;
  double t = 0.0;  // z-depth along the unit-z camera ray
};

SurfaceHit intersect(const PlaneSurface& s, const Eigen::Vector3d& origin,
                     const Eigen::Vector3d& dir) {
  const double denom = dir.dot(s.normal);
  if (std::abs(denom) < 1e-12) return {};
  const double t = (s.point - origin).dot(s.normal) / denom;
  if (t < kRayMin || t > kRayMax) return {};
  return {true, t};
}

SurfaceHit intersect(const SphereSurface& s, const Eigen::Vector3d& origin,
                     const Eigen::Vector3d& dir) {
  const Eigen::Vector3d oc = origin - s.center;
  const double a = dir.squaredNorm();
  const double b = 2.0 * dir.dot(oc);
  const double c = oc.squaredNorm() - s.radius * s.radius;
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return {};
  const double sq = std::sqrt(disc);
  const double t0 = (-b - sq) / (2.0 * a);
  const double t1 = (-b + sq) / (2.0 * a);
  double t = t0;
  if (t < kRayMin) t = t1;
  if (t < kRayMin || t > kRayMax) return {};
  return {true, t};
}

// Signed distance in z between the ray point and the wavy wall. Negative in
// front of the wall.
double height_field_g(const HeightFieldSurface& s, const Eigen::Vector3d& origin,
                      const Eigen::Vector3d& dir, double t) {
  const Eigen::Vector3d p = origin + t * dir;
  return p.z() - s.z0 + s.amplitude * std::sin(s.kx * p.x()) * std::cos(s.ky * p.y());
}

SurfaceHit intersect(const HeightFieldSurface& s, const Eigen::Vector3d& origin,
                     const Eigen::Vector3d& dir) {
  if (dir.z() < 1e-6) return {};
  // The wall lives inside |z - z0| <= amplitude; bracket the crossing there.
  const double margin = s.amplitude + 1e-6;
  double t_lo = (s.z0 - margin - origin.z()) / dir.z();
  double t_hi = (s.z0 + margin - origin.z()) / dir.z();
  t_lo = std::max(t_lo, kRayMin);
  t_hi = std::min(t_hi, kRayMax);
  if (t_lo >= t_hi) return {};
  double g_lo = height_field_g(s, origin, dir, t_lo);
  if (g_lo >= 0.0) return {true, t_lo};  // already at/behind the wall skin
  // g is monotone in t for the preset parameter range (validate_scene checks
  // the margin), so a single bracket plus bisection finds the unique root.
  double g_hi = height_field_g(s, origin, dir, t_hi);
  if (g_hi < 0.0) return {};
  for (int it = 0; it < 90; ++it) {
    const double mid = 0.5 * (t_lo + t_hi);
    const double g_mid = height_field_g(s, origin, dir, mid);
    if (g_mid < 0.0) {
      t_lo = mid;
    } else {
      t_hi = mid;
    }
  }
  return {true, 0.5 * (t_lo + t_hi)};
}

}  // namespace

RayHit cast_ray(const SynthScene& scene, const Pose& cam_to_world, const Pixel& pixel) {
  const Eigen::Vector3d dir_cam = pixel_ray(pixel, scene.intrinsics);
  const Eigen::Vector3d dir = cam_to_world.rotation * dir_cam;  // z-depth parameterization
  const Eigen::Vector3d origin = cam_to_world.translation;
  RayHit best;
  for (size_t si = 0; si < scene.surfaces.size(); ++si) {
    const SurfaceHit h = std::visit(
        [&](const auto& surf) { return intersect(surf, origin, dir); }, scene.surfaces[si]);
    if (h.hit && (!best.hit || h.t < best.depth)) {
      best.hit = true;
      best.depth = h.t;
      best.surface = int(si);
    }
  }
  if (best.hit) best.point_world = origin + best.depth * dir;
  return best;
}

double texture_value(const SynthScene& scene, const Eigen::Vector3d& p) {
  const TextureSpec& tx = scene.texture;
  if (tx.textureless_rect_enabled && p.x() >= tx.rect_min.x() && p.x() <= tx.rect_max.x() &&
      p.y() >= tx.rect_min.y() && p.y() <= tx.rect_max.y()) {
    return tx.amplitude * 0.123;
  }
  // Mixed-direction components near the pixel scale keep the local
  // autocorrelation peaked in both image axes, so window matching stays
  // well-posed everywhere outside the deliberate textureless rect.
  const double f = tx.base_frequency;
  const double v = 0.45 * std::sin(4.3 * f * p.x() + 2.1 * f * p.z()) *
                       std::sin(3.9 * f * p.y() - 1.1 * f * p.z()) +
                   0.35 * std::sin(5.7 * f * p.x() - 4.9 * f * p.y() + 0.7) +
                   0.20 * std::sin(6.1 * f * p.y() + 2.9 * f * p.z() + 1.9);
  return tx.amplitude * v;
}

DepthMap render_depth(const SynthScene& scene, int frame, Exec exec) {
  const Intrinsics& k = scene.intrinsics;
  DepthMap out(frame, k.width, k.height);
  const Pose& cam = scene.trajectory.at(size_t(frame));
  parallel_for(exec, k.height, [&](int64_t y) {
    for (int x = 0; x < k.width; ++x) {
      const RayHit hit = cast_ray(scene, cam, Pixel(double(x), double(y)));
      out.valid(x, int(y)) = hit.hit ? 1 : 0;
      out.values(x, int(y)) = hit.hit ? hit.depth : 1.0;
    }
  });
  return out;
}

GridF render_features(const SynthScene& scene, int frame, double noise_sigma, Exec exec) {
  const Intrinsics& k = scene.intrinsics;
  GridF out(k.width, k.height, 0.0);
  const Pose& cam = scene.trajectory.at(size_t(frame));
  const Rng frame_rng = Rng(scene.seed).fork(0x6665617475726573ULL).fork(uint64_t(frame));
  parallel_for(exec, k.height, [&](int64_t y) {
    Rng row_rng = frame_rng.fork(uint64_t(y));
    for (int x = 0; x < k.width; ++x) {
      const double noise = noise_sigma > 0.0 ? row_rng.normal(0.0, noise_sigma) : 0.0;
      const RayHit hit = cast_ray(scene, cam, Pixel(double(x), double(y)));
      out(x, int(y)) = (hit.hit ? texture_value(scene, hit.point_world) : 0.0) + noise;
    }
  });
  return out;
}

GtFlow gt_flow(const SynthScene& scene, int frame_i, int frame_j, Exec exec) {
  const Intrinsics& k = scene.intrinsics;
  GtFlow out;
  out.flow = FlowField(frame_i, frame_j, k.width, k.height);
  out.flow.confidence.fill(1.0);
  out.occluded = GridMask(k.width, k.height, uint8_t{0});
  out.valid = GridMask(k.width, k.height, uint8_t{0});

  const Pose& cam_i = scene.trajectory.at(size_t(frame_i));
  const Pose& cam_j = scene.trajectory.at(size_t(frame_j));
  const Pose world_to_j = cam_j.inverse();

  parallel_for(exec, k.height, [&](int64_t y) {
    for (int x = 0; x < k.width; ++x) {
      const Pixel u = Pixel(double(x), double(y));
      const RayHit hit = cast_ray(scene, cam_i, u);
      if (!hit.hit) continue;
      const Eigen::Vector3d p_j = world_to_j * hit.point_world;
      Pixel u_j;
      if (!try_project(p_j, k, u_j)) continue;
      out.valid(x, int(y)) = 1;
      out.flow.flow(x, int(y)) = u_j - u;
      // Occlusion: recast in frame j and compare against the point's depth.
      const RayHit recast = cast_ray(scene, cam_j, u_j);
      if (recast.hit && p_j.z() > recast.depth + 1e-6) out.occluded(x, int(y)) = 1;
    }
  });
  return out;
}

CorruptedFlow corrupt_flow(const FlowField& input, const GridMask& occluded,
                           const CorruptionSpec& spec, uint64_t seed) {
  const int w = input.flow.width(), h = input.flow.height();
  CorruptedFlow out;
  out.flow = input;
  out.corrupted = GridMask(w, h, uint8_t{0});

  const Rng base = Rng(seed).fork(0x666c6f77ULL);
  if (spec.flow_noise_sigma > 0.0) {
    for (int y = 0; y < h; ++y) {
      Rng row = base.fork(0x1000 + uint64_t(y));
      for (int x = 0; x < w; ++x) {
        out.flow.flow(x, y).x() += row.normal(0.0, spec.flow_noise_sigma);
        out.flow.flow(x, y).y() += row.normal(0.0, spec.flow_noise_sigma);
      }
    }
  }
  for (const CorruptionPatch& patch : spec.patches) {
    if (patch.x < 0 || patch.y < 0 || patch.x + patch.w > w || patch.y + patch.h > h) {
      throw Error(ErrorCode::ConfigError, "corruption patch outside image bounds");
    }
    for (int y = patch.y; y < patch.y + patch.h; ++y) {
      for (int x = patch.x; x < patch.x + patch.w; ++x) {
        out.flow.flow(x, y) += patch.offset;
        out.corrupted(x, y) = 1;
      }
    }
  }
  if (spec.occlusion_injection) {
    for (int y = 0; y < h; ++y) {
      Rng row = base.fork(0x2000 + uint64_t(y));
      for (int x = 0; x < w; ++x) {
        if (!occluded.empty() && occluded(x, y)) {
          const double angle = row.uniform(0.0, 6.283185307179586);
          out.flow.flow(x, y) +=
              spec.occlusion_offset_px * Eigen::Vector2d(std::cos(angle), std::sin(angle));
          out.corrupted(x, y) = 1;
        }
      }
    }
  }
  return out;
}

DepthMap corrupt_depth(const DepthMap& input, double fraction, uint64_t seed) {
  DepthMap out = input;
  if (fraction <= 0.0) return out;
  const Rng base = Rng(seed).fork(0x6465707468ULL);
  for (int y = 0; y < out.values.height(); ++y) {
    Rng row = base.fork(uint64_t(y));
    for (int x = 0; x < out.values.width(); ++x) {
      out.values(x, y) *= 1.0 + row.uniform(-fraction, fraction);
    }
  }
  return out;
}

std::vector<CorruptionPatch> make_patches(int width, int height, double target_fraction,
                                          int patch_size, double min_offset_px,
                                          double max_offset_px, uint64_t seed) {
  std::vector<CorruptionPatch> patches;
  const int64_t target_pixels = int64_t(target_fraction * width * height);
  const int count = int((target_pixels + patch_size * patch_size / 2) / (patch_size * patch_size));
  Rng rng = Rng(seed).fork(0x70617463686573ULL);
  GridMask used(width, height, uint8_t{0});
  int placed = 0, attempts = 0;
  while (placed < count && attempts < count * 200) {
    ++attempts;
    const int px = rng.uniform_int(0, width - patch_size);
    const int py = rng.uniform_int(0, height - patch_size);
    bool overlap = false;
    for (int y = py; y < py + patch_size && !overlap; ++y)
      for (int x = px; x < px + patch_size; ++x)
        if (used(x, y)) { overlap = true; break; }
    if (overlap) continue;
    for (int y = py; y < py + patch_size; ++y)
      for (int x = px; x < px + patch_size; ++x) used(x, y) = 1;
    const double mag = rng.uniform(min_offset_px, max_offset_px);
    const double angle = rng.uniform(0.0, 6.283185307179586);
    patches.push_back({px, py, patch_size, patch_size,
                       mag * Eigen::Vector2d(std::cos(angle), std::sin(angle))});
    ++placed;
  }
  return patches;
}

namespace {

Pose look_pose(const Eigen::Vector3d& position, double yaw, double pitch) {
  // Small yaw about y then pitch about x, applied to a forward (+z) camera.
  Eigen::Matrix3d ry, rx;
  ry << std::cos(yaw), 0, std::sin(yaw), 0, 1, 0, -std::sin(yaw), 0, std::cos(yaw);
  rx << 1, 0, 0, 0, std::cos(pitch), -std::sin(pitch), 0, std::sin(pitch), std::cos(pitch);
  return {ry * rx, position};
}

std::vector<Pose> lateral_arc(int frames, double step) {
  std::vector<Pose> traj;
  const double mid = 0.5 * (frames - 1);
  for (int i = 0; i < frames; ++i) {
    const double x = (i - mid) * step;
    const Eigen::Vector3d pos(x, 0.02 * std::sin(1.3 * i), -0.05 * x * x);
    const double yaw = -0.25 * std::atan2(x, 5.0);  // partial fixation on the scene
    const double pitch = 0.004 * std::sin(0.9 * i + 0.4);
    traj.push_back(look_pose(pos, yaw, pitch));
  }
  return traj;
}

std::vector<Pose> forward_corridor(int frames, double step) {
  std::vector<Pose> traj;
  for (int i = 0; i < frames; ++i) {
    const Eigen::Vector3d pos(0.04 * std::sin(0.9 * i), 0.015 * std::cos(1.1 * i), i * step);
    const double yaw = 0.008 * std::sin(0.7 * i);
    const double pitch = 0.005 * std::sin(1.2 * i + 1.0);
    traj.push_back(look_pose(pos, yaw, pitch));
  }
  return traj;
}

Intrinsics working_intrinsics() {
  Intrinsics k;
  k.fx = k.fy = 64.0;
  k.cx = 32.0;
  k.cy = 24.0;
  k.width = 64;
  k.height = 48;
  return k;
}

}  // namespace

std::vector<std::string> scene_preset_names() { return {"plane", "plane_sphere", "heightfield"}; }

std::vector<std::string> trajectory_preset_names() { return {"lateral_arc", "forward_corridor"}; }

SynthScene make_scene(const std::string& scene_preset, const std::string& trajectory_preset,
                      int frames, uint64_t seed) {
  if (frames < 1) throw Error(ErrorCode::ConfigError, "frame count must be >= 1");
  SynthScene scene;
  scene.seed = seed;
  scene.intrinsics = working_intrinsics();

  if (scene_preset == "plane") {
    PlaneSurface p;
    p.point = {0, 0, 5.0};
    p.normal = Eigen::Vector3d(0.18, -0.12, -1.0).normalized();
    scene.surfaces.push_back(p);
  } else if (scene_preset == "plane_sphere") {
    PlaneSurface p;
    p.point = {0, 0, 6.0};
    p.normal = Eigen::Vector3d(0.10, -0.06, -1.0).normalized();
    scene.surfaces.push_back(p);
    SphereSurface s;
    s.center = {0.7, 0.15, 4.2};
    s.radius = 0.9;
    scene.surfaces.push_back(s);
  } else if (scene_preset == "heightfield") {
    HeightFieldSurface hf;
    hf.z0 = 6.0;
    hf.amplitude = 0.4;
    hf.kx = 1.3;
    hf.ky = 0.9;
    scene.surfaces.push_back(hf);
    PlaneSurface back;
    back.point = {0, 0, 9.0};
    back.normal = {0, 0, -1.0};
    scene.surfaces.push_back(back);
  } else {
    throw Error(ErrorCode::ConfigError, "unknown scene preset: " + scene_preset);
  }

  if (trajectory_preset == "lateral_arc") {
    scene.trajectory = lateral_arc(frames, 0.16);
  } else if (trajectory_preset == "forward_corridor") {
    scene.trajectory = forward_corridor(frames, 0.14);
  } else {
    throw Error(ErrorCode::ConfigError, "unknown trajectory preset: " + trajectory_preset);
  }

  validate_scene(scene);
  return scene;
}

void validate_scene(const SynthScene& scene) {
  if (!scene.intrinsics.valid()) throw Error(ErrorCode::ConfigError, "invalid intrinsics");
  if (scene.surfaces.empty()) throw Error(ErrorCode::ConfigError, "scene has no surfaces");
  for (int f = 0; f < scene.frame_count(); ++f) {
    const DepthMap depth = render_depth(scene, f);
    int64_t hits = 0;
    double dmin = 1e30, dmax = 0.0;
    for (int64_t i = 0; i < depth.values.size(); ++i) {
      if (!depth.valid[i]) continue;
      ++hits;
      dmin = std::min(dmin, depth.values[i]);
      dmax = std::max(dmax, depth.values[i]);
    }
    if (hits * 2 < depth.values.size()) {
      throw Error(ErrorCode::ConfigError,
                  "pose " + std::to_string(f) + " sees less than half the scene");
    }
    if (dmin < 0.1 || dmax > 100.0) {
      throw Error(ErrorCode::ConfigError,
                  "pose " + std::to_string(f) + " depth range outside [0.1, 100] m");
    }
  }
}

}  // namespace flowba
