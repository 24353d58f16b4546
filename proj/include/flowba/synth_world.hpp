// Copyright 2026 flowba authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FLOWBA_SYNTH_WORLD_HPP
#define FLOWBA_SYNTH_WORLD_HPP

#include <Eigen/Core>
#include <string>
#include <variant>
#include <vector>

#include "flowba/camera.hpp"
#include "flowba/parallel.hpp"
#include "flowba/rng.hpp"
#include "flowba/types.hpp"

namespace flowba {

// Analytic ground-truth world: parametric surfaces, a camera trajectory and
// procedural textures, with exact depth / flow / occlusion rendering. All
// geometry is evaluated in closed form (the height field by bracketed
// bisection to 1e-12), so rendered quantities are trustworthy to far below
// the tolerances of any consumer.

struct PlaneSurface {
  Eigen::Vector3d point = {0, 0, 5};
  Eigen::Vector3d normal = {0, 0, -1};  // oriented toward the cameras
};

struct SphereSurface {
  Eigen::Vector3d center = {0, 0, 4};
  double radius = 1.0;
};

// Wavy wall z = z0 - amplitude * sin(kx * x) * cos(ky * y), facing -z.
struct HeightFieldSurface {
  double z0 = 6.0;
  double amplitude = 0.4;
  double kx = 1.3;
  double ky = 0.9;
};

using Surface = std::variant<PlaneSurface, SphereSurface, HeightFieldSurface>;

// Multi-frequency sinusoid texture over world position, plus one designated
// textureless rectangle (in world x/y) where the field is constant.
struct TextureSpec {
  double base_frequency = 2.1;
  double amplitude = 1.0;
  bool textureless_rect_enabled = true;
  Eigen::Vector2d rect_min = {-0.9, -0.7};
  Eigen::Vector2d rect_max = {0.1, 0.2};
};

struct SynthScene {
  std::vector<Surface> surfaces;
  std::vector<Pose> trajectory;  // camera-to-world per frame
  Intrinsics intrinsics;
  TextureSpec texture;
  uint64_t seed = 0;

  int frame_count() const { return int(trajectory.size()); }
};

// First ray-surface hit along the pixel ray; t is z-depth in the camera
// frame because rays are cast with unit camera z.
struct RayHit {
  bool hit = false;
  double depth = 0.0;
  int surface = -1;
  Eigen::Vector3d point_world = Eigen::Vector3d::Zero();
};

RayHit cast_ray(const SynthScene& scene, const Pose& cam_to_world, const Pixel& pixel);

// Scalar texture value at a world point.
double texture_value(const SynthScene& scene, const Eigen::Vector3d& point_world);

// Exact z-depth per pixel; pixels whose ray misses every surface are invalid.
DepthMap render_depth(const SynthScene& scene, int frame, Exec exec = Exec::Parallel);

// Matching features: the texture value seen by each pixel, optionally plus
// per-frame Gaussian noise (seeded per frame so renders are reproducible).
GridF render_features(const SynthScene& scene, int frame, double noise_sigma,
                      Exec exec = Exec::Parallel);

// Exact flow induced by the true geometry, with an occlusion mask from a ray
// recast in the target frame (tolerance 1e-6 m).
struct GtFlow {
  FlowField flow;          // confidence left at 1 everywhere valid
  GridMask occluded;       // defined on valid pixels
  GridMask valid;          // source pixel has depth and maps in front of target
};

GtFlow gt_flow(const SynthScene& scene, int frame_i, int frame_j, Exec exec = Exec::Parallel);

// Controlled corruption of flow fields and prior depth maps.
struct CorruptionPatch {
  int x = 0, y = 0, w = 0, h = 0;
  Eigen::Vector2d offset = Eigen::Vector2d::Zero();
};

struct CorruptionSpec {
  double flow_noise_sigma = 0.0;            // px, added per component
  std::vector<CorruptionPatch> patches;     // additive offsets inside rects
  double depth_noise_fraction = 0.0;        // multiplicative, uniform +-f
  bool occlusion_injection = false;         // scramble flow on occluded pixels
  double occlusion_offset_px = 6.0;
};

struct CorruptedFlow {
  FlowField flow;
  GridMask corrupted;  // pixels given gross offsets; sigma noise is unmarked
};

CorruptedFlow corrupt_flow(const FlowField& input, const GridMask& occluded,
                           const CorruptionSpec& spec, uint64_t seed);

// Prior depth within +-fraction of the input, multiplicative, deterministic.
DepthMap corrupt_depth(const DepthMap& input, double fraction, uint64_t seed);

// Random patch layout covering roughly the requested fraction of the grid.
std::vector<CorruptionPatch> make_patches(int width, int height, double target_fraction,
                                          int patch_size, double min_offset_px,
                                          double max_offset_px, uint64_t seed);

// Named presets reachable from the CLI.
std::vector<std::string> scene_preset_names();
std::vector<std::string> trajectory_preset_names();
SynthScene make_scene(const std::string& scene_preset, const std::string& trajectory_preset,
                      int frames, uint64_t seed);

// Construction-time checks: coverage of at least half the image per pose and
// all rendered depths inside [0.1, 100] m. Throws Error(ConfigError).
void validate_scene(const SynthScene& scene);

}  // namespace flowba

#endif  // FLOWBA_SYNTH_WORLD_HPP
