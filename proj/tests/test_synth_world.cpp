// Copyright 2026 flowba authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "flowba/error.hpp"
#include "flowba/synth_world.hpp"

using namespace flowba;

namespace {

Intrinsics test_k() {
  Intrinsics k;
  k.fx = 64.0;
  k.fy = 64.0;
  k.cx = 32.0;
  k.cy = 24.0;
  k.width = 64;
  k.height = 48;
  return k;
}

Pose translated(double x, double y, double z) {
  Pose p = Pose::identity();
  p.translation = Eigen::Vector3d(x, y, z);
  return p;
}

SynthScene fronto_plane_scene(double depth, std::vector<Pose> trajectory) {
  SynthScene scene;
  scene.intrinsics = test_k();
  PlaneSurface plane;
  plane.point = Eigen::Vector3d(0, 0, depth);
  plane.normal = Eigen::Vector3d(0, 0, -1);
  scene.surfaces.push_back(plane);
  scene.trajectory = std::move(trajectory);
  scene.texture.textureless_rect_enabled = false;
  return scene;
}

}  // namespace

TEST_CASE("a fronto-parallel plane renders constant exact depth") {
  const SynthScene scene = fronto_plane_scene(5.0, {Pose::identity()});
  const DepthMap depth = render_depth(scene, 0);
  for (int64_t i = 0; i < depth.values.size(); ++i) {
    REQUIRE(depth.valid[i] == 1);
    CHECK(depth.values[i] == 5.0);
  }
}

TEST_CASE("the axial sphere pixel sees center minus radius") {
  SynthScene scene;
  scene.intrinsics = test_k();
  scene.surfaces.push_back(SphereSurface{});  // center (0,0,4), radius 1
  scene.trajectory = {Pose::identity()};
  const RayHit hit = cast_ray(scene, scene.trajectory[0], Pixel(32.0, 24.0));
  REQUIRE(hit.hit);
  CHECK(hit.depth == doctest::Approx(3.0).epsilon(1e-14));
  CHECK((hit.point_world - Eigen::Vector3d(0, 0, 3)).norm() < 1e-12);
}

TEST_CASE("oblique plane depth matches the closed-form ray solution") {
  SynthScene scene;
  scene.intrinsics = test_k();
  PlaneSurface plane;
  plane.point = Eigen::Vector3d(0.3, -0.2, 6.0);
  plane.normal = Eigen::Vector3d(0.2, 0.1, -1.0).normalized();
  scene.surfaces.push_back(plane);
  scene.trajectory = {Pose::identity()};
  const DepthMap depth = render_depth(scene, 0);
  const Intrinsics k = scene.intrinsics;
  for (int y = 0; y < 48; y += 5) {
    for (int x = 0; x < 64; x += 7) {
      const Eigen::Vector3d dir((x - k.cx) / k.fx, (y - k.cy) / k.fy, 1.0);
      const double t = plane.normal.dot(plane.point) / plane.normal.dot(dir);
      REQUIRE(depth.valid(x, y) == 1);
      CHECK(depth.values(x, y) == doctest::Approx(t).epsilon(1e-9));
    }
  }
}

TEST_CASE("height field hits satisfy the implicit surface equation") {
  SynthScene scene;
  scene.intrinsics = test_k();
  HeightFieldSurface hf;
  scene.surfaces.push_back(hf);
  scene.trajectory = {Pose::identity()};
  int checked = 0;
  for (int y = 0; y < 48; y += 3) {
    for (int x = 0; x < 64; x += 3) {
      const RayHit hit = cast_ray(scene, scene.trajectory[0], Pixel(x, y));
      if (!hit.hit) continue;
      const Eigen::Vector3d& p = hit.point_world;
      const double zs = hf.z0 - hf.amplitude * std::sin(hf.kx * p.x()) * std::cos(hf.ky * p.y());
      CHECK(std::abs(p.z() - zs) < 1e-9);
      ++checked;
    }
  }
  CHECK(checked > 200);
}

TEST_CASE("identical poses induce exactly zero flow and no occlusion") {
  const SynthScene scene = fronto_plane_scene(5.0, {Pose::identity(), Pose::identity()});
  const GtFlow gt = gt_flow(scene, 0, 1);
  for (int64_t i = 0; i < gt.valid.size(); ++i) {
    REQUIRE(gt.valid[i] == 1);
    CHECK(gt.flow.flow[i].norm() == 0.0);
    CHECK(gt.occluded[i] == 0);
    CHECK(gt.flow.confidence[i] == 1.0);
  }
}

TEST_CASE("lateral translation over a fronto plane gives constant disparity") {
  const double t = 0.3, d = 5.0;
  const SynthScene scene = fronto_plane_scene(d, {Pose::identity(), translated(t, 0, 0)});
  const GtFlow gt = gt_flow(scene, 0, 1);
  const double expected = -scene.intrinsics.fx * t / d;
  for (int64_t i = 0; i < gt.valid.size(); ++i) {
    REQUIRE(gt.valid[i] == 1);
    CHECK(gt.flow.flow[i].x() == doctest::Approx(expected).epsilon(1e-12));
    CHECK(std::abs(gt.flow.flow[i].y()) < 1e-12);
  }
}

TEST_CASE("flow validity drops when targets fall behind the second camera") {
  // The second camera sits past the plane, so every mapped point has negative depth.
  const SynthScene scene = fronto_plane_scene(5.0, {Pose::identity(), translated(0, 0, 6.0)});
  const GtFlow gt = gt_flow(scene, 0, 1);
  for (int64_t i = 0; i < gt.valid.size(); ++i) CHECK(gt.valid[i] == 0);
}

TEST_CASE("occlusion flags match an independent segment-sphere test") {
  SynthScene scene;
  scene.intrinsics = test_k();
  PlaneSurface plane;
  plane.point = Eigen::Vector3d(0, 0, 6.0);
  plane.normal = Eigen::Vector3d(0, 0, -1);
  scene.surfaces.push_back(plane);
  SphereSurface sphere;
  sphere.center = Eigen::Vector3d(0, 0, 4.0);
  sphere.radius = 1.0;
  scene.surfaces.push_back(sphere);
  scene.trajectory = {Pose::identity(), translated(0.5, 0, 0)};

  const GtFlow gt = gt_flow(scene, 0, 1);
  const Eigen::Vector3d origin_j = scene.trajectory[1].translation;

  int occluded_checked = 0, visible_checked = 0;
  for (int y = 0; y < 48; ++y) {
    for (int x = 0; x < 64; ++x) {
      if (!gt.valid(x, y)) continue;
      const RayHit hit = cast_ray(scene, scene.trajectory[0], Pixel(x, y));
      REQUIRE(hit.hit);
      const Eigen::Vector3d v = hit.point_world - origin_j;
      const Eigen::Vector3d oc = origin_j - sphere.center;
      const double a = v.squaredNorm();
      const double b = 2.0 * v.dot(oc);
      const double c = oc.squaredNorm() - sphere.radius * sphere.radius;
      const double disc = b * b - 4.0 * a * c;

      // Skip grazing rays where tolerance conventions could differ.
      const double dmin2 = c - b * b / (4.0 * a);  // squared line-center gap minus r^2
      if (std::abs(dmin2) < 1e-3) continue;

      bool oracle = false;
      if (disc > 0.0) {
        const double s1 = (-b - std::sqrt(disc)) / (2.0 * a);
        if (s1 > 1e-6 && s1 < 1.0 - 1e-4) oracle = true;
      }
      CHECK(int(gt.occluded(x, y)) == int(oracle));
      (oracle ? occluded_checked : visible_checked) += 1;
    }
  }
  CHECK(occluded_checked > 30);
  CHECK(visible_checked > 1500);
}

TEST_CASE("noise-free features equal the texture at the hit point") {
  SynthScene scene = fronto_plane_scene(5.0, {Pose::identity()});
  scene.texture.textureless_rect_enabled = true;
  const GridF features = render_features(scene, 0, 0.0);
  for (int y = 0; y < 48; y += 5) {
    for (int x = 0; x < 64; x += 5) {
      const RayHit hit = cast_ray(scene, scene.trajectory[0], Pixel(x, y));
      REQUIRE(hit.hit);
      CHECK(features(x, y) == texture_value(scene, hit.point_world));
    }
  }
}

TEST_CASE("the textureless rectangle is exactly constant") {
  SynthScene scene = fronto_plane_scene(5.0, {Pose::identity()});
  scene.texture.textureless_rect_enabled = true;
  const double inside = texture_value(scene, Eigen::Vector3d(-0.4, -0.25, 5.0));
  CHECK(inside == 0.123 * scene.texture.amplitude);
  CHECK(texture_value(scene, Eigen::Vector3d(0.0, 0.0, 5.0)) == inside);
  // Outside the rectangle the field varies.
  const double a = texture_value(scene, Eigen::Vector3d(0.5, 0.5, 5.0));
  const double b = texture_value(scene, Eigen::Vector3d(0.7, 0.4, 5.0));
  CHECK(a != b);
  scene.texture.textureless_rect_enabled = false;
  CHECK(texture_value(scene, Eigen::Vector3d(-0.4, -0.25, 5.0)) != inside);
}

TEST_CASE("feature noise is reproducible per frame and differs across frames") {
  SynthScene scene = fronto_plane_scene(5.0, {Pose::identity(), Pose::identity()});
  scene.seed = 77;
  const GridF f0a = render_features(scene, 0, 0.3);
  const GridF f0b = render_features(scene, 0, 0.3);
  const GridF f1 = render_features(scene, 1, 0.3);
  CHECK(f0a == f0b);
  CHECK_FALSE(f0a == f1);  // same geometry, different frame stream
}

TEST_CASE("depth corruption stays inside the multiplicative band") {
  DepthMap depth(0, 16, 12);
  depth.values.fill(2.0);
  const DepthMap out = corrupt_depth(depth, 0.1, 99);
  bool moved = false;
  for (int64_t i = 0; i < out.values.size(); ++i) {
    CHECK(out.valid[i] == 1);
    CHECK(out.values[i] >= 1.8);
    CHECK(out.values[i] <= 2.2);
    moved |= out.values[i] != 2.0;
  }
  CHECK(moved);
  const DepthMap again = corrupt_depth(depth, 0.1, 99);
  CHECK(again.values == out.values);
  const DepthMap other = corrupt_depth(depth, 0.1, 100);
  CHECK_FALSE(other.values == out.values);
}

TEST_CASE("a single corruption patch moves exactly its own pixels") {
  FlowField flow(0, 1, 32, 24);
  flow.flow.fill(Eigen::Vector2d::Zero());
  GridMask occluded(32, 24, 0);
  CorruptionSpec spec;
  CorruptionPatch patch;
  patch.x = 5;
  patch.y = 7;
  patch.w = 10;
  patch.h = 10;
  patch.offset = Eigen::Vector2d(8, 0);
  spec.patches.push_back(patch);

  const CorruptedFlow out = corrupt_flow(flow, occluded, spec, 0);
  int marked = 0;
  for (int y = 0; y < 24; ++y) {
    for (int x = 0; x < 32; ++x) {
      const bool inside = x >= 5 && x < 15 && y >= 7 && y < 17;
      CHECK(int(out.corrupted(x, y)) == int(inside));
      if (inside) {
        CHECK((out.flow.flow(x, y) - Eigen::Vector2d(8, 0)).norm() == 0.0);
        ++marked;
      } else {
        CHECK(out.flow.flow(x, y).norm() == 0.0);
      }
    }
  }
  CHECK(marked == 100);
}

TEST_CASE("occlusion injection scrambles flagged pixels by the set magnitude") {
  FlowField flow(0, 1, 16, 12);
  flow.flow.fill(Eigen::Vector2d::Zero());
  GridMask occluded(16, 12, 0);
  occluded(3, 4) = 1;
  occluded(10, 9) = 1;
  CorruptionSpec spec;
  spec.occlusion_injection = true;
  spec.occlusion_offset_px = 6.0;
  const CorruptedFlow out = corrupt_flow(flow, occluded, spec, 5);
  for (int y = 0; y < 12; ++y) {
    for (int x = 0; x < 16; ++x) {
      if (occluded(x, y)) {
        CHECK(out.corrupted(x, y) == 1);
        CHECK(out.flow.flow(x, y).norm() == doctest::Approx(6.0).epsilon(1e-12));
      } else {
        CHECK(out.corrupted(x, y) == 0);
        CHECK(out.flow.flow(x, y).norm() == 0.0);
      }
    }
  }
}

TEST_CASE("gaussian flow noise perturbs without marking pixels") {
  FlowField flow(0, 1, 16, 12);
  flow.flow.fill(Eigen::Vector2d(1.0, -2.0));
  GridMask occluded(16, 12, 0);
  CorruptionSpec spec;
  spec.flow_noise_sigma = 0.05;
  const CorruptedFlow out = corrupt_flow(flow, occluded, spec, 3);
  bool moved = false;
  for (int64_t i = 0; i < out.flow.flow.size(); ++i) {
    CHECK(out.corrupted[i] == 0);
    moved |= (out.flow.flow[i] - Eigen::Vector2d(1.0, -2.0)).norm() > 0.0;
  }
  CHECK(moved);
}

TEST_CASE("random patch layouts respect bounds, offsets, and target area") {
  const int w = 64, h = 48;
  const auto patches = make_patches(w, h, 0.10, 4, 8.0, 15.0, 42);
  CHECK(!patches.empty());
  GridMask covered(w, h, 0);
  for (const CorruptionPatch& p : patches) {
    CHECK(p.x >= 0);
    CHECK(p.y >= 0);
    CHECK(p.x + p.w <= w);
    CHECK(p.y + p.h <= h);
    CHECK(p.w > 0);
    CHECK(p.h > 0);
    const double mag = p.offset.norm();
    CHECK(mag >= 8.0 - 1e-12);
    CHECK(mag <= 15.0 + 1e-12);
    for (int y = p.y; y < p.y + p.h; ++y)
      for (int x = p.x; x < p.x + p.w; ++x) covered(x, y) = 1;
  }
  int64_t on = 0;
  for (int64_t i = 0; i < covered.size(); ++i) on += covered[i];
  const double fraction = double(on) / double(w * h);
  CHECK(fraction > 0.05);
  CHECK(fraction < 0.15);
}

TEST_CASE("presets construct validated scenes and reject unknown names") {
  const auto scenes = scene_preset_names();
  const auto trajectories = trajectory_preset_names();
  CHECK(scenes.size() == 3);
  CHECK(trajectories.size() == 2);
  for (const auto& s : scenes) {
    for (const auto& t : trajectories) {
      const SynthScene scene = make_scene(s, t, 3, 1);
      CHECK(scene.frame_count() == 3);
    }
  }
  CHECK_THROWS_AS(make_scene("vortex", "lateral_arc", 3, 1), Error);
  CHECK_THROWS_AS(make_scene("plane", "spiral", 3, 1), Error);
  CHECK_THROWS_AS(make_scene("plane", "lateral_arc", 0, 1), Error);

  SynthScene empty;
  empty.intrinsics = test_k();
  empty.trajectory = {Pose::identity()};
  CHECK_THROWS_AS(validate_scene(empty), Error);
}

TEST_CASE("serial and parallel rendering agree bit for bit") {
  const SynthScene scene = make_scene("plane_sphere", "lateral_arc", 3, 9);
  const DepthMap ds = render_depth(scene, 1, Exec::Serial);
  const DepthMap dp = render_depth(scene, 1, Exec::Parallel);
  CHECK(ds.values == dp.values);
  CHECK(ds.valid == dp.valid);

  const GridF fs = render_features(scene, 1, 0.2, Exec::Serial);
  const GridF fp = render_features(scene, 1, 0.2, Exec::Parallel);
  CHECK(fs == fp);

  const GtFlow gs = gt_flow(scene, 0, 2, Exec::Serial);
  const GtFlow gp = gt_flow(scene, 0, 2, Exec::Parallel);
  CHECK(gs.flow.flow == gp.flow.flow);
  CHECK(gs.flow.confidence == gp.flow.confidence);
  CHECK(gs.occluded == gp.occluded);
  CHECK(gs.valid == gp.valid);
}
