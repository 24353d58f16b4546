// Copyright 2026 flowba authors
// SPDX-License-Identifier: Apache-2.0

#include "flowba/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "flowba/error.hpp"
#include "flowba/trajectory_io.hpp"

namespace flowba {

namespace {

uint64_t sub_seed(uint64_t base, uint64_t salt_a, uint64_t salt_b = 0) {
  Rng r = Rng(base).fork(salt_a).fork(salt_b);
  return r.next_u64();
}

constexpr uint64_t kSaltPose = 0x706f7365;
constexpr uint64_t kSaltPrior = 0x7072696f;
constexpr uint64_t kSaltPatches = 0x70617463;
constexpr uint64_t kSaltFlow = 0x666c6f77;

Pose perturb_pose(const Pose& pose, const PoseNoiseConfig& noise, Rng& rng) {
  Eigen::Vector3d axis(rng.normal(), rng.normal(), rng.normal());
  Eigen::Vector3d dir(rng.normal(), rng.normal(), rng.normal());
  if (axis.norm() < 1e-12) axis = Eigen::Vector3d::UnitZ();
  if (dir.norm() < 1e-12) dir = Eigen::Vector3d::UnitX();
  const double angle = noise.rotation_deg * std::numbers::pi / 180.0;
  Pose out;
  out.rotation = so3_exp(axis.normalized() * angle) * pose.rotation;
  out.translation = pose.translation + dir.normalized() * noise.translation_m;
  return out;
}

Trajectory graph_trajectory(const CovisGraph& graph) {
  Trajectory t;
  t.reserve(size_t(graph.node_count()));
  for (int i = 0; i < graph.node_count(); ++i)
    t.push_back({0.1 * i, graph.node(i).pose.inverse()});
  return t;
}

Trajectory scene_trajectory(const SynthScene& scene) {
  Trajectory t;
  t.reserve(scene.trajectory.size());
  for (size_t i = 0; i < scene.trajectory.size(); ++i)
    t.push_back({0.1 * double(i), scene.trajectory[i]});
  return t;
}

std::vector<Eigen::Vector3d> backproject_cloud(const std::vector<Pose>& cam_to_world,
                                               const std::vector<DepthMap>& depths,
                                               const Intrinsics& k) {
  std::vector<Eigen::Vector3d> cloud;
  for (size_t f = 0; f < depths.size(); ++f) {
    const DepthMap& d = depths[f];
    for (int y = 0; y < d.values.height(); ++y)
      for (int x = 0; x < d.values.width(); ++x) {
        if (!d.valid(x, y)) continue;
        const Eigen::Vector3d p = backproject(Pixel(double(x), double(y)), d.values(x, y), k);
        cloud.push_back(cam_to_world[f] * p);
      }
  }
  return cloud;
}

struct FlowStats {
  double mean_error = 0.0;
  double recovered = 1.0;
};

FlowStats flow_stats(const CovisGraph& graph, const std::vector<GtFlow>& gt,
                     const std::vector<GridMask>& corrupted) {
  double err_sum = 0.0;
  long err_count = 0;
  long rec_hit = 0, rec_total = 0;
  for (size_t e = 0; e < graph.edges().size(); ++e) {
    const GridV2& est = graph.edges()[e].flow.flow;
    const GtFlow& g = gt[e];
    for (int idx = 0; idx < est.size(); ++idx) {
      if (!g.valid[idx]) continue;
      const double err = (est[idx] - g.flow.flow[idx]).norm();
      err_sum += err;
      ++err_count;
      if (corrupted[e][idx]) {
        ++rec_total;
        rec_hit += err < 1.0;
      }
    }
  }
  FlowStats s;
  if (err_count > 0) s.mean_error = err_sum / double(err_count);
  if (rec_total > 0) s.recovered = double(rec_hit) / double(rec_total);
  return s;
}

void append_row(std::string& out, const IterationRow& r) {
  char buf[320];
  std::snprintf(buf, sizeof(buf), "%d,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%d\n", r.iteration,
                r.cost, r.ate_m, r.mean_flow_error_px, r.recovered_fraction, r.mask_on_fraction,
                r.omega_mean, r.ba_rejected);
  out += buf;
}

}  // namespace

std::string report_csv(const RunReport& report) {
  std::string out =
      "iteration,cost,ate_m,mean_flow_error_px,recovered_fraction,mask_on_fraction,"
      "omega_mean,ba_rejected\n";
  for (const IterationRow& r : report.rows) append_row(out, r);
  return out;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::string out = "bi_ba,edge_mask,node_mask,ate_m,accuracy_m,completeness_m,chamfer_m\n";
  char buf[256];
  for (const AblationRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%d,%.10g,%.10g,%.10g,%.10g\n", int(r.bi_ba),
                  int(r.edge_mask), int(r.node_mask), r.ate_m, r.cloud.accuracy,
                  r.cloud.completeness, r.cloud.chamfer);
    out += buf;
  }
  return out;
}

RunReport run_experiment(const ExperimentConfig& config, bool write_artifacts) {
  const auto t0 = std::chrono::steady_clock::now();
  validate_config(config);
  const Exec exec = config.parallel ? Exec::Parallel : Exec::Serial;

  const SynthScene scene =
      make_scene(config.scene, config.trajectory, config.frames, config.seed);
  const Intrinsics& k = scene.intrinsics;
  const int frames = scene.frame_count();

  std::vector<DepthMap> gt_depths;
  std::vector<GridF> features;
  gt_depths.reserve(size_t(frames));
  features.reserve(size_t(frames));
  for (int f = 0; f < frames; ++f) {
    gt_depths.push_back(render_depth(scene, f, exec));
    features.push_back(render_features(scene, f, config.feature_noise_sigma, exec));
  }

  CovisGraph graph;
  Rng pose_rng = Rng(config.seed).fork(kSaltPose);
  for (int f = 0; f < frames; ++f) {
    Rng frame_rng = pose_rng.fork(uint64_t(f));
    Keyframe kf;
    kf.pose = perturb_pose(scene.trajectory[size_t(f)].inverse(), config.pose_noise, frame_rng);
    kf.depth = corrupt_depth(gt_depths[size_t(f)], config.corruption.prior_depth_noise,
                             sub_seed(config.seed, kSaltPrior, uint64_t(f)));
    kf.features = features[size_t(f)];
    kf.prior.depth = kf.depth;
    kf.prior.noise_fraction = config.corruption.prior_depth_noise;
    graph.add_node(std::move(kf));
  }

  const auto pairs = batch_edge_pairs(frames, config.graph.batch_radius);
  std::vector<GtFlow> gt_flows;
  std::vector<GridMask> corrupted_masks;
  gt_flows.reserve(pairs.size());
  corrupted_masks.reserve(pairs.size());
  for (const auto& [i, j] : pairs) {
    graph.add_edge(i, j);
    GtFlow gt = gt_flow(scene, i, j, exec);
    const uint64_t pair_salt = uint64_t(i) * 0x1f123bb5 + uint64_t(j);
    CorruptionSpec spec;
    spec.flow_noise_sigma = config.corruption.flow_noise_sigma;
    spec.patches = make_patches(k.width, k.height, config.corruption.fraction,
                                config.corruption.patch_size, config.corruption.min_offset_px,
                                config.corruption.max_offset_px,
                                sub_seed(config.seed, kSaltPatches, pair_salt));
    spec.occlusion_injection = config.corruption.occlusion_injection;
    CorruptedFlow corrupted =
        corrupt_flow(gt.flow, gt.occluded, spec, sub_seed(config.seed, kSaltFlow, pair_salt));
    CovisEdge& edge = graph.edges().back();
    edge.flow.flow = corrupted.flow.flow;
    corrupted_masks.push_back(corrupted.corrupted);
    gt_flows.push_back(std::move(gt));
  }

  OuterConfig outer;
  outer.frontend = config.frontend;
  outer.ba = config.ba;
  outer.ba.exec = exec;
  outer.ba.geometry_term = config.enable_bi_ba;
  outer.reliability = config.reliability;
  outer.enable_edge_mask = config.enable_edge_mask;
  outer.enable_node_mask = config.enable_node_mask;
  // Pin the gauge to the prior's scale so it cannot creep across iterations.
  if (outer.ba.scale_anchor_frame >= 0 && outer.ba.scale_anchor_frame < frames &&
      !std::isfinite(outer.ba.anchor_target)) {
    outer.ba.anchor_target =
        mean_inverse_depth(graph.node(outer.ba.scale_anchor_frame).depth);
  }

  const Trajectory gt_traj = scene_trajectory(scene);
  RunReport report;
  report.config = config;
  double lambda = config.ba.lambda0;
  for (int it = 0; it < config.iterations; ++it) {
    const IterationTrace trace = outer_iteration(graph, k, outer, &lambda);
    IterationRow row;
    row.iteration = it;
    row.cost = trace.cost;
    row.mask_on_fraction = trace.mask_on_fraction;
    row.omega_mean = trace.omega_mean;
    row.ba_rejected = trace.ba_rejected;
    if (frames >= 3) row.ate_m = ate_rmse(graph_trajectory(graph), gt_traj);
    const FlowStats fs = flow_stats(graph, gt_flows, corrupted_masks);
    row.mean_flow_error_px = fs.mean_error;
    row.recovered_fraction = fs.recovered;
    report.rows.push_back(row);
  }

  std::vector<Pose> est_c2w, gt_c2w;
  std::vector<DepthMap> est_depths;
  for (int f = 0; f < frames; ++f) {
    est_c2w.push_back(graph.node(f).pose.inverse());
    gt_c2w.push_back(scene.trajectory[size_t(f)]);
    est_depths.push_back(graph.node(f).depth);
  }
  std::vector<Eigen::Vector3d> est_cloud = backproject_cloud(est_c2w, est_depths, k);
  const std::vector<Eigen::Vector3d> gt_cloud = backproject_cloud(gt_c2w, gt_depths, k);
  if (frames >= 3) {
    std::vector<Eigen::Vector3d> est_centers, gt_centers;
    for (int f = 0; f < frames; ++f) {
      est_centers.push_back(est_c2w[size_t(f)].translation);
      gt_centers.push_back(gt_c2w[size_t(f)].translation);
    }
    const Alignment a = align_points(est_centers, gt_centers, true);
    for (Eigen::Vector3d& p : est_cloud) p = a.apply(p);
    report.final_ate_m = ate_rmse(graph_trajectory(graph), gt_traj);
  }
  report.final_cloud = cloud_metrics(est_cloud, gt_cloud, 0.5, exec);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (write_artifacts) {
    namespace fs = std::filesystem;
    const fs::path out_dir = resolve_output_dir(config);
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + out_dir.string());
    auto write_text = [&](const char* name, const std::string& text) {
      std::ofstream out(out_dir / name);
      if (!out) throw Error(ErrorCode::IoError, std::string("cannot write ") + name);
      out << text;
    };
    write_text("report.csv", report_csv(report));
    write_text("config.json", config_to_json(config).dump(2) + "\n");
    char summary[512];
    std::snprintf(summary, sizeof(summary),
                  "iterations: %d\nfinal ATE (m): %.6g\naccuracy (m): %.6g\n"
                  "completeness (m): %.6g\nchamfer (m): %.6g\nwall time (s): %.3f\n",
                  config.iterations, report.final_ate_m, report.final_cloud.accuracy,
                  report.final_cloud.completeness, report.final_cloud.chamfer,
                  report.wall_seconds);
    write_text("summary.txt", summary);
    write_trajectory((out_dir / "est_trajectory.txt").string(), graph_trajectory(graph));
    write_trajectory((out_dir / "gt_trajectory.txt").string(), gt_traj);
    write_ply((out_dir / "cloud_est.ply").string(), est_cloud);
    write_ply((out_dir / "cloud_gt.ply").string(), gt_cloud);
  }
  return report;
}

std::vector<AblationRow> run_ablation(const ExperimentConfig& base) {
  std::vector<AblationRow> rows;
  for (int combo = 0; combo < 8; ++combo) {
    ExperimentConfig cfg = base;
    cfg.enable_bi_ba = (combo & 4) != 0;
    cfg.enable_edge_mask = (combo & 2) != 0;
    cfg.enable_node_mask = (combo & 1) != 0;
    const RunReport report = run_experiment(cfg, false);
    AblationRow row;
    row.bi_ba = cfg.enable_bi_ba;
    row.edge_mask = cfg.enable_edge_mask;
    row.node_mask = cfg.enable_node_mask;
    row.ate_m = report.final_ate_m;
    row.cloud = report.final_cloud;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace flowba
