// Copyright 2026 flowba authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "flowba/config.hpp"
#include "flowba/error.hpp"
#include "flowba/experiment.hpp"
#include "flowba/trajectory_io.hpp"

namespace {

using namespace flowba;

ExperimentConfig assemble_config(const std::string& config_path,
                                 const std::vector<std::string>& overrides,
                                 const std::string& out_dir) {
  ExperimentConfig cfg;
  if (!config_path.empty()) cfg = load_config(config_path);
  for (const std::string& assignment : overrides) apply_override(cfg, assignment);
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  validate_config(cfg);
  return cfg;
}

int cmd_run(const ExperimentConfig& cfg) {
  const RunReport report = run_experiment(cfg, true);
  std::printf("output_dir: %s\n", resolve_output_dir(cfg).c_str());
  std::printf("iterations: %d\n", int(report.rows.size()));
  std::printf("final_ate_m: %.6g\n", report.final_ate_m);
  std::printf("accuracy_m: %.6g\n", report.final_cloud.accuracy);
  std::printf("completeness_m: %.6g\n", report.final_cloud.completeness);
  std::printf("chamfer_m: %.6g\n", report.final_cloud.chamfer);
  std::printf("wall_seconds: %.3f\n", report.wall_seconds);
  return 0;
}

int cmd_ablate(const ExperimentConfig& cfg) {
  const std::vector<AblationRow> rows = run_ablation(cfg);
  const std::string csv = ablation_csv(rows);
  namespace fs = std::filesystem;
  const fs::path out_dir = resolve_output_dir(cfg);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + out_dir.string());
  std::ofstream out(out_dir / "ablation.csv");
  if (!out) throw Error(ErrorCode::IoError, "cannot write ablation.csv");
  out << csv;
  std::fputs(csv.c_str(), stdout);
  return 0;
}

int cmd_eval_traj(const std::string& est_path, const std::string& gt_path, bool no_scale,
                  double max_dt, double auc_max) {
  const Trajectory est = read_trajectory(est_path);
  const Trajectory gt = read_trajectory(gt_path);
  const auto pairs = associate(est, gt, max_dt);
  if (pairs.size() < 3) throw Error(ErrorCode::TooFewPairs, "too few associated poses");
  std::vector<Eigen::Vector3d> p_est, p_gt;
  for (const auto& p : pairs) {
    p_est.push_back(est[p.est_index].pose.translation);
    p_gt.push_back(gt[p.gt_index].pose.translation);
  }
  const Alignment a = align_points(p_est, p_gt, !no_scale);
  std::vector<double> errors;
  for (size_t i = 0; i < p_est.size(); ++i)
    errors.push_back((a.apply(p_est[i]) - p_gt[i]).norm());
  std::printf("pairs: %zu\n", pairs.size());
  std::printf("ate_m: %.6g\n", ate_rmse(est, gt, !no_scale, max_dt));
  std::printf("auc_pct: %.6g\n", auc(errors, auc_max));
  return 0;
}

int cmd_eval_cloud(const std::string& est_path, const std::string& gt_path, double clip) {
  const auto est = read_ply(est_path);
  const auto gt = read_ply(gt_path);
  const CloudMetrics m = cloud_metrics(est, gt, clip);
  std::printf("accuracy_m: %.6g\n", m.accuracy);
  std::printf("completeness_m: %.6g\n", m.completeness);
  std::printf("chamfer_m: %.6g\n", m.chamfer);
  return 0;
}

int cmd_synth(const ExperimentConfig& cfg) {
  const SynthScene scene = make_scene(cfg.scene, cfg.trajectory, cfg.frames, cfg.seed);
  const Exec exec = cfg.parallel ? Exec::Parallel : Exec::Serial;
  std::vector<Pose> c2w;
  std::vector<DepthMap> depths;
  Trajectory traj;
  for (int f = 0; f < scene.frame_count(); ++f) {
    c2w.push_back(scene.trajectory[size_t(f)]);
    depths.push_back(render_depth(scene, f, exec));
    traj.push_back({0.1 * f, scene.trajectory[size_t(f)]});
  }
  std::vector<Eigen::Vector3d> cloud;
  const Intrinsics& k = scene.intrinsics;
  for (int f = 0; f < scene.frame_count(); ++f)
    for (int y = 0; y < k.height; ++y)
      for (int x = 0; x < k.width; ++x)
        if (depths[size_t(f)].valid(x, y))
          cloud.push_back(c2w[size_t(f)] *
                          backproject(Pixel(double(x), double(y)), depths[size_t(f)].values(x, y), k));
  namespace fs = std::filesystem;
  const fs::path out_dir = resolve_output_dir(cfg);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + out_dir.string());
  write_trajectory((out_dir / "gt_trajectory.txt").string(), traj);
  write_ply((out_dir / "cloud_gt.ply").string(), cloud);
  std::printf("output_dir: %s\n", out_dir.string().c_str());
  std::printf("frames: %d\n", scene.frame_count());
  std::printf("points: %zu\n", cloud.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flowba: flow-consistent bundle adjustment on synthetic scenes"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::vector<std::string> overrides;
  auto add_config_options = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--set", overrides, "override as dotted.key=value (repeatable)");
    sub->add_option("--out", out_dir, "output directory");
  };

  CLI::App* run = app.add_subcommand("run", "run one experiment");
  add_config_options(run);
  CLI::App* ablate = app.add_subcommand("ablate", "run the 8-way switch grid");
  add_config_options(ablate);
  CLI::App* synth = app.add_subcommand("synth", "dump ground-truth scene artifacts");
  add_config_options(synth);

  std::string est_path, gt_path;
  bool no_scale = false;
  double max_dt = 0.02, auc_max = 0.5, clip = 0.5;
  CLI::App* eval_traj = app.add_subcommand("eval-traj", "ATE/AUC between trajectory files");
  eval_traj->add_option("est", est_path, "estimated trajectory")->required();
  eval_traj->add_option("gt", gt_path, "reference trajectory")->required();
  eval_traj->add_flag("--no-scale", no_scale, "rigid alignment instead of similarity");
  eval_traj->add_option("--max-dt", max_dt, "association window, seconds");
  eval_traj->add_option("--auc-max", auc_max, "largest AUC threshold, meters");
  CLI::App* eval_cloud = app.add_subcommand("eval-cloud", "clipped cloud metrics between PLYs");
  eval_cloud->add_option("est", est_path, "estimated cloud")->required();
  eval_cloud->add_option("gt", gt_path, "reference cloud")->required();
  eval_cloud->add_option("--clip", clip, "distance clip, meters");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (run->parsed()) return cmd_run(assemble_config(config_path, overrides, out_dir));
    if (ablate->parsed()) return cmd_ablate(assemble_config(config_path, overrides, out_dir));
    if (synth->parsed()) return cmd_synth(assemble_config(config_path, overrides, out_dir));
    if (eval_traj->parsed()) return cmd_eval_traj(est_path, gt_path, no_scale, max_dt, auc_max);
    if (eval_cloud->parsed()) return cmd_eval_cloud(est_path, gt_path, clip);
  } catch (const flowba::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: E/Internal: %s\n", e.what());
    return 2;
  }
  return 1;
}
