// Copyright 2026 flowba authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "flowba/config.hpp"
#include "flowba/error.hpp"
#include "flowba/experiment.hpp"
#include "flowba/se3.hpp"
#include "flowba/trajectory_io.hpp"

using namespace flowba;
namespace fs = std::filesystem;

namespace {

// Scratch directory for files written by these tests, wiped on entry so
// reruns start clean.
fs::path scratch_dir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "flowba_io_tests";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string path_in_scratch(const std::string& name) { return (scratch_dir() / name).string(); }

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  REQUIRE(bool(out));
  out << text;
}

std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(bool(in));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double pose_gap(const Pose& a, const Pose& b) {
  double gap = (a.rotation - b.rotation).cwiseAbs().maxCoeff();
  gap = std::max(gap, (a.translation - b.translation).cwiseAbs().maxCoeff());
  return gap;
}

// Fast experiment setup: small enough that a full run stays well under a
// second while still exercising every pipeline stage.
ExperimentConfig small_experiment() {
  ExperimentConfig cfg;
  cfg.frames = 3;
  cfg.iterations = 2;
  cfg.seed = 5;
  return cfg;
}

}  // namespace

TEST_CASE("trajectory reader accepts an identity-rotation line exactly") {
  const std::string path = path_in_scratch("identity.txt");
  write_text_file(path,
                  "# comment line\n"
                  "\n"
                  "0.5 1.0 2.0 3.0 0 0 0 1\n");
  const Trajectory t = read_trajectory(path);
  REQUIRE(t.size() == 1);
  CHECK(t[0].timestamp == 0.5);
  CHECK(t[0].pose.rotation == Eigen::Matrix3d::Identity());
  CHECK(t[0].pose.translation == Eigen::Vector3d(1.0, 2.0, 3.0));
}

TEST_CASE("trajectory round trip preserves poses through the text format") {
  Rng rng(29);
  Trajectory original;
  for (int i = 0; i < 100; ++i) {
    Eigen::Matrix<double, 6, 1> twist;
    for (int k = 0; k < 6; ++k) twist[k] = rng.uniform(-1.5, 1.5);
    TimedPose tp;
    tp.timestamp = 0.25 * double(i);
    tp.pose = se3_exp(twist);
    original.push_back(tp);
  }
  const std::string path = path_in_scratch("round_trip.txt");
  write_trajectory(path, original);
  const Trajectory back = read_trajectory(path);
  REQUIRE(back.size() == original.size());
  for (size_t i = 0; i < original.size(); ++i) {
    CHECK(std::abs(back[i].timestamp - original[i].timestamp) < 5e-7);
    CHECK(pose_gap(back[i].pose, original[i].pose) < 1e-9);
  }
  // The writer's header names the column layout.
  const std::string bytes = read_file_bytes(path);
  CHECK(bytes.rfind("# timestamp tx ty tz qx qy qz qw\n", 0) == 0);
  // Canonical sign: every written qw is non-negative.
  std::istringstream lines(bytes);
  std::string line;
  std::getline(lines, line);  // header
  while (std::getline(lines, line)) {
    std::istringstream f(line);
    double v[8];
    for (double& x : v) REQUIRE(bool(f >> x));
    CHECK(v[7] >= 0.0);
  }
}

TEST_CASE("trajectory lines with the wrong field count name the offending line") {
  const std::string short_path = path_in_scratch("short_line.txt");
  write_text_file(short_path, "0 0 0 0 0 0 1\n");
  try {
    read_trajectory(short_path);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
    CHECK(std::string(e.what()).find(":1:") != std::string::npos);
  }

  const std::string long_path = path_in_scratch("long_line.txt");
  write_text_file(long_path,
                  "# header\n"
                  "0 0 0 0 0 0 0 1\n"
                  "1 0 0 0 0 0 0 1 99\n");
  try {
    read_trajectory(long_path);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
    CHECK(std::string(e.what()).find(":3:") != std::string::npos);
  }
}

TEST_CASE("quaternions far from unit norm are rejected, near ones renormalized") {
  const std::string bad = path_in_scratch("bad_quat.txt");
  write_text_file(bad, "0 0 0 0 0 0 0 1.01\n");
  try {
    read_trajectory(bad);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonUnitQuaternion);
  }

  // Norm 1.0005 sits inside the 1e-3 tolerance and is silently renormalized.
  const std::string near = path_in_scratch("near_quat.txt");
  write_text_file(near, "0 0 0 0 0 0 0 1.0005\n");
  const Trajectory t = read_trajectory(near);
  REQUIRE(t.size() == 1);
  CHECK((t[0].pose.rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("missing trajectory file reports an io error") {
  try {
    read_trajectory(path_in_scratch("does_not_exist.txt"));
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IoError);
  }
}

TEST_CASE("ply round trip stores float32 vertices") {
  std::vector<Eigen::Vector3d> cloud = {{0.0, 0.0, 0.0},   {1.5, -2.25, 3.125},
                                        {-0.1, 0.2, -0.3}, {1e6, -1e6, 0.5},
                                        {0.333, 0.666, 0.999}};
  const std::string path = path_in_scratch("cloud.ply");
  write_ply(path, cloud);
  const std::vector<Eigen::Vector3d> back = read_ply(path);
  REQUIRE(back.size() == cloud.size());
  for (size_t i = 0; i < cloud.size(); ++i)
    for (int k = 0; k < 3; ++k) CHECK(back[i][k] == double(float(cloud[i][k])));

  const std::string bytes = read_file_bytes(path);
  CHECK(bytes.rfind("ply\nformat binary_little_endian 1.0\nelement vertex 5\n", 0) == 0);
  CHECK(bytes.find("end_header\n") != std::string::npos);
  // 5 vertices * 3 floats * 4 bytes after the header.
  const size_t header_end = bytes.find("end_header\n") + std::string("end_header\n").size();
  CHECK(bytes.size() - header_end == 5 * 3 * sizeof(float));
}

TEST_CASE("empty clouds are refused at write time") {
  try {
    write_ply(path_in_scratch("empty.ply"), {});
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyCloud);
  }
}

TEST_CASE("truncated ply payloads are detected") {
  std::vector<Eigen::Vector3d> cloud = {{1, 2, 3}, {4, 5, 6}};
  const std::string path = path_in_scratch("trunc.ply");
  write_ply(path, cloud);
  std::string bytes = read_file_bytes(path);
  bytes.resize(bytes.size() - 5);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), std::streamsize(bytes.size()));
  out.close();
  try {
    read_ply(path);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
    CHECK(std::string(e.what()).find("truncated") != std::string::npos);
  }

  const std::string not_ply = path_in_scratch("not_a.ply");
  write_text_file(not_ply, "hello\n");
  try {
    read_ply(not_ply);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
  }
}

TEST_CASE("config json round trip reproduces every field") {
  ExperimentConfig cfg;
  cfg.scene = "heightfield";
  cfg.trajectory = "forward_corridor";
  cfg.frames = 9;
  cfg.seed = 123456789;
  cfg.iterations = 3;
  cfg.feature_noise_sigma = 0.05;
  cfg.parallel = false;
  cfg.output_dir = "some/dir";
  cfg.corruption.flow_noise_sigma = 0.01;
  cfg.corruption.fraction = 0.2;
  cfg.corruption.patch_size = 6;
  cfg.corruption.min_offset_px = 9.0;
  cfg.corruption.max_offset_px = 14.0;
  cfg.corruption.occlusion_injection = false;
  cfg.corruption.prior_depth_noise = 0.02;
  cfg.pose_noise.rotation_deg = 1.5;
  cfg.pose_noise.translation_m = 0.01;
  cfg.ba.inner_ba_steps = 3;
  cfg.ba.lambda0 = 0.5;
  cfg.ba.huber_delta = 2.0;
  cfg.ba.tau = 1.5;
  cfg.ba.gauge_weight = 500.0;
  cfg.ba.depth_min = 0.2;
  cfg.ba.depth_max = 50.0;
  cfg.reliability.tau_edge = 4.0;
  cfg.reliability.tau_node = 6.0;
  cfg.frontend.radius = 2;
  cfg.frontend.step_cap = 1.25;
  cfg.frontend.blend = 0.75;
  cfg.frontend.score_scale = 3.0;
  cfg.graph.admit_threshold = 3.5;
  cfg.graph.online_k = 4;
  cfg.graph.batch_radius = 1;
  cfg.enable_bi_ba = false;
  cfg.enable_edge_mask = false;
  cfg.enable_node_mask = true;

  const ExperimentConfig back = config_from_json(config_to_json(cfg));
  CHECK(back.scene == cfg.scene);
  CHECK(back.trajectory == cfg.trajectory);
  CHECK(back.frames == cfg.frames);
  CHECK(back.seed == cfg.seed);
  CHECK(back.iterations == cfg.iterations);
  CHECK(back.feature_noise_sigma == cfg.feature_noise_sigma);
  CHECK(back.parallel == cfg.parallel);
  CHECK(back.output_dir == cfg.output_dir);
  CHECK(back.corruption.flow_noise_sigma == cfg.corruption.flow_noise_sigma);
  CHECK(back.corruption.fraction == cfg.corruption.fraction);
  CHECK(back.corruption.patch_size == cfg.corruption.patch_size);
  CHECK(back.corruption.min_offset_px == cfg.corruption.min_offset_px);
  CHECK(back.corruption.max_offset_px == cfg.corruption.max_offset_px);
  CHECK(back.corruption.occlusion_injection == cfg.corruption.occlusion_injection);
  CHECK(back.corruption.prior_depth_noise == cfg.corruption.prior_depth_noise);
  CHECK(back.pose_noise.rotation_deg == cfg.pose_noise.rotation_deg);
  CHECK(back.pose_noise.translation_m == cfg.pose_noise.translation_m);
  CHECK(back.ba.inner_ba_steps == cfg.ba.inner_ba_steps);
  CHECK(back.ba.lambda0 == cfg.ba.lambda0);
  CHECK(back.ba.huber_delta == cfg.ba.huber_delta);
  CHECK(back.ba.tau == cfg.ba.tau);
  CHECK(back.ba.gauge_weight == cfg.ba.gauge_weight);
  CHECK(back.ba.depth_min == cfg.ba.depth_min);
  CHECK(back.ba.depth_max == cfg.ba.depth_max);
  CHECK(back.reliability.tau_edge == cfg.reliability.tau_edge);
  CHECK(back.reliability.tau_node == cfg.reliability.tau_node);
  CHECK(back.frontend.radius == cfg.frontend.radius);
  CHECK(back.frontend.step_cap == cfg.frontend.step_cap);
  CHECK(back.frontend.blend == cfg.frontend.blend);
  CHECK(back.frontend.score_scale == cfg.frontend.score_scale);
  CHECK(back.graph.admit_threshold == cfg.graph.admit_threshold);
  CHECK(back.graph.online_k == cfg.graph.online_k);
  CHECK(back.graph.batch_radius == cfg.graph.batch_radius);
  CHECK(back.enable_bi_ba == cfg.enable_bi_ba);
  CHECK(back.enable_edge_mask == cfg.enable_edge_mask);
  CHECK(back.enable_node_mask == cfg.enable_node_mask);
}

TEST_CASE("unknown config keys are rejected with their full path") {
  nlohmann::json top = {{"mystery", 1}};
  try {
    config_from_json(top);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigError);
    CHECK(std::string(e.what()).find("mystery") != std::string::npos);
  }

  nlohmann::json nested = {{"ba", {{"lambdaX", 1.0}}}};
  try {
    config_from_json(nested);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigError);
    CHECK(std::string(e.what()).find("ba.lambdaX") != std::string::npos);
  }

  nlohmann::json bad_type = {{"frames", "many"}};
  try {
    config_from_json(bad_type);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigError);
    CHECK(std::string(e.what()).find("frames") != std::string::npos);
  }
}

TEST_CASE("config files load with defaults for missing keys") {
  const std::string path = path_in_scratch("partial.json");
  write_text_file(path, "{\"frames\": 4, \"ba\": {\"tau\": 2.5}}\n");
  const ExperimentConfig cfg = load_config(path);
  CHECK(cfg.frames == 4);
  CHECK(cfg.ba.tau == 2.5);
  CHECK(cfg.scene == "plane_sphere");
  CHECK(cfg.iterations == 8);

  const std::string broken = path_in_scratch("broken.json");
  write_text_file(broken, "{\"frames\": \n");
  try {
    load_config(broken);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
  }

  try {
    load_config(path_in_scratch("missing.json"));
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IoError);
  }
}

TEST_CASE("dotted overrides reach nested fields and reject unknown paths") {
  ExperimentConfig cfg;
  apply_override(cfg, "frames=9");
  CHECK(cfg.frames == 9);
  apply_override(cfg, "ba.lambda0=0.5");
  CHECK(cfg.ba.lambda0 == 0.5);
  apply_override(cfg, "scene=heightfield");
  CHECK(cfg.scene == "heightfield");
  apply_override(cfg, "corruption.occlusion_injection=false");
  CHECK(cfg.corruption.occlusion_injection == false);
  apply_override(cfg, "ablation.bi_ba=false");
  CHECK(cfg.enable_bi_ba == false);

  for (const char* bad : {"nope=1", "ba.nope=1", "no_equals", "=5", "frames=[1,2]"}) {
    try {
      ExperimentConfig fresh;
      apply_override(fresh, bad);
      CHECK_MESSAGE(false, bad);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ConfigError);
    }
  }
}

TEST_CASE("config validation rejects out-of-range values") {
  CHECK_NOTHROW(validate_config(ExperimentConfig{}));

  auto expect_reject = [](auto&& mutate, const char* label) {
    ExperimentConfig cfg;
    mutate(cfg);
    try {
      validate_config(cfg);
      CHECK_MESSAGE(false, label);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ConfigError);
    }
  };
  expect_reject([](ExperimentConfig& c) { c.scene = "volcano"; }, "scene");
  expect_reject([](ExperimentConfig& c) { c.trajectory = "spiral"; }, "trajectory");
  expect_reject([](ExperimentConfig& c) { c.frames = 0; }, "frames");
  expect_reject([](ExperimentConfig& c) { c.iterations = -1; }, "iterations");
  expect_reject([](ExperimentConfig& c) { c.corruption.fraction = 1.5; }, "fraction");
  expect_reject([](ExperimentConfig& c) { c.corruption.min_offset_px = 20.0; }, "offsets");
  expect_reject([](ExperimentConfig& c) { c.ba.depth_min = 2e3; }, "depth bounds");
  expect_reject([](ExperimentConfig& c) { c.ba.lambda0 = 0.0; }, "lambda0");
  expect_reject([](ExperimentConfig& c) { c.frontend.blend = 2.0; }, "blend");
  expect_reject([](ExperimentConfig& c) { c.graph.online_k = 0; }, "online_k");
}

TEST_CASE("output directory resolution prefers config, then environment") {
  ExperimentConfig cfg;
  cfg.output_dir = "explicit_dir";
  setenv("FLOWBA_OUTPUT_DIR", "env_dir", 1);
  CHECK(resolve_output_dir(cfg) == "explicit_dir");
  cfg.output_dir.clear();
  CHECK(resolve_output_dir(cfg) == "env_dir");
  unsetenv("FLOWBA_OUTPUT_DIR");
  CHECK(resolve_output_dir(cfg) == "flowba_out");
}

TEST_CASE("experiment reports are byte-identical across repeated runs") {
  const ExperimentConfig cfg = small_experiment();
  const RunReport a = run_experiment(cfg, false);
  const RunReport b = run_experiment(cfg, false);
  REQUIRE(a.rows.size() == 2);
  CHECK(a.rows[0].iteration == 0);
  CHECK(a.rows[1].iteration == 1);
  const std::string csv_a = report_csv(a);
  const std::string csv_b = report_csv(b);
  CHECK(csv_a == csv_b);
  CHECK(csv_a.rfind("iteration,cost,ate_m,mean_flow_error_px,recovered_fraction,"
                    "mask_on_fraction,omega_mean,ba_rejected\n",
                    0) == 0);
  // Wall time varies run to run; it must never leak into the CSV.
  CHECK(a.final_ate_m == b.final_ate_m);
}

TEST_CASE("a zero-noise zero-iteration run scores the inputs as ground truth") {
  ExperimentConfig cfg = small_experiment();
  cfg.iterations = 0;
  cfg.pose_noise.rotation_deg = 0.0;
  cfg.pose_noise.translation_m = 0.0;
  cfg.corruption.flow_noise_sigma = 0.0;
  cfg.corruption.fraction = 0.0;
  cfg.corruption.occlusion_injection = false;
  cfg.corruption.prior_depth_noise = 0.0;
  const RunReport report = run_experiment(cfg, false);
  CHECK(report.rows.empty());
  CHECK(report.final_ate_m < 1e-12);
  CHECK(report.final_cloud.chamfer < 1e-9);
}

TEST_CASE("experiment artifacts land in the resolved output directory") {
  ExperimentConfig cfg = small_experiment();
  cfg.iterations = 1;
  cfg.output_dir = path_in_scratch("artifacts");
  const RunReport report = run_experiment(cfg, true);
  for (const char* name : {"report.csv", "config.json", "summary.txt", "est_trajectory.txt",
                           "gt_trajectory.txt", "cloud_est.ply", "cloud_gt.ply"}) {
    CHECK_MESSAGE(fs::exists(fs::path(cfg.output_dir) / name), name);
  }
  CHECK(read_file_bytes(cfg.output_dir + "/report.csv") == report_csv(report));
  const ExperimentConfig echoed = load_config(cfg.output_dir + "/config.json");
  CHECK(echoed.frames == cfg.frames);
  CHECK(echoed.seed == cfg.seed);
  const Trajectory gt_back = read_trajectory(cfg.output_dir + "/gt_trajectory.txt");
  CHECK(gt_back.size() == size_t(cfg.frames));
}

TEST_CASE("ablation sweeps all eight switch combinations in order") {
  ExperimentConfig cfg = small_experiment();
  cfg.iterations = 1;
  const std::vector<AblationRow> rows = run_ablation(cfg);
  REQUIRE(rows.size() == 8);
  CHECK(!rows.front().bi_ba);
  CHECK(!rows.front().edge_mask);
  CHECK(!rows.front().node_mask);
  CHECK(rows.back().bi_ba);
  CHECK(rows.back().edge_mask);
  CHECK(rows.back().node_mask);
  for (int combo = 0; combo < 8; ++combo) {
    CHECK(rows[size_t(combo)].bi_ba == ((combo & 4) != 0));
    CHECK(rows[size_t(combo)].edge_mask == ((combo & 2) != 0));
    CHECK(rows[size_t(combo)].node_mask == ((combo & 1) != 0));
  }
  const std::string csv = ablation_csv(rows);
  CHECK(csv.rfind("bi_ba,edge_mask,node_mask,ate_m,accuracy_m,completeness_m,chamfer_m\n", 0) ==
        0);
  std::istringstream lines(csv);
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) ++count;
  CHECK(count == 9);
  CHECK(csv.find("\n0,0,0,") != std::string::npos);
  CHECK(csv.find("\n1,1,1,") != std::string::npos);
}
