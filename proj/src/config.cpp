// Copyright 2026 flowba authors
// SPDX-License-Identifier: Apache-2.0

#include "flowba/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>

#include "flowba/error.hpp"

namespace flowba {

using nlohmann::json;

json config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["scene"] = cfg.scene;
  j["trajectory"] = cfg.trajectory;
  j["frames"] = cfg.frames;
  j["seed"] = cfg.seed;
  j["iterations"] = cfg.iterations;
  j["feature_noise_sigma"] = cfg.feature_noise_sigma;
  j["parallel"] = cfg.parallel;
  j["output_dir"] = cfg.output_dir;
  j["corruption"] = {{"flow_noise_sigma", cfg.corruption.flow_noise_sigma},
                     {"fraction", cfg.corruption.fraction},
                     {"patch_size", cfg.corruption.patch_size},
                     {"min_offset_px", cfg.corruption.min_offset_px},
                     {"max_offset_px", cfg.corruption.max_offset_px},
                     {"occlusion_injection", cfg.corruption.occlusion_injection},
                     {"prior_depth_noise", cfg.corruption.prior_depth_noise}};
  j["pose_noise"] = {{"rotation_deg", cfg.pose_noise.rotation_deg},
                     {"translation_m", cfg.pose_noise.translation_m}};
  j["ba"] = {{"inner_steps", cfg.ba.inner_ba_steps}, {"lambda0", cfg.ba.lambda0},
             {"huber_delta", cfg.ba.huber_delta},    {"tau", cfg.ba.tau},
             {"gauge_weight", cfg.ba.gauge_weight},  {"depth_min", cfg.ba.depth_min},
             {"depth_max", cfg.ba.depth_max}};
  j["reliability"] = {{"tau_edge", cfg.reliability.tau_edge},
                      {"tau_node", cfg.reliability.tau_node}};
  j["frontend"] = {{"radius", cfg.frontend.radius},
                   {"step_cap", cfg.frontend.step_cap},
                   {"blend", cfg.frontend.blend},
                   {"score_scale", cfg.frontend.score_scale}};
  j["graph"] = {{"admit_threshold", cfg.graph.admit_threshold},
                {"online_k", cfg.graph.online_k},
                {"batch_radius", cfg.graph.batch_radius}};
  j["ablation"] = {{"bi_ba", cfg.enable_bi_ba},
                   {"edge_mask", cfg.enable_edge_mask},
                   {"node_mask", cfg.enable_node_mask}};
  return j;
}

namespace {

void reject_unknown_keys(const json& input, const json& reference, const std::string& path) {
  if (!input.is_object()) return;
  for (const auto& [key, value] : input.items()) {
    const std::string where = path.empty() ? key : path + "." + key;
    if (!reference.is_object() || !reference.contains(key))
      throw Error(ErrorCode::ConfigError, "unknown config key: " + where);
    reject_unknown_keys(value, reference.at(key), where);
  }
}

template <typename T>
void take(const json& j, const char* key, T& out) {
  if (j.contains(key)) {
    try {
      j.at(key).get_to(out);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ConfigError, std::string("bad value for ") + key + ": " + e.what());
    }
  }
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig cfg;
  reject_unknown_keys(j, config_to_json(cfg), "");
  take(j, "scene", cfg.scene);
  take(j, "trajectory", cfg.trajectory);
  take(j, "frames", cfg.frames);
  take(j, "seed", cfg.seed);
  take(j, "iterations", cfg.iterations);
  take(j, "feature_noise_sigma", cfg.feature_noise_sigma);
  take(j, "parallel", cfg.parallel);
  take(j, "output_dir", cfg.output_dir);
  if (j.contains("corruption")) {
    const json& c = j.at("corruption");
    take(c, "flow_noise_sigma", cfg.corruption.flow_noise_sigma);
    take(c, "fraction", cfg.corruption.fraction);
    take(c, "patch_size", cfg.corruption.patch_size);
    take(c, "min_offset_px", cfg.corruption.min_offset_px);
    take(c, "max_offset_px", cfg.corruption.max_offset_px);
    take(c, "occlusion_injection", cfg.corruption.occlusion_injection);
    take(c, "prior_depth_noise", cfg.corruption.prior_depth_noise);
  }
  if (j.contains("pose_noise")) {
    const json& p = j.at("pose_noise");
    take(p, "rotation_deg", cfg.pose_noise.rotation_deg);
    take(p, "translation_m", cfg.pose_noise.translation_m);
  }
  if (j.contains("ba")) {
    const json& b = j.at("ba");
    take(b, "inner_steps", cfg.ba.inner_ba_steps);
    take(b, "lambda0", cfg.ba.lambda0);
    take(b, "huber_delta", cfg.ba.huber_delta);
    take(b, "tau", cfg.ba.tau);
    take(b, "gauge_weight", cfg.ba.gauge_weight);
    take(b, "depth_min", cfg.ba.depth_min);
    take(b, "depth_max", cfg.ba.depth_max);
  }
  if (j.contains("reliability")) {
    const json& r = j.at("reliability");
    take(r, "tau_edge", cfg.reliability.tau_edge);
    take(r, "tau_node", cfg.reliability.tau_node);
  }
  if (j.contains("frontend")) {
    const json& f = j.at("frontend");
    take(f, "radius", cfg.frontend.radius);
    take(f, "step_cap", cfg.frontend.step_cap);
    take(f, "blend", cfg.frontend.blend);
    take(f, "score_scale", cfg.frontend.score_scale);
  }
  if (j.contains("graph")) {
    const json& g = j.at("graph");
    take(g, "admit_threshold", cfg.graph.admit_threshold);
    take(g, "online_k", cfg.graph.online_k);
    take(g, "batch_radius", cfg.graph.batch_radius);
  }
  if (j.contains("ablation")) {
    const json& a = j.at("ablation");
    take(a, "bi_ba", cfg.enable_bi_ba);
    take(a, "edge_mask", cfg.enable_edge_mask);
    take(a, "node_mask", cfg.enable_node_mask);
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
  return config_from_json(j);
}

void apply_override(ExperimentConfig& cfg, const std::string& assignment) {
  const size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw Error(ErrorCode::ConfigError, "override must look like key.path=value: " + assignment);
  const std::string key_path = assignment.substr(0, eq);
  const std::string value_text = assignment.substr(eq + 1);

  json j = config_to_json(cfg);
  json* cursor = &j;
  size_t begin = 0;
  std::vector<std::string> parts;
  while (true) {
    const size_t dot = key_path.find('.', begin);
    parts.push_back(key_path.substr(begin, dot == std::string::npos ? dot : dot - begin));
    if (dot == std::string::npos) break;
    begin = dot + 1;
  }
  for (size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!cursor->is_object() || !cursor->contains(parts[i]))
      throw Error(ErrorCode::ConfigError, "unknown config key: " + key_path);
    cursor = &cursor->at(parts[i]);
  }
  if (!cursor->is_object() || !cursor->contains(parts.back()))
    throw Error(ErrorCode::ConfigError, "unknown config key: " + key_path);

  json parsed;
  try {
    parsed = json::parse(value_text);
  } catch (const json::exception&) {
    parsed = value_text;  // unquoted strings (preset names, paths)
  }
  (*cursor)[parts.back()] = parsed;
  cfg = config_from_json(j);
}

void validate_config(const ExperimentConfig& cfg) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw Error(ErrorCode::ConfigError, what);
  };
  const auto scenes = scene_preset_names();
  const auto trajectories = trajectory_preset_names();
  require(std::find(scenes.begin(), scenes.end(), cfg.scene) != scenes.end(),
          "unknown scene preset: " + cfg.scene);
  require(std::find(trajectories.begin(), trajectories.end(), cfg.trajectory) !=
              trajectories.end(),
          "unknown trajectory preset: " + cfg.trajectory);
  require(cfg.frames >= 1, "frames must be >= 1");
  require(cfg.iterations >= 0, "iterations must be >= 0");
  require(cfg.feature_noise_sigma >= 0.0, "feature_noise_sigma must be >= 0");
  require(cfg.corruption.flow_noise_sigma >= 0.0, "corruption.flow_noise_sigma must be >= 0");
  require(cfg.corruption.fraction >= 0.0 && cfg.corruption.fraction <= 1.0,
          "corruption.fraction must be in [0, 1]");
  require(cfg.corruption.patch_size >= 1, "corruption.patch_size must be >= 1");
  require(cfg.corruption.min_offset_px >= 0.0 &&
              cfg.corruption.min_offset_px <= cfg.corruption.max_offset_px,
          "corruption offsets must satisfy 0 <= min <= max");
  require(cfg.corruption.prior_depth_noise >= 0.0 && cfg.corruption.prior_depth_noise < 1.0,
          "corruption.prior_depth_noise must be in [0, 1)");
  require(cfg.pose_noise.rotation_deg >= 0.0, "pose_noise.rotation_deg must be >= 0");
  require(cfg.pose_noise.translation_m >= 0.0, "pose_noise.translation_m must be >= 0");
  require(cfg.ba.inner_ba_steps >= 1, "ba.inner_steps must be >= 1");
  require(cfg.ba.lambda0 > 0.0, "ba.lambda0 must be > 0");
  require(cfg.ba.huber_delta > 0.0, "ba.huber_delta must be > 0");
  require(cfg.ba.tau > 0.0, "ba.tau must be > 0");
  require(cfg.ba.gauge_weight >= 0.0, "ba.gauge_weight must be >= 0");
  require(cfg.ba.depth_min > 0.0 && cfg.ba.depth_min < cfg.ba.depth_max,
          "ba depth bounds must satisfy 0 < depth_min < depth_max");
  require(cfg.reliability.tau_edge > 0.0, "reliability.tau_edge must be > 0");
  require(cfg.reliability.tau_node > 0.0, "reliability.tau_node must be > 0");
  require(cfg.frontend.radius >= 1, "frontend.radius must be >= 1");
  require(cfg.frontend.step_cap > 0.0, "frontend.step_cap must be > 0");
  require(cfg.frontend.blend >= 0.0 && cfg.frontend.blend <= 1.0,
          "frontend.blend must be in [0, 1]");
  require(cfg.frontend.score_scale > 0.0, "frontend.score_scale must be > 0");
  require(cfg.graph.admit_threshold > 0.0, "graph.admit_threshold must be > 0");
  require(cfg.graph.online_k >= 1, "graph.online_k must be >= 1");
  require(cfg.graph.batch_radius >= 1, "graph.batch_radius must be >= 1");
}

std::string resolve_output_dir(const ExperimentConfig& cfg) {
  if (!cfg.output_dir.empty()) return cfg.output_dir;
  if (const char* env = std::getenv("FLOWBA_OUTPUT_DIR"); env && *env) return env;
  return "flowba_out";
}

}  // namespace flowba
