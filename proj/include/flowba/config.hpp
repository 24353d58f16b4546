// Copyright 2026 flowba authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FLOWBA_CONFIG_HPP
#define FLOWBA_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "flowba/keyframe_graph.hpp"
#include "flowba/synth_world.hpp"

namespace flowba {

// Knobs for the synthetic degradation applied to ground-truth inputs.
struct CorruptionConfig {
  double flow_noise_sigma = 0.02;   // px, applied everywhere
  double fraction = 0.10;           // target fraction of pixels inside gross patches
  int patch_size = 4;               // px, square patches
  double min_offset_px = 8.0;       // gross patch offset magnitude range
  double max_offset_px = 15.0;
  bool occlusion_injection = true;  // corrupt occluded pixels too
  double prior_depth_noise = 0.05;  // multiplicative depth-prior noise fraction
};

struct PoseNoiseConfig {
  double rotation_deg = 2.0;
  double translation_m = 0.02;
};

struct ExperimentConfig {
  std::string scene = "plane_sphere";
  std::string trajectory = "lateral_arc";
  int frames = 6;
  std::uint64_t seed = 7;
  int iterations = 8;
  double feature_noise_sigma = 0.0;
  bool parallel = true;
  std::string output_dir;  // empty resolves via FLOWBA_OUTPUT_DIR, then "flowba_out"

  CorruptionConfig corruption;
  PoseNoiseConfig pose_noise;
  BAConfig ba;
  ReliabilityConfig reliability;
  FrontendConfig frontend;
  GraphConfig graph;

  bool enable_bi_ba = true;  // geometry-consistency term in the solver
  bool enable_edge_mask = true;
  bool enable_node_mask = true;
};

// Serialization schema: nested JSON objects mirroring the struct layout.
// Unknown keys are rejected with Error(ConfigError) naming the key path.
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const nlohmann::json& j);

// Reads a JSON config file; missing keys keep their defaults.
ExperimentConfig load_config(const std::string& path);

// Applies one "dotted.key=value" override on top of a config. The key must
// exist in the schema; the value is parsed as JSON, falling back to a plain
// string.
void apply_override(ExperimentConfig& cfg, const std::string& assignment);

// Range and existence checks; throws Error(ConfigError).
void validate_config(const ExperimentConfig& cfg);

std::string resolve_output_dir(const ExperimentConfig& cfg);

}  // namespace flowba

#endif  // FLOWBA_CONFIG_HPP
