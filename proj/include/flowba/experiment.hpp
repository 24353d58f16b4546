// Copyright 2026 flowba authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FLOWBA_EXPERIMENT_HPP
#define FLOWBA_EXPERIMENT_HPP

#include <string>
#include <vector>

#include "flowba/config.hpp"
#include "flowba/eval_metrics.hpp"

namespace flowba {

// One row of the per-iteration trace written to report.csv.
struct IterationRow {
  int iteration = 0;
  double cost = 0.0;                  // robust combined cost after the BA steps
  double ate_m = 0.0;                 // similarity-aligned trajectory RMSE, meters
  double mean_flow_error_px = 0.0;    // vs ground-truth flow over valid pixels
  double recovered_fraction = 0.0;    // corrupted pixels back within 1 px of truth
  double mask_on_fraction = 0.0;
  double omega_mean = 0.0;
  int ba_rejected = 0;
};

struct RunReport {
  ExperimentConfig config;
  std::vector<IterationRow> rows;
  double final_ate_m = 0.0;
  CloudMetrics final_cloud;
  double wall_seconds = 0.0;  // never serialized into CSV
};

// Full pipeline: build the scene, corrupt inputs, iterate the closed loop,
// score against ground truth. When write_artifacts is set, writes report.csv,
// summary.txt, config echo, trajectories, and aligned clouds under
// resolve_output_dir(config).
RunReport run_experiment(const ExperimentConfig& config, bool write_artifacts = true);

// CSV serializations; byte-stable for identical reports.
std::string report_csv(const RunReport& report);

struct AblationRow {
  bool bi_ba = false;
  bool edge_mask = false;
  bool node_mask = false;
  double ate_m = 0.0;
  CloudMetrics cloud;
};

// Runs all 8 on/off combinations of the three switches on the same inputs.
std::vector<AblationRow> run_ablation(const ExperimentConfig& base);
std::string ablation_csv(const std::vector<AblationRow>& rows);

}  // namespace flowba

#endif  // FLOWBA_EXPERIMENT_HPP
