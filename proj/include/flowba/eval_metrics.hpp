// Copyright 2026 flowba authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FLOWBA_EVAL_METRICS_HPP
#define FLOWBA_EVAL_METRICS_HPP

#include <Eigen/Core>
#include <cstddef>
#include <vector>

#include "flowba/parallel.hpp"
#include "flowba/trajectory.hpp"

namespace flowba {

// Similarity transform mapping estimated positions onto reference positions:
// p' = scale * rotation * p + translation.
struct Alignment {
  double scale = 1.0;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const {
    return scale * (rotation * p) + translation;
  }
};

// Least-squares similarity (or rigid, when with_scale is false) alignment.
// Throws Error(TooFewPairs) below 3 point pairs.
Alignment align_points(const std::vector<Eigen::Vector3d>& est,
                       const std::vector<Eigen::Vector3d>& gt, bool with_scale);

// Nearest-timestamp association; pairs farther apart than max_dt seconds are
// discarded and every pose is used at most once.
struct AssociatedPair {
  size_t est_index = 0;
  size_t gt_index = 0;
};
std::vector<AssociatedPair> associate(const Trajectory& est, const Trajectory& gt,
                                      double max_dt = 0.02);

// Absolute trajectory error: associate, align translations (similarity by
// default, the right gauge for monocular estimates), root-mean-square of the
// residual distances. Throws Error(TooFewPairs) below 3 associations.
double ate_rmse(const Trajectory& est, const Trajectory& gt, bool with_scale = true,
                double max_dt = 0.02);

// Area under the success-rate curve over `steps` evenly spaced thresholds in
// (0, max_threshold]; success at a threshold means error strictly below it.
// Returned as a percentage in [0, 100].
double auc(const std::vector<double>& errors, double max_threshold = 0.5, int steps = 128);

// Exact nearest-neighbor queries over a static point set.
class KdTree3 {
 public:
  explicit KdTree3(std::vector<Eigen::Vector3d> points);  // throws Error(EmptyCloud)
  double nearest_distance(const Eigen::Vector3d& query) const;

 private:
  struct Node {
    int axis = -1;       // -1 marks a leaf
    double split = 0.0;
    int left = -1;
    int right = -1;
    int begin = 0;
    int end = 0;
  };
  int build(int begin, int end);
  void search(int node, const Eigen::Vector3d& query, double& best) const;

  std::vector<Eigen::Vector3d> points_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

// Point-cloud agreement with per-point distances clipped at `clip` meters:
// accuracy is est->gt, completeness gt->est, chamfer their mean.
struct CloudMetrics {
  double accuracy = 0.0;
  double completeness = 0.0;
  double chamfer = 0.0;
};
CloudMetrics cloud_metrics(const std::vector<Eigen::Vector3d>& est,
                           const std::vector<Eigen::Vector3d>& gt, double clip = 0.5,
                           Exec exec = Exec::Parallel);

// Quadratic-time reference used to validate the tree-based route.
CloudMetrics cloud_metrics_brute(const std::vector<Eigen::Vector3d>& est,
                                 const std::vector<Eigen::Vector3d>& gt, double clip = 0.5);

}  // namespace flowba

#endif  // FLOWBA_EVAL_METRICS_HPP
