// Copyright 2026 flowba authors
// SPDX-License-Identifier: Apache-2.0

#include "flowba/eval_metrics.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <limits>

#include "flowba/error.hpp"

namespace flowba {

Alignment align_points(const std::vector<Eigen::Vector3d>& est,
                       const std::vector<Eigen::Vector3d>& gt, bool with_scale) {
  if (est.size() != gt.size())
    throw Error(ErrorCode::TooFewPairs, "point sets differ in size");
  if (est.size() < 3) throw Error(ErrorCode::TooFewPairs, "alignment needs at least 3 pairs");
  Eigen::Matrix3Xd src(3, est.size()), dst(3, gt.size());
  for (size_t i = 0; i < est.size(); ++i) {
    src.col(Eigen::Index(i)) = est[i];
    dst.col(Eigen::Index(i)) = gt[i];
  }
  const Eigen::Matrix4d t = Eigen::umeyama(src, dst, with_scale);
  Alignment a;
  const Eigen::Matrix3d sr = t.topLeftCorner<3, 3>();
  a.scale = std::cbrt(sr.determinant());
  a.rotation = sr / a.scale;
  a.translation = t.topRightCorner<3, 1>();
  return a;
}

std::vector<AssociatedPair> associate(const Trajectory& est, const Trajectory& gt,
                                      double max_dt) {
  struct Candidate {
    double dt;
    size_t e, g;
  };
  std::vector<Candidate> candidates;
  for (size_t e = 0; e < est.size(); ++e)
    for (size_t g = 0; g < gt.size(); ++g) {
      const double dt = std::abs(est[e].timestamp - gt[g].timestamp);
      if (dt <= max_dt) candidates.push_back({dt, e, g});
    }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.dt != b.dt) return a.dt < b.dt;
    if (a.e != b.e) return a.e < b.e;
    return a.g < b.g;
  });
  std::vector<uint8_t> e_used(est.size(), 0), g_used(gt.size(), 0);
  std::vector<AssociatedPair> pairs;
  for (const Candidate& c : candidates) {
    if (e_used[c.e] || g_used[c.g]) continue;
    e_used[c.e] = g_used[c.g] = 1;
    pairs.push_back({c.e, c.g});
  }
  std::sort(pairs.begin(), pairs.end(),
            [](const AssociatedPair& a, const AssociatedPair& b) {
              return a.est_index < b.est_index;
            });
  return pairs;
}

double ate_rmse(const Trajectory& est, const Trajectory& gt, bool with_scale, double max_dt) {
  const std::vector<AssociatedPair> pairs = associate(est, gt, max_dt);
  if (pairs.size() < 3) throw Error(ErrorCode::TooFewPairs, "too few associated poses");
  std::vector<Eigen::Vector3d> p_est, p_gt;
  p_est.reserve(pairs.size());
  p_gt.reserve(pairs.size());
  for (const AssociatedPair& p : pairs) {
    p_est.push_back(est[p.est_index].pose.translation);
    p_gt.push_back(gt[p.gt_index].pose.translation);
  }
  const Alignment a = align_points(p_est, p_gt, with_scale);
  double sq = 0.0;
  for (size_t i = 0; i < p_est.size(); ++i) sq += (a.apply(p_est[i]) - p_gt[i]).squaredNorm();
  return std::sqrt(sq / double(p_est.size()));
}

double auc(const std::vector<double>& errors, double max_threshold, int steps) {
  if (errors.empty() || steps <= 0 || max_threshold <= 0.0) return 0.0;
  double sum = 0.0;
  for (int k = 1; k <= steps; ++k) {
    const double threshold = max_threshold * double(k) / double(steps);
    int hits = 0;
    for (double e : errors) hits += e < threshold;
    sum += double(hits) / double(errors.size());
  }
  return 100.0 * sum / double(steps);
}

KdTree3::KdTree3(std::vector<Eigen::Vector3d> points) : points_(std::move(points)) {
  if (points_.empty()) throw Error(ErrorCode::EmptyCloud, "cannot build tree on empty cloud");
  nodes_.reserve(2 * points_.size() / 16 + 8);
  root_ = build(0, int(points_.size()));
}

int KdTree3::build(int begin, int end) {
  const int id = int(nodes_.size());
  nodes_.push_back({});
  nodes_[size_t(id)].begin = begin;
  nodes_[size_t(id)].end = end;
  if (end - begin <= 16) return id;

  Eigen::Vector3d lo = points_[size_t(begin)], hi = lo;
  for (int i = begin + 1; i < end; ++i) {
    lo = lo.cwiseMin(points_[size_t(i)]);
    hi = hi.cwiseMax(points_[size_t(i)]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  const int mid = begin + (end - begin) / 2;
  std::nth_element(points_.begin() + begin, points_.begin() + mid, points_.begin() + end,
                   [axis](const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
                     return a[axis] < b[axis];
                   });
  const double split = points_[size_t(mid)][axis];
  const int left = build(begin, mid);
  const int right = build(mid, end);
  Node& n = nodes_[size_t(id)];
  n.axis = axis;
  n.split = split;
  n.left = left;
  n.right = right;
  return id;
}

void KdTree3::search(int node, const Eigen::Vector3d& query, double& best) const {
  const Node& n = nodes_[size_t(node)];
  if (n.axis < 0) {
    for (int i = n.begin; i < n.end; ++i)
      best = std::min(best, (points_[size_t(i)] - query).norm());
    return;
  }
  const double delta = query[n.axis] - n.split;
  const int near = delta < 0.0 ? n.left : n.right;
  const int far = delta < 0.0 ? n.right : n.left;
  search(near, query, best);
  if (std::abs(delta) < best) search(far, query, best);
}

double KdTree3::nearest_distance(const Eigen::Vector3d& query) const {
  double best = std::numeric_limits<double>::infinity();
  search(root_, query, best);
  return best;
}

namespace {

double mean_clipped_nn(const std::vector<Eigen::Vector3d>& from, const KdTree3& to, double clip,
                       Exec exec) {
  std::vector<double> dist(from.size(), 0.0);
  parallel_for(exec, int(from.size()), [&](int i) {
    dist[size_t(i)] = std::min(to.nearest_distance(from[size_t(i)]), clip);
  });
  double sum = 0.0;
  for (double d : dist) sum += d;
  return sum / double(from.size());
}

}  // namespace

CloudMetrics cloud_metrics(const std::vector<Eigen::Vector3d>& est,
                           const std::vector<Eigen::Vector3d>& gt, double clip, Exec exec) {
  if (est.empty() || gt.empty()) throw Error(ErrorCode::EmptyCloud, "empty cloud in metrics");
  const KdTree3 gt_tree(gt);
  const KdTree3 est_tree(est);
  CloudMetrics m;
  m.accuracy = mean_clipped_nn(est, gt_tree, clip, exec);
  m.completeness = mean_clipped_nn(gt, est_tree, clip, exec);
  m.chamfer = 0.5 * (m.accuracy + m.completeness);
  return m;
}

CloudMetrics cloud_metrics_brute(const std::vector<Eigen::Vector3d>& est,
                                 const std::vector<Eigen::Vector3d>& gt, double clip) {
  if (est.empty() || gt.empty()) throw Error(ErrorCode::EmptyCloud, "empty cloud in metrics");
  auto one_way = [clip](const std::vector<Eigen::Vector3d>& from,
                        const std::vector<Eigen::Vector3d>& to) {
    double sum = 0.0;
    for (const Eigen::Vector3d& p : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const Eigen::Vector3d& q : to) best = std::min(best, (p - q).norm());
      sum += std::min(best, clip);
    }
    return sum / double(from.size());
  };
  CloudMetrics m;
  m.accuracy = one_way(est, gt);
  m.completeness = one_way(gt, est);
  m.chamfer = 0.5 * (m.accuracy + m.completeness);
  return m;
}

}  // namespace flowba
