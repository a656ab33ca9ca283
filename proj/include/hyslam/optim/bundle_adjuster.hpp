#pragma once

#include <atomic>
#include <vector>

#include "hyslam/optim/residuals.hpp"

namespace hyslam {

enum class BundleAdjustError {
  kEmptyWindow,
};

struct BaObservation {
  int pose_index = -1;
  int point_index = -1;
  ResidualKind kind = ResidualKind::kMonoPinhole;
  Eigen::Vector3d observed = Eigen::Vector3d::Zero();
  double inv_sigma2 = 1.0;
  const Camera* camera = nullptr;
};

// A self-contained bundle adjustment problem: the caller snapshots the map
// into this structure, optimizes, and writes results back.
struct BaProblem {
  std::vector<Pose> poses;
  std::vector<bool> fixed;  // per pose; fixed poses still contribute cost
  std::vector<Eigen::Vector3d> points;
  std::vector<BaObservation> observations;
};

struct BaResult {
  int iterations = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  // Per-observation chi-square classification after convergence.
  std::vector<bool> inlier;
  // True when every accepted Levenberg-Marquardt step decreased the cost.
  bool cost_monotone = true;
  bool aborted = false;
};

// Levenberg-Marquardt over keyframe poses and point positions with the
// Schur complement taken on the point blocks. Robust Huber kernel as in
// the pose-only optimization. Honors `abort` between iterations.
Result<BaResult, BundleAdjustError> bundleAdjust(
    BaProblem& problem, const RobustConfig& config = {},
    const std::atomic<bool>* abort = nullptr);

}  // namespace hyslam
