#pragma once

#include <vector>

#include "hyslam/optim/residuals.hpp"

namespace hyslam {

enum class PoseOptimizeError {
  kTooFewResiduals,
  kDiverged,
};

struct PoseObservation {
  ResidualKind kind = ResidualKind::kMonoPinhole;
  Eigen::Vector3d observed = Eigen::Vector3d::Zero();  // third row unused for 2d
  Eigen::Vector3d world_point = Eigen::Vector3d::Zero();
  double inv_sigma2 = 1.0;
};

struct PoseOptimizeResult {
  Pose pose;
  std::vector<bool> inliers;
  int inlier_count = 0;
  double final_cost = 0.0;
};

// Minimizes the robust reprojection cost over a single frame pose with the
// map points held fixed. Runs `pose_rounds` rounds of damped Gauss-Newton;
// between rounds every observation is re-classified inlier/outlier by the
// chi-square gate, and outliers sit out the next round (they may return).
Result<PoseOptimizeResult, PoseOptimizeError> optimizePoseOnly(
    const Pose& initial, const Camera& camera,
    const std::vector<PoseObservation>& observations,
    const RobustConfig& config = {});

}  // namespace hyslam
