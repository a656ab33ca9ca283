#pragma once

#include <cstdint>
#include <vector>

#include "hyslam/core/result.hpp"
#include "hyslam/geometry/pose.hpp"

namespace hyslam {

// One bearing-vector observation of a known world point: camera-model
// agnostic, so stereo and fisheye frames share the solver.
struct PnPCorrespondence {
  Eigen::Vector3d bearing = Eigen::Vector3d::UnitZ();  // unit, camera frame
  Eigen::Vector3d point = Eigen::Vector3d::Zero();     // world frame
};

enum class PnPError {
  kInsufficientCorrespondences,
  kNoConsensus,
  kDegenerate,
};

// Maximum-likelihood PnP: residuals are the projections of the rotated
// points onto the null space (tangent plane) of each observed bearing.
// Closed-form linear initialization from the stacked null-space
// constraints, then Gauss-Newton refinement. Needs >= 6 points.
Result<Pose, PnPError> solveMlpnp(
    const std::vector<PnPCorrespondence>& correspondences,
    int gn_iterations = 10);

struct PnPRansacConfig {
  int max_iterations = 100;
  double angular_threshold = 0.01;  // rad between bearing and prediction
  int min_inliers = 12;
  std::uint32_t seed = 42;
};

struct PnPRansacResult {
  Pose pose;  // world -> camera
  std::vector<bool> inliers;
  int inlier_count = 0;
};

Result<PnPRansacResult, PnPError> solveMlpnpRansac(
    const std::vector<PnPCorrespondence>& correspondences,
    const PnPRansacConfig& config = {});

}  // namespace hyslam
