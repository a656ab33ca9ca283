#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "hyslam/core/result.hpp"
#include "hyslam/geometry/pose.hpp"

namespace hyslam {

enum class RelativePoseError {
  kInsufficientCorrespondences,
  kNoConsensus,
  kDegenerateMotion,
};

struct BearingCorrespondence {
  Eigen::Vector3d ray_a;  // unit bearing in frame a
  Eigen::Vector3d ray_b;  // unit bearing in frame b
};

struct RansacConfig {
  int max_iterations = 500;
  double angular_threshold = 1e-3;  // rad, epipolar-plane residual
  int min_inliers = 12;
  std::uint64_t seed = 42;
};

struct RelativePose {
  // Frame-a bearings map into frame b as ray_b ~ R * ray_a (up to the
  // translation); t is the unit translation direction of camera a seen
  // from camera b (scale-free).
  Eigen::Matrix3d rotation;
  Eigen::Vector3d translation_direction;
  std::vector<bool> inliers;
  int inlier_count = 0;
  // False when the pair has (near) zero baseline: rotation is still valid
  // but the translation direction is unobservable.
  bool direction_defined = true;
};

// Robust essential-matrix estimation from bearing correspondences:
// 8-point fits inside a seeded RANSAC loop, cheirality disambiguation,
// final refit on the consensus set.
Result<RelativePose, RelativePoseError> estimateRelativePoseRansac(
    const std::vector<BearingCorrespondence>& correspondences,
    const RansacConfig& config);

}  // namespace hyslam
