#pragma once

#include <vector>

#include "hyslam/core/result.hpp"
#include "hyslam/geometry/trajectory.hpp"

namespace hyslam {

enum class AlignmentError {
  kTooFewAssociations,
};

struct HornAlignment {
  // Rigid transform mapping estimate positions onto the reference frame:
  // p_ref = R * p_est + t. Scale is fixed at 1.
  Pose transform;
  // Position residual norm per associated pair, meters.
  std::vector<double> residuals;
  std::size_t pair_count = 0;
};

// Closed-form least-squares rigid alignment (no scale) of the estimate
// trajectory onto the reference, after nearest-timestamp association.
Result<HornAlignment, AlignmentError> hornAlign(
    const Trajectory& estimate, const Trajectory& reference,
    double association_tolerance = 0.01);

// Alignment of explicit point correspondences (p_ref = R * p_est + t).
Result<HornAlignment, AlignmentError> hornAlignPoints(
    const std::vector<Eigen::Vector3d>& estimate,
    const std::vector<Eigen::Vector3d>& reference);

}  // namespace hyslam
