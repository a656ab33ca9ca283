#include "hyslam/geometry/horn.hpp"

#include <Eigen/Dense>

namespace hyslam {

Result<HornAlignment, AlignmentError> hornAlignPoints(
    const std::vector<Eigen::Vector3d>& estimate,
    const std::vector<Eigen::Vector3d>& reference) {
  const std::size_t n = estimate.size();
  if (n < 3 || reference.size() != n)
    return AlignmentError::kTooFewAssociations;

  Eigen::Vector3d mean_e = Eigen::Vector3d::Zero();
  Eigen::Vector3d mean_r = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    mean_e += estimate[i];
    mean_r += reference[i];
  }
  mean_e /= static_cast<double>(n);
  mean_r /= static_cast<double>(n);

  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < n; ++i)
    cov += (reference[i] - mean_r) * (estimate[i] - mean_e).transpose();

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0)
    d(2, 2) = -1.0;
  const Eigen::Matrix3d rotation = svd.matrixU() * d * svd.matrixV().transpose();
  const Eigen::Vector3d translation = mean_r - rotation * mean_e;

  HornAlignment out;
  out.transform = Pose(rotation, translation);
  out.pair_count = n;
  out.residuals.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    out.residuals.push_back(
        (rotation * estimate[i] + translation - reference[i]).norm());
  return out;
}

Result<HornAlignment, AlignmentError> hornAlign(const Trajectory& estimate,
                                                const Trajectory& reference,
                                                double association_tolerance) {
  const auto pairs =
      associateByTimestamp(estimate, reference, association_tolerance);
  std::vector<Eigen::Vector3d> pe, pr;
  pe.reserve(pairs.size());
  pr.reserve(pairs.size());
  for (const auto& [i, j] : pairs) {
    pe.push_back(estimate.poses[i].pose.translation());
    pr.push_back(reference.poses[j].pose.translation());
  }
  return hornAlignPoints(pe, pr);
}

}  // namespace hyslam
