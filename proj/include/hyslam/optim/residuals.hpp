#pragma once

#include <cmath>

#include <Eigen/Core>

#include "hyslam/camera/camera.hpp"
#include "hyslam/geometry/pose.hpp"

namespace hyslam {

// Which reprojection function backs a residual. Mono residuals are
// 2-dimensional, stereo residuals 3-dimensional (u_l, v, u_r).
enum class ResidualKind { kMonoPinhole, kStereo, kFisheye };

inline int residualDim(ResidualKind kind) {
  return kind == ResidualKind::kStereo ? 3 : 2;
}

struct RobustConfig {
  // Huber deltas at the 95% chi-square bound for 2 and 3 DoF.
  double huber_delta_mono = std::sqrt(5.991);
  double huber_delta_stereo = std::sqrt(7.815);
  double chi2_mono = 5.991;
  double chi2_stereo = 7.815;
  int max_iterations = 50;
  int pose_rounds = 4;
  int pose_iterations_per_round = 10;
  double relative_cost_tolerance = 1e-8;
  double lm_initial_lambda = 1e-4;
};

// Keypoint-scale-derived measurement noise: sigma = 1.2^level pixels,
// information weight 1/sigma^2.
inline double invSigma2ForLevel(int level) {
  const double sigma = std::pow(1.2, level);
  return 1.0 / (sigma * sigma);
}

// Residual r = observed - projected and its Jacobians with respect to a
// left-multiplicative pose increment and to the world point. Rows beyond
// the residual dimension are left zero. Returns false when the point does
// not project (behind camera / outside fisheye FOV).
bool evaluateReprojection(const Camera& camera, ResidualKind kind,
                          const Pose& pose, const Eigen::Vector3d& world_point,
                          const Eigen::Vector3d& observed,
                          Eigen::Vector3d* residual,
                          Eigen::Matrix<double, 3, 6>* jac_pose = nullptr,
                          Eigen::Matrix3d* jac_point = nullptr);

// Huber cost of a squared, information-weighted error.
inline double robustCost(double chi2, double delta) {
  if (chi2 <= delta * delta) return chi2;
  return 2.0 * delta * std::sqrt(chi2) - delta * delta;
}

// IRLS weight multiplier for the same kernel.
inline double robustWeight(double chi2, double delta) {
  if (chi2 <= delta * delta) return 1.0;
  return delta / std::sqrt(chi2);
}

inline double huberDelta(const RobustConfig& config, ResidualKind kind) {
  return kind == ResidualKind::kStereo ? config.huber_delta_stereo
                                       : config.huber_delta_mono;
}

inline double chi2Gate(const RobustConfig& config, ResidualKind kind) {
  return kind == ResidualKind::kStereo ? config.chi2_stereo : config.chi2_mono;
}

}  // namespace hyslam
