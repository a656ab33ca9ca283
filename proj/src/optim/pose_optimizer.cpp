#include "hyslam/optim/pose_optimizer.hpp"

#include <Eigen/Dense>

namespace hyslam {
namespace {

double poseCost(const Pose& pose, const Camera& camera,
                const std::vector<PoseObservation>& observations,
                const std::vector<bool>& active, const RobustConfig& config) {
  double cost = 0.0;
  Eigen::Vector3d r;
  for (std::size_t i = 0; i < observations.size(); ++i) {
    if (!active[i]) continue;
    const auto& obs = observations[i];
    if (!evaluateReprojection(camera, obs.kind, pose, obs.world_point,
                              obs.observed, &r)) {
      cost += 2.0 * chi2Gate(config, obs.kind);  // failed projection
      continue;
    }
    const double chi2 =
        r.head(residualDim(obs.kind)).squaredNorm() * obs.inv_sigma2;
    cost += robustCost(chi2, huberDelta(config, obs.kind));
  }
  return cost;
}

}  // namespace

Result<PoseOptimizeResult, PoseOptimizeError> optimizePoseOnly(
    const Pose& initial, const Camera& camera,
    const std::vector<PoseObservation>& observations,
    const RobustConfig& config) {
  const std::size_t n = observations.size();
  if (n < 3) return PoseOptimizeError::kTooFewResiduals;

  Pose pose = initial;
  std::vector<bool> active(n, true);

  for (int round = 0; round < config.pose_rounds; ++round) {
    double lambda = config.lm_initial_lambda;
    double cost = poseCost(pose, camera, observations, active, config);
    for (int iter = 0; iter < config.pose_iterations_per_round; ++iter) {
      Eigen::Matrix<double, 6, 6> h = Eigen::Matrix<double, 6, 6>::Zero();
      Eigen::Matrix<double, 6, 1> g = Eigen::Matrix<double, 6, 1>::Zero();
      Eigen::Vector3d r;
      Eigen::Matrix<double, 3, 6> jp;
      for (std::size_t i = 0; i < n; ++i) {
        if (!active[i]) continue;
        const auto& obs = observations[i];
        if (!evaluateReprojection(camera, obs.kind, pose, obs.world_point,
                                  obs.observed, &r, &jp))
          continue;
        const int dim = residualDim(obs.kind);
        const double chi2 = r.head(dim).squaredNorm() * obs.inv_sigma2;
        const double w =
            obs.inv_sigma2 *
            robustWeight(chi2, huberDelta(config, obs.kind));
        const auto jr = jp.topRows(dim);
        h.noalias() += w * jr.transpose() * jr;
        g.noalias() -= w * jr.transpose() * r.head(dim);
      }
      // Damped solve; increase lambda until the step reduces the cost.
      bool accepted = false;
      for (int attempt = 0; attempt < 8; ++attempt) {
        Eigen::Matrix<double, 6, 6> damped = h;
        damped.diagonal() += lambda * h.diagonal();
        const Eigen::Matrix<double, 6, 1> delta = damped.ldlt().solve(g);
        if (!delta.allFinite()) break;
        const Pose candidate = pose.retract(delta);
        const double new_cost =
            poseCost(candidate, camera, observations, active, config);
        if (new_cost <= cost) {
          pose = candidate;
          const bool converged =
              cost - new_cost < config.relative_cost_tolerance * cost;
          cost = new_cost;
          lambda = std::max(lambda * 0.1, 1e-12);
          accepted = true;
          if (converged) iter = config.pose_iterations_per_round;
          break;
        }
        lambda *= 10.0;
      }
      if (!accepted) break;
    }
    // Re-classify for the next round.
    Eigen::Vector3d r;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& obs = observations[i];
      if (!evaluateReprojection(camera, obs.kind, pose, obs.world_point,
                                obs.observed, &r)) {
        active[i] = false;
        continue;
      }
      const double chi2 =
          r.head(residualDim(obs.kind)).squaredNorm() * obs.inv_sigma2;
      active[i] = chi2 <= chi2Gate(config, obs.kind);
    }
  }

  PoseOptimizeResult out;
  out.pose = pose;
  out.inliers = active;
  out.inlier_count =
      static_cast<int>(std::count(active.begin(), active.end(), true));
  out.final_cost = poseCost(pose, camera, observations, active, config);
  if (!out.pose.translation().allFinite())
    return PoseOptimizeError::kDiverged;
  return out;
}

}  // namespace hyslam
