#include "hyslam/optim/bundle_adjuster.hpp"

#include <algorithm>

#include <Eigen/Dense>

namespace hyslam {
namespace {

double totalCost(const std::vector<Pose>& poses,
                 const std::vector<Eigen::Vector3d>& points,
                 const std::vector<BaObservation>& observations,
                 const RobustConfig& config) {
  double cost = 0.0;
  Eigen::Vector3d r;
  for (const auto& obs : observations) {
    if (!evaluateReprojection(*obs.camera, obs.kind, poses[obs.pose_index],
                              points[obs.point_index], obs.observed, &r)) {
      cost += 2.0 * chi2Gate(config, obs.kind);
      continue;
    }
    const double chi2 =
        r.head(residualDim(obs.kind)).squaredNorm() * obs.inv_sigma2;
    cost += robustCost(chi2, huberDelta(config, obs.kind));
  }
  return cost;
}

}  // namespace

Result<BaResult, BundleAdjustError> bundleAdjust(
    BaProblem& problem, const RobustConfig& config,
    const std::atomic<bool>* abort) {
  const int num_poses = static_cast<int>(problem.poses.size());
  const int num_points = static_cast<int>(problem.points.size());
  if (num_poses == 0) return BundleAdjustError::kEmptyWindow;

  // Map optimizable poses to contiguous variable slots.
  std::vector<int> var_of_pose(num_poses, -1);
  int num_vars = 0;
  for (int i = 0; i < num_poses; ++i)
    if (!problem.fixed[i]) var_of_pose[i] = num_vars++;

  BaResult result;
  result.initial_cost =
      totalCost(problem.poses, problem.points, problem.observations, config);
  double cost = result.initial_cost;
  double lambda = config.lm_initial_lambda;

  for (int iter = 0; iter < config.max_iterations; ++iter) {
    if (abort && abort->load()) {
      result.aborted = true;
      break;
    }

    // Accumulate the normal equations. U: pose blocks, V: point blocks,
    // W: pose-point coupling stored per point.
    std::vector<Eigen::Matrix<double, 6, 6>> u(
        num_vars, Eigen::Matrix<double, 6, 6>::Zero());
    std::vector<Eigen::Matrix<double, 6, 1>> b_pose(
        num_vars, Eigen::Matrix<double, 6, 1>::Zero());
    std::vector<Eigen::Matrix3d> v(num_points, Eigen::Matrix3d::Zero());
    std::vector<Eigen::Vector3d> b_point(num_points, Eigen::Vector3d::Zero());
    // For each point: list of (pose var, 6x3 block).
    std::vector<std::vector<std::pair<int, Eigen::Matrix<double, 6, 3>>>> w(
        num_points);

    Eigen::Vector3d r;
    Eigen::Matrix<double, 3, 6> jp;
    Eigen::Matrix3d jx;
    for (const auto& obs : problem.observations) {
      if (!evaluateReprojection(*obs.camera, obs.kind,
                                problem.poses[obs.pose_index],
                                problem.points[obs.point_index], obs.observed,
                                &r, &jp, &jx))
        continue;
      const int dim = residualDim(obs.kind);
      const double chi2 = r.head(dim).squaredNorm() * obs.inv_sigma2;
      const double weight =
          obs.inv_sigma2 * robustWeight(chi2, huberDelta(config, obs.kind));
      const auto jr_pose = jp.topRows(dim);
      const auto jr_point = jx.topRows(dim);
      const int pv = var_of_pose[obs.pose_index];
      const int pt = obs.point_index;

      v[pt].noalias() += weight * jr_point.transpose() * jr_point;
      b_point[pt].noalias() -= weight * jr_point.transpose() * r.head(dim);
      if (pv >= 0) {
        u[pv].noalias() += weight * jr_pose.transpose() * jr_pose;
        b_pose[pv].noalias() -= weight * jr_pose.transpose() * r.head(dim);
        // Coalesce repeated (point, pose) pairs.
        auto& list = w[pt];
        bool merged = false;
        for (auto& [var, block] : list) {
          if (var == pv) {
            block.noalias() += weight * jr_pose.transpose() * jr_point;
            merged = true;
            break;
          }
        }
        if (!merged) {
          Eigen::Matrix<double, 6, 3> block =
              weight * jr_pose.transpose() * jr_point;
          list.emplace_back(pv, block);
        }
      }
    }

    bool accepted = false;
    for (int attempt = 0; attempt < 6; ++attempt) {
      // Damp and invert the point blocks.
      std::vector<Eigen::Matrix3d> v_inv(num_points);
      std::vector<bool> point_ok(num_points, true);
      for (int p = 0; p < num_points; ++p) {
        Eigen::Matrix3d damped = v[p];
        damped.diagonal() += lambda * v[p].diagonal();
        damped.diagonal().array() += 1e-12;
        const Eigen::Matrix3d inv = damped.inverse();
        if (!inv.allFinite()) {
          point_ok[p] = false;
          v_inv[p] = Eigen::Matrix3d::Zero();
        } else {
          v_inv[p] = inv;
        }
      }

      // Schur complement on the pose system.
      Eigen::MatrixXd s = Eigen::MatrixXd::Zero(6 * num_vars, 6 * num_vars);
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(6 * num_vars);
      for (int pv = 0; pv < num_vars; ++pv) {
        Eigen::Matrix<double, 6, 6> damped = u[pv];
        damped.diagonal() += lambda * u[pv].diagonal();
        s.block<6, 6>(6 * pv, 6 * pv) = damped;
        rhs.segment<6>(6 * pv) = b_pose[pv];
      }
      for (int p = 0; p < num_points; ++p) {
        if (!point_ok[p]) continue;
        const auto& list = w[p];
        for (const auto& [vi, wi] : list) {
          const Eigen::Matrix<double, 6, 3> wv = wi * v_inv[p];
          rhs.segment<6>(6 * vi).noalias() -= wv * b_point[p];
          for (const auto& [vj, wj] : list) {
            s.block<6, 6>(6 * vi, 6 * vj).noalias() -= wv * wj.transpose();
          }
        }
      }

      Eigen::VectorXd delta_pose;
      if (num_vars > 0) {
        delta_pose = s.ldlt().solve(rhs);
        if (!delta_pose.allFinite()) {
          lambda *= 10.0;
          continue;
        }
      }

      // Back-substitute the point updates and apply the candidate step.
      std::vector<Pose> new_poses = problem.poses;
      std::vector<Eigen::Vector3d> new_points = problem.points;
      for (int i = 0; i < num_poses; ++i) {
        const int pv = var_of_pose[i];
        if (pv >= 0)
          new_poses[i] = problem.poses[i].retract(delta_pose.segment<6>(6 * pv));
      }
      for (int p = 0; p < num_points; ++p) {
        if (!point_ok[p]) continue;
        Eigen::Vector3d acc = b_point[p];
        for (const auto& [vi, wi] : w[p])
          acc.noalias() -= wi.transpose() * delta_pose.segment<6>(6 * vi);
        new_points[p] += v_inv[p] * acc;
      }

      const double new_cost =
          totalCost(new_poses, new_points, problem.observations, config);
      if (new_cost <= cost) {
        problem.poses = std::move(new_poses);
        problem.points = std::move(new_points);
        const bool converged =
            cost - new_cost < config.relative_cost_tolerance * cost;
        cost = new_cost;
        lambda = std::max(lambda * 0.1, 1e-12);
        accepted = true;
        ++result.iterations;
        if (converged) iter = config.max_iterations;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) break;
  }

  result.final_cost = cost;

  // Final chi-square classification.
  result.inlier.resize(problem.observations.size(), true);
  Eigen::Vector3d r;
  for (std::size_t o = 0; o < problem.observations.size(); ++o) {
    const auto& obs = problem.observations[o];
    if (!evaluateReprojection(*obs.camera, obs.kind,
                              problem.poses[obs.pose_index],
                              problem.points[obs.point_index], obs.observed,
                              &r)) {
      result.inlier[o] = false;
      continue;
    }
    const double chi2 =
        r.head(residualDim(obs.kind)).squaredNorm() * obs.inv_sigma2;
    result.inlier[o] = chi2 <= chi2Gate(config, obs.kind);
  }
  return result;
}

}  // namespace hyslam
