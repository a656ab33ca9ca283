#include "hyslam/tracking/mlpnp.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include <Eigen/Dense>

namespace hyslam {

namespace {

// Orthonormal tangent basis (r, s) of the plane perpendicular to the unit
// bearing v.
void tangentBasis(const Eigen::Vector3d& v, Eigen::Vector3d* r,
                  Eigen::Vector3d* s) {
  const Eigen::Vector3d axis = std::abs(v.x()) < 0.8
                                   ? Eigen::Vector3d::UnitX()
                                   : Eigen::Vector3d::UnitY();
  *r = v.cross(axis).normalized();
  *s = v.cross(*r);
}

int cheiralityVotes(const std::vector<PnPCorrespondence>& correspondences,
                    const Eigen::Matrix3d& R, const Eigen::Vector3d& t) {
  int votes = 0;
  for (const auto& c : correspondences)
    if (c.bearing.dot(R * c.point + t) > 0.0) ++votes;
  return votes;
}

// One Gauss-Newton pass over the tangent-space residuals.
bool refine(const std::vector<PnPCorrespondence>& correspondences,
            int iterations, Pose* pose) {
  for (int it = 0; it < iterations; ++it) {
    Eigen::Matrix<double, 6, 6> H = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> g = Eigen::Matrix<double, 6, 1>::Zero();
    for (const auto& c : correspondences) {
      const Eigen::Vector3d pc = *pose * c.point;
      const double depth = pc.norm();
      if (depth < 1e-9) continue;
      const Eigen::Vector3d u = pc / depth;
      Eigen::Vector3d r, s;
      tangentBasis(c.bearing, &r, &s);

      const Eigen::Matrix3d du =
          (Eigen::Matrix3d::Identity() - u * u.transpose()) / depth;
      Eigen::Matrix<double, 3, 6> dp;
      dp << 0, pc.z(), -pc.y(), 1, 0, 0,  //
          -pc.z(), 0, pc.x(), 0, 1, 0,    //
          pc.y(), -pc.x(), 0, 0, 0, 1;
      const Eigen::Matrix<double, 3, 6> J3 = du * dp;

      const Eigen::Matrix<double, 1, 6> Jr = r.transpose() * J3;
      const Eigen::Matrix<double, 1, 6> Js = s.transpose() * J3;
      const double er = r.dot(u);
      const double es = s.dot(u);
      H += Jr.transpose() * Jr + Js.transpose() * Js;
      g -= Jr.transpose() * er + Js.transpose() * es;
    }
    const Eigen::Matrix<double, 6, 1> delta = H.ldlt().solve(g);
    if (!delta.allFinite()) return false;
    *pose = pose->retract(delta);
    if (delta.norm() < 1e-12) break;
  }
  return true;
}

}  // namespace

Result<Pose, PnPError> solveMlpnp(
    const std::vector<PnPCorrespondence>& correspondences, int gn_iterations) {
  const int n = static_cast<int>(correspondences.size());
  if (n < 6) return PnPError::kInsufficientCorrespondences;

  // Stack the null-space constraints a^T (R p + t) = 0 over the unknown
  // 12-vector [row-major R | t].
  Eigen::MatrixXd A(2 * n, 12);
  for (int i = 0; i < n; ++i) {
    Eigen::Vector3d r, s;
    tangentBasis(correspondences[i].bearing, &r, &s);
    const Eigen::Vector3d& p = correspondences[i].point;
    for (int row = 0; row < 2; ++row) {
      const Eigen::Vector3d& a = row == 0 ? r : s;
      for (int j = 0; j < 3; ++j) {
        for (int k = 0; k < 3; ++k) A(2 * i + row, 3 * j + k) = a[j] * p[k];
        A(2 * i + row, 9 + j) = a[j];
      }
    }
  }

  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinV);
  const Eigen::Matrix<double, 12, 1> x = svd.matrixV().col(11);
  Eigen::Matrix3d M;
  M << x[0], x[1], x[2], x[3], x[4], x[5], x[6], x[7], x[8];
  const Eigen::Vector3d t_raw = x.tail<3>();

  // The solution is defined up to sign and scale; project both signs onto
  // SO(3) and keep the one the bearings vote for.
  Pose best;
  int best_votes = -1;
  for (double sign : {1.0, -1.0}) {
    const Eigen::JacobiSVD<Eigen::Matrix3d> msvd(
        sign * M, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d R = msvd.matrixU() * msvd.matrixV().transpose();
    if (R.determinant() < 0.0) {
      Eigen::Matrix3d U = msvd.matrixU();
      U.col(2) *= -1.0;
      R = U * msvd.matrixV().transpose();
    }
    const double scale = msvd.singularValues().mean();
    if (scale < 1e-12) continue;
    const Eigen::Vector3d t = sign * t_raw / scale;
    const int votes = cheiralityVotes(correspondences, R, t);
    if (votes > best_votes) {
      best_votes = votes;
      best = Pose(R, t);
    }
  }
  if (best_votes < 0) return PnPError::kDegenerate;

  if (!refine(correspondences, gn_iterations, &best))
    return PnPError::kDegenerate;
  return best;
}

Result<PnPRansacResult, PnPError> solveMlpnpRansac(
    const std::vector<PnPCorrespondence>& correspondences,
    const PnPRansacConfig& config) {
  const int n = static_cast<int>(correspondences.size());
  if (n < 6) return PnPError::kInsufficientCorrespondences;

  const double cos_threshold = std::cos(config.angular_threshold);
  auto classify = [&](const Pose& pose, std::vector<bool>* inliers) {
    int count = 0;
    inliers->assign(n, false);
    for (int i = 0; i < n; ++i) {
      const Eigen::Vector3d pc = pose * correspondences[i].point;
      const double depth = pc.norm();
      if (depth < 1e-9) continue;
      if (correspondences[i].bearing.dot(pc) / depth >= cos_threshold) {
        (*inliers)[i] = true;
        ++count;
      }
    }
    return count;
  };

  std::mt19937 rng(config.seed);
  std::uniform_int_distribution<int> pick(0, n - 1);
  PnPRansacResult best;
  for (int it = 0; it < config.max_iterations; ++it) {
    std::set<int> sample;
    while (static_cast<int>(sample.size()) < 6) sample.insert(pick(rng));
    std::vector<PnPCorrespondence> minimal;
    for (int index : sample) minimal.push_back(correspondences[index]);
    auto pose = solveMlpnp(minimal, 5);
    if (!pose.ok()) continue;
    std::vector<bool> inliers;
    const int count = classify(pose.value(), &inliers);
    if (count > best.inlier_count) {
      best.pose = pose.value();
      best.inliers = std::move(inliers);
      best.inlier_count = count;
      if (count >= static_cast<int>(0.9 * n)) break;
    }
  }
  if (best.inlier_count < std::max(6, config.min_inliers))
    return PnPError::kNoConsensus;

  // Refit on the consensus set.
  std::vector<PnPCorrespondence> consensus;
  for (int i = 0; i < n; ++i)
    if (best.inliers[i]) consensus.push_back(correspondences[i]);
  auto refined = solveMlpnp(consensus, 10);
  if (refined.ok()) {
    std::vector<bool> inliers;
    const int count = classify(refined.value(), &inliers);
    if (count >= best.inlier_count) {
      best.pose = refined.value();
      best.inliers = std::move(inliers);
      best.inlier_count = count;
    }
  }
  return best;
}

}  // namespace hyslam
