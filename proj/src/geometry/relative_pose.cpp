#include "hyslam/geometry/relative_pose.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Dense>

#include "hyslam/geometry/triangulation.hpp"

namespace hyslam {
namespace {

// Least-squares essential matrix for f_b^T E f_a = 0, projected onto the
// essential manifold (singular values 1, 1, 0).
Eigen::Matrix3d fitEssential(const std::vector<BearingCorrespondence>& corr,
                             const std::vector<int>& indices) {
  Eigen::MatrixXd a(indices.size(), 9);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto& fa = corr[indices[r]].ray_a;
    const auto& fb = corr[indices[r]].ray_b;
    a.row(r) << fb.x() * fa.x(), fb.x() * fa.y(), fb.x() * fa.z(),
        fb.y() * fa.x(), fb.y() * fa.y(), fb.y() * fa.z(), fb.z() * fa.x(),
        fb.z() * fa.y(), fb.z() * fa.z();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  Eigen::Matrix<double, 9, 1> e = svd.matrixV().col(8);
  Eigen::Matrix3d essential;
  essential << e(0), e(1), e(2), e(3), e(4), e(5), e(6), e(7), e(8);
  Eigen::JacobiSVD<Eigen::Matrix3d> esvd(
      essential, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Vector3d s(1.0, 1.0, 0.0);
  return esvd.matrixU() * s.asDiagonal() * esvd.matrixV().transpose();
}

// Angular distance of each bearing from its epipolar plane, worst of the
// two symmetric evaluations.
double epipolarAngle(const Eigen::Matrix3d& essential,
                     const BearingCorrespondence& c) {
  const Eigen::Vector3d nb = essential * c.ray_a;
  const Eigen::Vector3d na = essential.transpose() * c.ray_b;
  const double sa =
      na.norm() > 1e-12 ? std::abs(na.dot(c.ray_a)) / na.norm() : 0.0;
  const double sb =
      nb.norm() > 1e-12 ? std::abs(nb.dot(c.ray_b)) / nb.norm() : 0.0;
  return std::asin(std::min(1.0, std::max(sa, sb)));
}

struct Decomposition {
  Eigen::Matrix3d rotation;
  Eigen::Vector3d translation;
};

// The four (R, t) candidates of an essential matrix; cheirality picks one.
std::vector<Decomposition> decomposeEssential(const Eigen::Matrix3d& e) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      e, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d u = svd.matrixU();
  Eigen::Matrix3d v = svd.matrixV();
  if (u.determinant() < 0.0) u = -u;
  if (v.determinant() < 0.0) v = -v;
  Eigen::Matrix3d w;
  w << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  const Eigen::Matrix3d r1 = u * w * v.transpose();
  const Eigen::Matrix3d r2 = u * w.transpose() * v.transpose();
  const Eigen::Vector3d t = u.col(2);
  return {{r1, t}, {r1, -t}, {r2, t}, {r2, -t}};
}

int countCheirality(const Decomposition& d,
                    const std::vector<BearingCorrespondence>& corr,
                    const std::vector<int>& indices) {
  const Pose pose_ab = Pose(d.rotation, d.translation).inverse();
  int good = 0;
  for (int idx : indices) {
    auto p = triangulateTwoView(corr[idx].ray_a, corr[idx].ray_b, pose_ab,
                                1e-5);
    if (p.ok()) ++good;
  }
  return good;
}

}  // namespace

Result<RelativePose, RelativePoseError> estimateRelativePoseRansac(
    const std::vector<BearingCorrespondence>& correspondences,
    const RansacConfig& config) {
  const int n = static_cast<int>(correspondences.size());
  if (n < 8) return RelativePoseError::kInsufficientCorrespondences;

  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<int> pick(0, n - 1);

  Eigen::Matrix3d best_essential = Eigen::Matrix3d::Zero();
  int best_inliers = -1;
  std::vector<bool> best_mask;

  std::vector<int> sample(8);
  for (int iter = 0; iter < config.max_iterations; ++iter) {
    for (int k = 0; k < 8; ++k) {
      bool fresh;
      do {
        sample[k] = pick(rng);
        fresh = true;
        for (int j = 0; j < k; ++j)
          if (sample[j] == sample[k]) fresh = false;
      } while (!fresh);
    }
    const Eigen::Matrix3d essential = fitEssential(correspondences, sample);
    int inliers = 0;
    std::vector<bool> mask(n, false);
    for (int i = 0; i < n; ++i) {
      if (epipolarAngle(essential, correspondences[i]) <
          config.angular_threshold) {
        mask[i] = true;
        ++inliers;
      }
    }
    if (inliers > best_inliers) {
      best_inliers = inliers;
      best_essential = essential;
      best_mask = std::move(mask);
    }
  }

  if (best_inliers < std::max(8, config.min_inliers))
    return RelativePoseError::kNoConsensus;

  // Refit on the consensus set and re-classify.
  std::vector<int> inlier_indices;
  for (int i = 0; i < n; ++i)
    if (best_mask[i]) inlier_indices.push_back(i);
  const Eigen::Matrix3d refined =
      fitEssential(correspondences, inlier_indices);
  std::vector<bool> mask(n, false);
  inlier_indices.clear();
  int inliers = 0;
  for (int i = 0; i < n; ++i) {
    if (epipolarAngle(refined, correspondences[i]) < config.angular_threshold) {
      mask[i] = true;
      inlier_indices.push_back(i);
      ++inliers;
    }
  }
  if (inliers < std::max(8, config.min_inliers))
    return RelativePoseError::kNoConsensus;

  const auto candidates = decomposeEssential(refined);
  int best_support = -1;
  Decomposition best = candidates.front();
  for (const auto& cand : candidates) {
    const int support = countCheirality(cand, correspondences, inlier_indices);
    if (support > best_support) {
      best_support = support;
      best = cand;
    }
  }

  RelativePose out;
  out.rotation = best.rotation;
  out.translation_direction = best.translation.normalized();
  out.inliers = std::move(mask);
  out.inlier_count = inliers;

  // With (near) zero baseline every skew direction explains the data; flag
  // the direction as undefined when rotation-compensated parallax vanishes.
  std::vector<double> parallax;
  parallax.reserve(inlier_indices.size());
  for (int idx : inlier_indices) {
    const Eigen::Vector3d rotated = best.rotation * correspondences[idx].ray_a;
    parallax.push_back(
        std::acos(std::clamp(rotated.dot(correspondences[idx].ray_b), -1.0,
                             1.0)));
  }
  std::nth_element(parallax.begin(), parallax.begin() + parallax.size() / 2,
                   parallax.end());
  out.direction_defined =
      parallax[parallax.size() / 2] > 2.0 * config.angular_threshold;
  return out;
}

}  // namespace hyslam
