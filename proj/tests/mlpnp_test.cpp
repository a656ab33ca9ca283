#include <random>
#include <set>
#include <vector>

#include "doctest.h"
#include "hyslam/tracking/mlpnp.hpp"

using namespace hyslam;

namespace {

Pose testPose() {
  const Eigen::AngleAxisd yaw(0.3, Eigen::Vector3d::UnitZ());
  const Eigen::AngleAxisd pitch(-0.15, Eigen::Vector3d::UnitY());
  return Pose(Eigen::Quaterniond(yaw * pitch),
              Eigen::Vector3d(0.4, -0.2, 0.7));
}

// Exact correspondences: world points in front of the camera, bearings
// rendered through the ground-truth pose.
std::vector<PnPCorrespondence> exactCorrespondences(const Pose& pose, int n,
                                                    std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> lateral(-2.0, 2.0);
  std::uniform_real_distribution<double> depth(2.0, 8.0);
  std::vector<PnPCorrespondence> correspondences;
  const Pose camera_to_world = pose.inverse();
  while (static_cast<int>(correspondences.size()) < n) {
    const Eigen::Vector3d pc(lateral(rng), lateral(rng), depth(rng));
    PnPCorrespondence c;
    c.point = camera_to_world * pc;
    c.bearing = pc.normalized();
    correspondences.push_back(c);
  }
  return correspondences;
}

}  // namespace

TEST_CASE("mlpnp recovers an exact pose from noiseless bearings") {
  const Pose truth = testPose();
  const auto correspondences = exactCorrespondences(truth, 20, 3);
  const auto result = solveMlpnp(correspondences);
  REQUIRE(result.ok());
  CHECK(result.value().rotationAngleTo(truth) < 1e-6);
  CHECK((result.value().translation() - truth.translation()).norm() < 1e-6);
}

TEST_CASE("mlpnp works from the minimal six correspondences") {
  const Pose truth = testPose();
  const auto correspondences = exactCorrespondences(truth, 6, 9);
  const auto result = solveMlpnp(correspondences);
  REQUIRE(result.ok());
  CHECK(result.value().rotationAngleTo(truth) < 1e-4);
  CHECK((result.value().translation() - truth.translation()).norm() < 1e-4);
}

TEST_CASE("mlpnp rejects underdetermined input") {
  const auto correspondences = exactCorrespondences(testPose(), 5, 1);
  const auto result = solveMlpnp(correspondences);
  REQUIRE(!result.ok());
  CHECK(result.error() == PnPError::kInsufficientCorrespondences);
}

TEST_CASE("mlpnp tolerates mild bearing noise") {
  const Pose truth = testPose();
  auto correspondences = exactCorrespondences(truth, 60, 5);
  std::mt19937 rng(12);
  std::normal_distribution<double> noise(0.0, 5e-4);
  for (auto& c : correspondences) {
    c.bearing += Eigen::Vector3d(noise(rng), noise(rng), noise(rng));
    c.bearing.normalize();
  }
  const auto result = solveMlpnp(correspondences);
  REQUIRE(result.ok());
  CHECK(result.value().rotationAngleTo(truth) < 2e-3);
  CHECK((result.value().translation() - truth.translation()).norm() < 1e-2);
}

TEST_CASE("mlpnp ransac discards planted outliers") {
  const Pose truth = testPose();
  auto correspondences = exactCorrespondences(truth, 50, 7);
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> wild(-5.0, 5.0);
  std::set<int> corrupted;
  while (static_cast<int>(corrupted.size()) < 15) {
    const int index = static_cast<int>(rng() % correspondences.size());
    if (!corrupted.insert(index).second) continue;
    correspondences[index].bearing =
        Eigen::Vector3d(wild(rng), wild(rng), std::abs(wild(rng)) + 0.5)
            .normalized();
  }

  const auto result = solveMlpnpRansac(correspondences);
  REQUIRE(result.ok());
  CHECK(result.value().pose.rotationAngleTo(truth) < 1e-4);
  CHECK((result.value().pose.translation() - truth.translation()).norm() <
        1e-4);
  CHECK(result.value().inlier_count >= 35);
  for (int index : corrupted) CHECK(!result.value().inliers[index]);
}

TEST_CASE("mlpnp ransac reports no consensus on incoherent data") {
  std::mt19937 rng(77);
  std::uniform_real_distribution<double> wild(-5.0, 5.0);
  std::vector<PnPCorrespondence> correspondences;
  for (int i = 0; i < 40; ++i) {
    PnPCorrespondence c;
    c.point = Eigen::Vector3d(wild(rng), wild(rng), wild(rng));
    c.bearing =
        Eigen::Vector3d(wild(rng), wild(rng), wild(rng)).normalized();
    correspondences.push_back(c);
  }
  const auto result = solveMlpnpRansac(correspondences);
  REQUIRE(!result.ok());
  CHECK(result.error() == PnPError::kNoConsensus);
}

TEST_CASE("mlpnp ransac is deterministic for a fixed seed") {
  const Pose truth = testPose();
  auto correspondences = exactCorrespondences(truth, 40, 19);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> wild(-3.0, 3.0);
  for (int i = 0; i < 10; ++i)
    correspondences[static_cast<std::size_t>(rng() % 40)].bearing =
        Eigen::Vector3d(wild(rng), wild(rng), 1.0).normalized();

  const auto a = solveMlpnpRansac(correspondences);
  const auto b = solveMlpnpRansac(correspondences);
  REQUIRE(a.ok());
  REQUIRE(b.ok());
  CHECK(a.value().inlier_count == b.value().inlier_count);
  CHECK(a.value().inliers == b.value().inliers);
  CHECK(a.value().pose.translation() == b.value().pose.translation());
  CHECK(a.value().pose.rotation().coeffs() ==
        b.value().pose.rotation().coeffs());
}
