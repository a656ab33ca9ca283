#include <doctest.h>

#include <random>

#include "hyslam/geometry/horn.hpp"
#include "hyslam/geometry/pose.hpp"
#include "hyslam/geometry/relative_pose.hpp"
#include "hyslam/geometry/triangulation.hpp"

using namespace hyslam;

namespace {

Pose randomPose(std::mt19937& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::Quaterniond q(gauss(rng), gauss(rng), gauss(rng), gauss(rng));
  q.normalize();
  return Pose(q, Eigen::Vector3d(gauss(rng), gauss(rng), gauss(rng)));
}

}  // namespace

TEST_CASE("pose composition") {
  CHECK((Pose::Identity() * Pose::Identity()).matrix()
            .isApprox(Eigen::Matrix4d::Identity(), 1e-15));

  std::mt19937 rng(7);
  for (int i = 0; i < 20; ++i) {
    const Pose T = randomPose(rng);
    const Pose round = T * T.inverse();
    CHECK(round.rotation().angularDistance(Eigen::Quaterniond::Identity()) <
          1e-9);
    CHECK(round.translation().norm() < 1e-9);
    CHECK(std::abs(T.rotation().norm() - 1.0) < 1e-9);
  }

  const Pose a(Eigen::Quaterniond::Identity(), Eigen::Vector3d(1, 0, 0));
  const Pose b(Eigen::Quaterniond::Identity(), Eigen::Vector3d(0, 2, 0));
  CHECK((a * b).translation().isApprox(Eigen::Vector3d(1, 2, 0), 1e-15));
}

TEST_CASE("pose inverse") {
  CHECK(Pose::Identity().inverse().translation().norm() == 0.0);
  const Pose t(Eigen::Quaterniond::Identity(), Eigen::Vector3d(1, 2, 3));
  CHECK(t.inverse().translation().isApprox(Eigen::Vector3d(-1, -2, -3)));
}

TEST_CASE("pose composition is associative") {
  std::mt19937 rng(11);
  for (int i = 0; i < 20; ++i) {
    const Pose a = randomPose(rng), b = randomPose(rng), c = randomPose(rng);
    const Pose left = (a * b) * c;
    const Pose right = a * (b * c);
    CHECK(left.rotation().angularDistance(right.rotation()) < 1e-9);
    CHECK((left.translation() - right.translation()).norm() < 1e-9);
  }
}

TEST_CASE("point transforms") {
  CHECK((Pose::Identity() * Eigen::Vector3d(1, 2, 3))
            .isApprox(Eigen::Vector3d(1, 2, 3)));

  const Pose yaw180(
      Eigen::Quaterniond(Eigen::AngleAxisd(M_PI, Eigen::Vector3d::UnitZ())),
      Eigen::Vector3d::Zero());
  CHECK((yaw180 * Eigen::Vector3d(1, 0, 0) - Eigen::Vector3d(-1, 0, 0)).norm() <
        1e-9);

  std::mt19937 rng(3);
  std::normal_distribution<double> gauss(0.0, 2.0);
  for (int i = 0; i < 20; ++i) {
    const Pose T = randomPose(rng);
    const Eigen::Vector3d p(gauss(rng), gauss(rng), gauss(rng));
    const Eigen::Vector4d h = T.matrix() * p.homogeneous();
    CHECK((T * p - h.head<3>()).norm() < 1e-12);

    const Pose S = randomPose(rng);
    CHECK(((T * S) * p - T * (S * p)).norm() < 1e-9);
  }
}

TEST_CASE("stereo triangulation") {
  StereoRig rig;
  rig.left = {400.0, 400.0, 320.0, 240.0, 640, 480};
  rig.baseline = 0.1;

  // Disparity 20 px: z = 400 * 0.1 / 20 = 2 m, x = (520-320)/400 * 2 = 1 m.
  auto p = triangulateStereo(520.0, 240.0, 500.0, rig);
  REQUIRE(p.ok());
  CHECK((p.value() - Eigen::Vector3d(1.0, 0.0, 2.0)).norm() < 1e-12);

  auto degenerate = triangulateStereo(320.0, 240.0, 320.0, rig);
  REQUIRE(!degenerate.ok());
  CHECK(degenerate.error() == TriangulationError::kDegenerateDisparity);

  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    const Eigen::Vector3d x(u(rng), u(rng), 2.0 + u(rng));
    auto projected = rig.project(x);
    REQUIRE(projected.ok());
    auto back = triangulateStereo(projected.value().x(), projected.value().y(),
                                  projected.value().z(), rig);
    REQUIRE(back.ok());
    CHECK((back.value() - x).norm() < 1e-9);
  }
}

TEST_CASE("two-view triangulation") {
  // Rays crossing at 90 degrees over a unit baseline along x.
  const Eigen::Vector3d ray_a = Eigen::Vector3d(1, 0, 1).normalized();
  const Eigen::Vector3d ray_b = Eigen::Vector3d(-1, 0, 1).normalized();
  const Pose pose_ab(Eigen::Quaterniond::Identity(), Eigen::Vector3d(1, 0, 0));
  auto p = triangulateTwoView(ray_a, ray_b, pose_ab);
  REQUIRE(p.ok());
  CHECK((p.value() - Eigen::Vector3d(0.5, 0.0, 0.5)).norm() < 1e-12);

  auto parallel = triangulateTwoView(Eigen::Vector3d::UnitZ(),
                                     Eigen::Vector3d::UnitZ(), pose_ab);
  REQUIRE(!parallel.ok());
  CHECK(parallel.error() == TriangulationError::kInsufficientParallax);

  // Random scenes: exact ray pairs recover the generating point.
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    const Eigen::Vector3d x(u(rng), u(rng), 4.0 + u(rng));
    const Pose b_to_a(Eigen::Quaterniond(Eigen::AngleAxisd(
                          0.1 * u(rng), Eigen::Vector3d::UnitY())),
                      Eigen::Vector3d(1.0 + 0.2 * u(rng), 0.1 * u(rng), 0.0));
    const Eigen::Vector3d ra = x.normalized();
    const Eigen::Vector3d rb = (b_to_a.inverse() * x).normalized();
    auto back = triangulateTwoView(ra, rb, b_to_a);
    REQUIRE(back.ok());
    CHECK((back.value() - x).norm() < 1e-8);
  }
}

TEST_CASE("horn alignment") {
  std::mt19937 rng(13);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Trajectory reference;
  for (int i = 0; i < 10; ++i) {
    reference.push(i * 0.1, Pose(Eigen::Quaterniond::Identity(),
                                 Eigen::Vector3d(gauss(rng), gauss(rng),
                                                 gauss(rng))));
  }

  SUBCASE("identical trajectories give identity") {
    auto aligned = hornAlign(reference, reference);
    REQUIRE(aligned.ok());
    CHECK(aligned.value().transform.rotation().angularDistance(
              Eigen::Quaterniond::Identity()) < 1e-12);
    CHECK(aligned.value().transform.translation().norm() < 1e-12);
    for (double r : aligned.value().residuals) CHECK(r < 1e-12);
  }

  SUBCASE("known rigid offset is recovered") {
    const Pose offset(
        Eigen::Quaterniond(Eigen::AngleAxisd(0.7, Eigen::Vector3d(1, 2, 3)
                                                      .normalized())),
        Eigen::Vector3d(4, -5, 6));
    Trajectory estimate;
    // estimate = offset^-1 applied to reference positions
    for (const auto& sp : reference.poses)
      estimate.push(sp.timestamp,
                    Pose(Eigen::Quaterniond::Identity(),
                         offset.inverse() * sp.pose.translation()));
    auto aligned = hornAlign(estimate, reference);
    REQUIRE(aligned.ok());
    CHECK(aligned.value().transform.rotation().angularDistance(
              offset.rotation()) < 1e-9);
    CHECK((aligned.value().transform.translation() - offset.translation())
              .norm() < 1e-9);
  }

  SUBCASE("three non-collinear points align exactly") {
    std::vector<Eigen::Vector3d> est = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    const Pose offset(
        Eigen::Quaterniond(Eigen::AngleAxisd(1.1, Eigen::Vector3d::UnitY())),
        Eigen::Vector3d(0.5, 0.25, -1.0));
    std::vector<Eigen::Vector3d> ref;
    for (const auto& p : est) ref.push_back(offset * p);
    auto aligned = hornAlignPoints(est, ref);
    REQUIRE(aligned.ok());
    for (double r : aligned.value().residuals) CHECK(r < 1e-9);
  }

  SUBCASE("residual RMSE invariant to rigid motion of the estimate") {
    Trajectory estimate;
    std::normal_distribution<double> n(0.0, 0.05);
    for (const auto& sp : reference.poses)
      estimate.push(sp.timestamp,
                    Pose(Eigen::Quaterniond::Identity(),
                         sp.pose.translation() +
                             Eigen::Vector3d(n(rng), n(rng), n(rng))));
    auto rmse = [](const HornAlignment& a) {
      double s = 0.0;
      for (double r : a.residuals) s += r * r;
      return std::sqrt(s / a.residuals.size());
    };
    auto base = hornAlign(estimate, reference);
    REQUIRE(base.ok());

    const Pose moved(
        Eigen::Quaterniond(Eigen::AngleAxisd(0.4, Eigen::Vector3d::UnitX())),
        Eigen::Vector3d(10, 0, -3));
    Trajectory moved_estimate;
    for (const auto& sp : estimate.poses)
      moved_estimate.push(sp.timestamp,
                          Pose(Eigen::Quaterniond::Identity(),
                               moved * sp.pose.translation()));
    auto shifted = hornAlign(moved_estimate, reference);
    REQUIRE(shifted.ok());
    CHECK(rmse(base.value()) == doctest::Approx(rmse(shifted.value()))
                                    .epsilon(1e-9));
  }

  SUBCASE("too few associations is an error") {
    Trajectory two;
    two.push(0.0, Pose());
    two.push(0.1, Pose());
    auto aligned = hornAlign(two, two);
    REQUIRE(!aligned.ok());
    CHECK(aligned.error() == AlignmentError::kTooFewAssociations);
  }
}

TEST_CASE("relative pose from bearings") {
  std::mt19937 rng(21);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Pose a_to_b(
      Eigen::Quaterniond(Eigen::AngleAxisd(0.3, Eigen::Vector3d(0.2, 1.0, 0.1)
                                                    .normalized())),
      Eigen::Vector3d(0.8, -0.2, 0.1));

  auto makeCorrespondences = [&](int count) {
    std::vector<BearingCorrespondence> c;
    for (int i = 0; i < count; ++i) {
      const Eigen::Vector3d x(2.0 * u(rng), 2.0 * u(rng), 5.0 + 2.0 * u(rng));
      c.push_back({x.normalized(), (a_to_b * x).normalized()});
    }
    return c;
  };

  SUBCASE("noiseless known motion") {
    auto result = estimateRelativePoseRansac(makeCorrespondences(50), {});
    REQUIRE(result.ok());
    const RelativePose& rp = result.value();
    CHECK(Eigen::Quaterniond(rp.rotation)
              .angularDistance(a_to_b.rotation()) < 1e-6);
    CHECK(rp.direction_defined);
    const Eigen::Vector3d expected = a_to_b.translation().normalized();
    CHECK(std::acos(std::clamp(rp.translation_direction.dot(expected), -1.0,
                               1.0)) < 1e-6);
  }

  SUBCASE("zero baseline flags undefined direction") {
    const Pose rotation_only(
        Eigen::Quaterniond(Eigen::AngleAxisd(0.4, Eigen::Vector3d::UnitY())),
        Eigen::Vector3d::Zero());
    std::vector<BearingCorrespondence> c;
    for (int i = 0; i < 50; ++i) {
      const Eigen::Vector3d x(2.0 * u(rng), 2.0 * u(rng), 5.0 + 2.0 * u(rng));
      c.push_back({x.normalized(), (rotation_only * x).normalized()});
    }
    auto result = estimateRelativePoseRansac(c, {});
    if (result.ok()) {
      CHECK(!result.value().direction_defined);
      CHECK(Eigen::Quaterniond(result.value().rotation)
                .angularDistance(rotation_only.rotation()) < 1e-4);
    }
  }

  SUBCASE("30 percent outliers: high inlier recall") {
    auto c = makeCorrespondences(100);
    for (int i = 0; i < 30; ++i)
      c[i].ray_b =
          Eigen::Vector3d(u(rng), u(rng), 1.0 + 0.5 * u(rng)).normalized();
    auto result = estimateRelativePoseRansac(c, {});
    REQUIRE(result.ok());
    int true_inliers_kept = 0;
    for (int i = 30; i < 100; ++i)
      if (result.value().inliers[i]) ++true_inliers_kept;
    CHECK(true_inliers_kept >= 69);  // recall >= 0.99 on the 70 good pairs
  }

  SUBCASE("deterministic under fixed seed") {
    auto c = makeCorrespondences(60);
    auto r1 = estimateRelativePoseRansac(c, {});
    auto r2 = estimateRelativePoseRansac(c, {});
    REQUIRE(r1.ok());
    REQUIRE(r2.ok());
    CHECK(r1.value().rotation == r2.value().rotation);
    CHECK(r1.value().translation_direction ==
          r2.value().translation_direction);
  }

  SUBCASE("too few correspondences") {
    auto result = estimateRelativePoseRansac(makeCorrespondences(7), {});
    REQUIRE(!result.ok());
    CHECK(result.error() == RelativePoseError::kInsufficientCorrespondences);
  }
}
