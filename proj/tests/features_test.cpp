#include <doctest.h>

#include <random>

#include "hyslam/features/matching.hpp"
#include "hyslam/synth/synthetic_world.hpp"

using namespace hyslam;

namespace {

Feature makeFeature(double u, double v, const Descriptor& d,
                    double sigma = 2.0) {
  Feature f;
  f.u = u;
  f.v = v;
  f.scale_sigma = sigma;
  f.descriptor = d;
  return f;
}

Descriptor axisDescriptor(int axis) {
  Descriptor d = Descriptor::Zero();
  d[axis] = 1.0f;
  return d;
}

SceneSpec smallScene(std::uint32_t seed = 5) {
  SceneSpec spec;
  spec.landmark_count = 800;
  spec.frame_count = 10;
  spec.trajectory = TrajectoryKind::kStraightLine;
  spec.seed = seed;
  return spec;
}

}  // namespace

TEST_CASE("brute force matching") {
  SUBCASE("identical lists self-match at distance zero") {
    std::mt19937 rng(1);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<Feature> list;
    for (int i = 0; i < 20; ++i) {
      Descriptor d;
      for (int k = 0; k < kDescriptorDim; ++k)
        d[k] = static_cast<float>(g(rng));
      d.normalize();
      list.push_back(makeFeature(i, i, d));
    }
    auto matches = matchBruteForce(list, list);
    REQUIRE(matches.size() == list.size());
    for (const auto& m : matches) {
      CHECK(m.index_a == m.index_b);
      CHECK(m.distance == 0.0f);
    }
  }

  SUBCASE("orthogonal descriptors pass the ratio test") {
    std::vector<Feature> query = {makeFeature(0, 0, axisDescriptor(0))};
    std::vector<Feature> train = {makeFeature(0, 0, axisDescriptor(0)),
                                  makeFeature(5, 5, axisDescriptor(1))};
    auto matches = matchBruteForce(query, train);
    REQUIRE(matches.size() == 1);
    CHECK(matches[0].index_b == 0);
    CHECK(matches[0].distance == 0.0f);
  }

  SUBCASE("empty inputs give empty output") {
    CHECK(matchBruteForce({}, {}).empty());
  }

  SUBCASE("synthetic frames: precision at least 0.95") {
    const SyntheticWorld world = generateWorld(smallScene());
    auto a = renderFrame(world, 0, CameraKind::kStereo);
    auto b = renderFrame(world, 1, CameraKind::kStereo);
    auto matches = matchBruteForce(a.features, b.features);
    REQUIRE(matches.size() > 100);
    int correct = 0;
    for (const auto& m : matches)
      if (a.landmark_of_feature[m.index_a] ==
          b.landmark_of_feature[m.index_b])
        ++correct;
    CHECK(static_cast<double>(correct) / matches.size() >= 0.95);
  }
}

TEST_CASE("circular matching") {
  std::mt19937 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Feature> list;
  for (int i = 0; i < 30; ++i) {
    Descriptor d;
    for (int k = 0; k < kDescriptorDim; ++k) d[k] = static_cast<float>(g(rng));
    d.normalize();
    list.push_back(makeFeature(10.0 * i, 15.0, d));
  }

  SUBCASE("four identical lists track everything") {
    auto tracks = matchCircular(list, list, list, list);
    CHECK(tracks.size() == list.size());
    for (const auto& t : tracks) {
      CHECK(t.prev_left == t.prev_right);
      CHECK(t.prev_left == t.cur_left);
    }
  }

  SUBCASE("row offset beyond one pixel fails the stereo gate") {
    std::vector<Feature> right = list;
    right[4].v += 3.0;  // breaks the rectified epipolar tolerance
    auto tracks = matchCircular(list, right, right, list);
    for (const auto& t : tracks) CHECK(t.prev_left != 4);
    CHECK(tracks.size() == list.size() - 1);
  }
}

TEST_CASE("projection window matching") {
  std::vector<Feature> frame = {makeFeature(100, 100, axisDescriptor(0)),
                                makeFeature(300, 100, axisDescriptor(1))};
  WindowMatchOptions options;
  options.focal = 400.0;

  SUBCASE("exact projection matches") {
    std::vector<ProjectedPoint> projected = {
        {{100.0, 100.0}, axisDescriptor(0), -1.0}};
    auto matches = matchProjectionWindow(projected, frame, options);
    REQUIRE(matches.size() == 1);
    CHECK(matches[0].index_b == 0);
  }

  SUBCASE("candidates outside the radius are ignored") {
    std::vector<ProjectedPoint> projected = {
        {{100.0, 140.0}, axisDescriptor(0), -1.0}};
    CHECK(matchProjectionWindow(projected, frame, options).empty());
  }

  SUBCASE("noisy synthetic frame: recall at least 0.9") {
    SceneSpec spec = smallScene(7);
    spec.noise.pixel_sigma = 0.5;
    const SyntheticWorld world = generateWorld(spec);
    auto frame_render = renderFrame(world, 0, CameraKind::kStereo);

    // Predict each rendered feature's pixel from the exact landmark.
    const Pose w2c = world.stereo_trajectory.poses[0].pose.inverse();
    std::vector<ProjectedPoint> projected;
    std::vector<int> truth;
    for (int i = 0; i < static_cast<int>(frame_render.features.size()); ++i) {
      const int lm = frame_render.landmark_of_feature[i];
      if (lm < 0) continue;
      auto pix = world.stereo_camera->projectMono(w2c * world.landmarks[lm]);
      REQUIRE(pix.ok());
      projected.push_back({pix.value(), world.descriptors[lm], -1.0});
      truth.push_back(i);
    }
    options.focal = world.stereo_camera->focal();
    auto matches = matchProjectionWindow(projected, frame_render.features,
                                         options);
    int correct = 0;
    for (const auto& m : matches)
      if (m.index_b == truth[m.index_a]) ++correct;
    CHECK(static_cast<double>(correct) / truth.size() >= 0.9);
  }
}

TEST_CASE("scale normalization") {
  CHECK(normalizeScale(2.0, 400.0) == doctest::Approx(0.005));
  // The same physical point at the same distance produces equal normalized
  // scales regardless of the observing focal length.
  CHECK(normalizeScale(2.0, 400.0) == normalizeScale(1.0, 200.0));
}
