#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Core>

namespace hyslam {

inline constexpr int kDescriptorDim = 128;

using Descriptor = Eigen::Matrix<float, kDescriptorDim, 1>;

inline float descriptorDistance(const Descriptor& a, const Descriptor& b) {
  return (a - b).norm();
}

// One detected keypoint with its 128-d unit descriptor. right_u is the
// matched column in the right stereo image, negative when absent.
struct Feature {
  double u = 0.0;
  double v = 0.0;
  double scale_sigma = 1.0;  // detection scale, pixels
  double orientation = 0.0;  // radians
  double right_u = -1.0;
  Descriptor descriptor = Descriptor::Zero();

  bool hasStereo() const { return right_u >= 0.0; }
};

struct MatchPair {
  int index_a = -1;
  int index_b = -1;
  float distance = 0.0f;
};

// Scale factor between discrete gating levels.
inline constexpr double kScaleLevelFactor = 1.2;

// Keypoint scale divided by the focal length of the observing frame; the
// unit in which scales of stereo and fisheye observations are comparable.
inline double normalizeScale(double scale_sigma, double focal) {
  return scale_sigma / focal;
}

inline int scaleLevel(double scale_sigma, double base_sigma = 1.6) {
  return static_cast<int>(std::lround(std::log(scale_sigma / base_sigma) /
                                      std::log(kScaleLevelFactor)));
}

}  // namespace hyslam
