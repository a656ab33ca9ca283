#pragma once

#include <cstdint>
#include <map>

#include <Eigen/Core>

#include "hyslam/features/feature.hpp"

namespace hyslam {

using Id = std::int64_t;
inline constexpr Id kInvalidId = -1;

// An optimized 3-D landmark. Viewing-distance bounds are derived from the
// focal-normalized detection scale so stereo and fisheye observations of
// the same point predict the same bounds.
struct MapPoint {
  Id id = kInvalidId;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Descriptor descriptor = Descriptor::Zero();  // representative member
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();  // mean viewing direction
  double d_min = 0.0;  // meters
  double d_max = 0.0;  // meters
  // Angular patch size x distance at creation: normalized_scale * depth.
  double normalized_size = 0.0;
  // keyframe id -> feature index in that keyframe.
  std::map<Id, int> observations;
  int found = 0;
  int visible = 0;
  Id reference_keyframe = kInvalidId;
  Id first_keyframe = kInvalidId;

  double foundRatio() const {
    return visible > 0 ? static_cast<double>(found) / visible : 1.0;
  }

  // Predicted normalized detection scale when viewed from `distance`.
  double predictedScaleNorm(double distance) const {
    return distance > 1e-9 ? normalized_size / distance : 0.0;
  }
};

}  // namespace hyslam
