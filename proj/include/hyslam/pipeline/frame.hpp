#pragma once

#include <vector>

#include "hyslam/bow/bow_vector.hpp"
#include "hyslam/camera/camera.hpp"
#include "hyslam/features/feature.hpp"
#include "hyslam/geometry/pose.hpp"
#include "hyslam/map/map_point.hpp"

namespace hyslam {

// One synchronized input frame flowing through the tracking front end.
struct Frame {
  Id index = kInvalidId;  // position in the input sequence
  double timestamp = 0.0;
  CameraKind kind = CameraKind::kStereo;
  CameraPtr camera;
  std::vector<Feature> features;

  // Filled by tracking: world -> camera pose and per-feature map point
  // association (kInvalidId when unmatched).
  Pose pose;
  std::vector<Id> map_point_of_feature;

  BowVector bow;
  FeatureVector feature_groups;

  int matchedPointCount() const {
    int n = 0;
    for (Id mp : map_point_of_feature)
      if (mp != kInvalidId) ++n;
    return n;
  }
};

}  // namespace hyslam
