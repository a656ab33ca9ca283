#pragma once

#include <map>
#include <set>
#include <vector>

#include "hyslam/bow/bow_vector.hpp"
#include "hyslam/camera/camera.hpp"
#include "hyslam/features/feature.hpp"
#include "hyslam/geometry/pose.hpp"
#include "hyslam/map/map_point.hpp"

namespace hyslam {

// A retained frame snapshot participating in bundle adjustment. Both
// stereo and fisheye frames share this representation.
struct KeyFrame {
  Id id = kInvalidId;
  CameraKind kind = CameraKind::kStereo;
  double timestamp = 0.0;
  Pose pose;  // world -> camera
  CameraPtr camera;
  std::vector<Feature> features;
  // Per feature: observed map point id, kInvalidId when unmatched.
  std::vector<Id> map_point_of_feature;

  BowVector bow;
  FeatureVector feature_groups;

  // neighbor keyframe id -> shared map point count. All nonzero counts are
  // stored; graph queries filter by the covisibility threshold.
  std::map<Id, int> covisibility;
  Id parent = kInvalidId;
  std::set<Id> children;
  std::set<Id> loop_edges;

  double focal() const { return camera->focal(); }

  int trackedPointCount() const {
    int n = 0;
    for (Id mp : map_point_of_feature)
      if (mp != kInvalidId) ++n;
    return n;
  }
};

}  // namespace hyslam
