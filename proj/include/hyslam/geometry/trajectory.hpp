#pragma once

#include <vector>

#include "hyslam/geometry/pose.hpp"

namespace hyslam {

// One stamped camera pose. Poses in a trajectory are camera-in-world
// (the translation is the camera position), matching the TUM text format.
struct StampedPose {
  double timestamp = 0.0;
  Pose pose;
};

// Ordered pose sequence with strictly increasing timestamps.
struct Trajectory {
  std::vector<StampedPose> poses;

  bool empty() const { return poses.empty(); }
  std::size_t size() const { return poses.size(); }

  void push(double timestamp, const Pose& pose) {
    poses.push_back({timestamp, pose});
  }
};

// Pairs of indices (estimate, reference) associated by nearest timestamp
// within `tolerance` seconds. Both trajectories must be time-sorted.
std::vector<std::pair<std::size_t, std::size_t>> associateByTimestamp(
    const Trajectory& estimate, const Trajectory& reference,
    double tolerance = 0.01);

}  // namespace hyslam
