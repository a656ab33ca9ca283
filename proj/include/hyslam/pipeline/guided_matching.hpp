#pragma once

#include <vector>

#include "hyslam/bow/bow_vector.hpp"
#include "hyslam/features/feature.hpp"
#include "hyslam/map/keyframe.hpp"

namespace hyslam {

// Descriptor matching from query features into a keyframe's map points.
// When both sides carry vocabulary feature groups the search is restricted
// to features quantized to the same node; otherwise it is exhaustive.
// Ratio-tested (0.8) and one query feature per map point. Returns the map
// point id per query feature (kInvalidId when unmatched).
std::vector<Id> matchFeaturesToKeyFramePoints(
    const std::vector<Feature>& features, const FeatureVector& feature_groups,
    const KeyFrame& kf, int* match_count = nullptr);

}  // namespace hyslam
