#include "hyslam/pipeline/guided_matching.hpp"

#include <limits>
#include <map>

namespace hyslam {

std::vector<Id> matchFeaturesToKeyFramePoints(
    const std::vector<Feature>& features, const FeatureVector& feature_groups,
    const KeyFrame& kf, int* match_count) {
  std::vector<Id> point_of_feature(features.size(), kInvalidId);
  // Best distance per map point so each point is claimed at most once.
  std::map<Id, std::pair<float, int>> claimed;  // point -> (distance, feature)

  auto tryMatch = [&](int query_index, const std::vector<int>& kf_indices) {
    float best = std::numeric_limits<float>::max();
    float second = std::numeric_limits<float>::max();
    int best_kf = -1;
    for (int j : kf_indices) {
      if (kf.map_point_of_feature[j] == kInvalidId) continue;
      const float d = descriptorDistance(features[query_index].descriptor,
                                         kf.features[j].descriptor);
      if (d < best) {
        second = best;
        best = d;
        best_kf = j;
      } else if (d < second) {
        second = d;
      }
    }
    if (best_kf < 0 || best > 0.8f * second) return;
    const Id point = kf.map_point_of_feature[best_kf];
    auto it = claimed.find(point);
    if (it != claimed.end()) {
      if (it->second.first <= best) return;
      point_of_feature[it->second.second] = kInvalidId;
    }
    claimed[point] = {best, query_index};
    point_of_feature[query_index] = point;
  };

  const bool guided = !feature_groups.empty() && !kf.feature_groups.empty();
  if (guided) {
    for (const auto& [node, query_indices] : feature_groups) {
      auto it = kf.feature_groups.find(node);
      if (it == kf.feature_groups.end()) continue;
      for (int i : query_indices) tryMatch(i, it->second);
    }
  } else {
    std::vector<int> all;
    all.reserve(kf.features.size());
    for (int j = 0; j < static_cast<int>(kf.features.size()); ++j)
      all.push_back(j);
    for (int i = 0; i < static_cast<int>(features.size()); ++i)
      tryMatch(i, all);
  }

  if (match_count) {
    int count = 0;
    for (Id mp : point_of_feature)
      if (mp != kInvalidId) ++count;
    *match_count = count;
  }
  return point_of_feature;
}

}  // namespace hyslam
