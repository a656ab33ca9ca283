#include "hyslam/bow/keyframe_database.hpp"

#include <algorithm>

namespace hyslam {

void KeyFrameDatabase::add(Id keyframe, const BowVector& bow) {
  remove(keyframe);
  bows_[keyframe] = bow;
  for (const auto& [word, _] : bow) inverted_index_[word].push_back(keyframe);
}

void KeyFrameDatabase::remove(Id keyframe) {
  auto it = bows_.find(keyframe);
  if (it == bows_.end()) return;
  for (const auto& [word, _] : it->second) {
    auto& list = inverted_index_[word];
    list.erase(std::remove(list.begin(), list.end(), keyframe), list.end());
    if (list.empty()) inverted_index_.erase(word);
  }
  bows_.erase(it);
}

std::vector<KeyFrameDatabase::Candidate> KeyFrameDatabase::query(
    const BowVector& bow, const std::set<Id>& exclude,
    double min_score) const {
  std::set<Id> sharing;
  for (const auto& [word, _] : bow) {
    auto it = inverted_index_.find(word);
    if (it == inverted_index_.end()) continue;
    for (Id kf : it->second)
      if (!exclude.count(kf)) sharing.insert(kf);
  }

  std::vector<Candidate> candidates;
  for (Id kf : sharing) {
    const double score = bowScore(bow, bows_.at(kf));
    if (score >= min_score) candidates.push_back({kf, score});
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& a, const Candidate& b) {
              if (a.score != b.score) return a.score > b.score;
              return a.keyframe < b.keyframe;
            });
  return candidates;
}

}  // namespace hyslam
