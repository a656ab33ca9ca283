#pragma once

#include <set>
#include <unordered_map>
#include <vector>

#include "hyslam/bow/bow_vector.hpp"
#include "hyslam/map/map_point.hpp"

namespace hyslam {

// Inverted-index image database over keyframe BoW vectors, used for loop
// candidates and relocalization. Not internally synchronized: mutate under
// the world-map writer contract.
class KeyFrameDatabase {
 public:
  struct Candidate {
    Id keyframe = kInvalidId;
    double score = 0.0;
  };

  void add(Id keyframe, const BowVector& bow);
  void remove(Id keyframe);
  bool empty() const { return bows_.empty(); }

  // Keyframes sharing at least one word with the query, scored by L1
  // similarity, best first. `exclude` (typically the query's covisibility
  // group) is skipped; candidates scoring below `min_score` are dropped.
  std::vector<Candidate> query(const BowVector& bow,
                               const std::set<Id>& exclude,
                               double min_score = 0.0) const;

 private:
  std::unordered_map<WordId, std::vector<Id>> inverted_index_;
  std::unordered_map<Id, BowVector> bows_;
};

}  // namespace hyslam
