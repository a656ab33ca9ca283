#pragma once

#include <cstdint>
#include <map>
#include <vector>

namespace hyslam {

using WordId = std::uint32_t;
using NodeId = std::uint32_t;

// Sparse TF-IDF word histogram, L1-normalized.
using BowVector = std::map<WordId, double>;

// Feature indices grouped by vocabulary node at a fixed tree level; used
// to restrict descriptor matching to features quantized to the same node.
using FeatureVector = std::map<NodeId, std::vector<int>>;

// L1 similarity score s(a, b) = 1 - 0.5 * sum |a_i - b_i|, in [0, 1].
inline double bowScore(const BowVector& a, const BowVector& b) {
  double score = 0.0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (ia->first == ib->first) {
      score += ia->second + ib->second - std::abs(ia->second - ib->second);
      ++ia;
      ++ib;
    } else if (ia->first < ib->first) {
      ++ia;
    } else {
      ++ib;
    }
  }
  return 0.5 * score;
}

}  // namespace hyslam
