#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "hyslam/bow/bow_vector.hpp"
#include "hyslam/features/feature.hpp"

namespace hyslam {

struct CorpusTooSmall : std::runtime_error {
  explicit CorpusTooSmall(const std::string& why)
      : std::runtime_error("vocabulary corpus too small: " + why) {}
};

// Hierarchical k-means vocabulary over unit SIFT descriptors: branching
// factor k, depth L, up to k^L words. Immutable after training/loading.
class Vocabulary {
 public:
  struct Node {
    Descriptor center = Descriptor::Zero();
    std::int32_t parent = -1;
    std::vector<std::int32_t> children;
    // Valid on leaves only.
    WordId word_id = 0;
    bool is_leaf = false;
    double weight = 0.0;  // IDF
  };

  int branching() const { return k_; }
  int depth() const { return L_; }
  std::uint32_t wordCount() const { return word_count_; }
  bool empty() const { return nodes_.empty(); }
  const std::vector<Node>& nodes() const { return nodes_; }

  // Tree level used for the feature-grouping companion vector.
  int groupingLevel() const { return std::max(1, L_ - 4); }

  // Leaf word and grouping-level node for one descriptor.
  void quantize(const Descriptor& descriptor, WordId* word,
                NodeId* group_node) const;

  double wordWeight(WordId word) const {
    return nodes_[word_to_node_[word]].weight;
  }

  // TF-IDF BoW vector (L1-normalized) and the grouping of feature indices
  // by vocabulary node at groupingLevel().
  void transform(const std::vector<Descriptor>& descriptors, BowVector* bow,
                 FeatureVector* groups = nullptr) const;

  // Recursive k-means (k-means++ seeding, fixed seed) over the corpus;
  // IDF weights from corpus word frequencies. Throws CorpusTooSmall when
  // the corpus holds fewer than k^L descriptors.
  static Vocabulary train(const std::vector<Descriptor>& corpus, int k, int L,
                          std::uint32_t seed);

  static Vocabulary load(const std::string& path);
  void save(const std::string& path) const;

 private:
  int k_ = 0;
  int L_ = 0;
  std::uint32_t word_count_ = 0;
  std::vector<Node> nodes_;  // nodes_[0] is the root
  std::vector<std::int32_t> word_to_node_;  // leaf index per word id
};

}  // namespace hyslam
