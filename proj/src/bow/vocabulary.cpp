#include "hyslam/bow/vocabulary.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>

#include "hyslam/io/errors.hpp"

namespace hyslam {

namespace {

constexpr char kMagic[4] = {'H', 'Y', 'V', 'C'};
constexpr std::uint32_t kVersion = 1;

// k-means++ seeding followed by Lloyd iterations over the member subset.
// Returns per-member cluster assignments; centers are renormalized to the
// unit sphere after every update (descriptors live there).
std::vector<int> kMeansOnce(const std::vector<Descriptor>& corpus,
                            const std::vector<int>& members, int k,
                            std::mt19937& rng,
                            std::vector<Descriptor>* centers) {
  const int n = static_cast<int>(members.size());
  centers->clear();

  // Seeding: first center uniform, then proportional to squared distance.
  std::uniform_int_distribution<int> uniform(0, n - 1);
  centers->push_back(corpus[members[uniform(rng)]]);
  std::vector<float> best_sq(n, std::numeric_limits<float>::max());
  while (static_cast<int>(centers->size()) < k) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      const float d = descriptorDistance(corpus[members[i]],
                                         centers->back());
      best_sq[i] = std::min(best_sq[i], d * d);
      total += best_sq[i];
    }
    if (total <= 0.0) break;  // fewer distinct descriptors than clusters
    std::uniform_real_distribution<double> pick(0.0, total);
    double target = pick(rng);
    int chosen = n - 1;
    for (int i = 0; i < n; ++i) {
      target -= best_sq[i];
      if (target <= 0.0) {
        chosen = i;
        break;
      }
    }
    centers->push_back(corpus[members[chosen]]);
  }

  const int kc = static_cast<int>(centers->size());
  std::vector<int> assignment(n, 0);
  for (int iteration = 0; iteration < 25; ++iteration) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      float best = std::numeric_limits<float>::max();
      int arg = 0;
      for (int c = 0; c < kc; ++c) {
        const float d = descriptorDistance(corpus[members[i]], (*centers)[c]);
        if (d < best) {
          best = d;
          arg = c;
        }
      }
      if (assignment[i] != arg) {
        assignment[i] = arg;
        changed = true;
      }
    }
    if (!changed && iteration > 0) break;

    std::vector<Descriptor> sums(kc, Descriptor::Zero());
    std::vector<int> counts(kc, 0);
    for (int i = 0; i < n; ++i) {
      sums[assignment[i]] += corpus[members[i]];
      ++counts[assignment[i]];
    }
    for (int c = 0; c < kc; ++c) {
      if (counts[c] == 0) continue;
      sums[c] /= static_cast<float>(counts[c]);
      const float norm = sums[c].norm();
      if (norm > 1e-12f) sums[c] /= norm;
      (*centers)[c] = sums[c];
    }
  }
  return assignment;
}

// Seeding is the weak point of Lloyd's algorithm, so run a few attempts and
// keep the lowest-distortion one. The RNG is consumed in a fixed order, so
// the result stays deterministic.
std::vector<int> kMeans(const std::vector<Descriptor>& corpus,
                        const std::vector<int>& members, int k,
                        std::mt19937& rng, std::vector<Descriptor>* centers) {
  constexpr int kAttempts = 4;
  std::vector<int> best_assignment;
  double best_distortion = std::numeric_limits<double>::max();
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    std::vector<Descriptor> attempt_centers;
    std::vector<int> assignment =
        kMeansOnce(corpus, members, k, rng, &attempt_centers);
    double distortion = 0.0;
    for (std::size_t i = 0; i < members.size(); ++i) {
      const float d = descriptorDistance(corpus[members[i]],
                                         attempt_centers[assignment[i]]);
      distortion += static_cast<double>(d) * d;
    }
    if (distortion < best_distortion) {
      best_distortion = distortion;
      best_assignment = std::move(assignment);
      *centers = std::move(attempt_centers);
    }
  }
  return best_assignment;
}

}  // namespace

Vocabulary Vocabulary::train(const std::vector<Descriptor>& corpus, int k,
                             int L, std::uint32_t seed) {
  if (k < 2 || L < 1) throw CorpusTooSmall("k must be >= 2 and L >= 1");
  const double words = std::pow(static_cast<double>(k), L);
  if (static_cast<double>(corpus.size()) < words)
    throw CorpusTooSmall(std::to_string(corpus.size()) + " descriptors for " +
                         std::to_string(static_cast<long long>(words)) +
                         " words");

  Vocabulary vocab;
  vocab.k_ = k;
  vocab.L_ = L;
  std::mt19937 rng(seed);

  vocab.nodes_.emplace_back();  // root
  std::vector<int> all(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) all[i] = static_cast<int>(i);

  // Per-word member counts for the IDF weights.
  std::vector<int> word_members;

  // Depth-first expansion so node ids (and the RNG consumption order) are
  // deterministic.
  struct Task {
    std::int32_t node;
    int level;
    std::vector<int> members;
  };
  std::vector<Task> stack;
  stack.push_back({0, 0, std::move(all)});
  while (!stack.empty()) {
    Task task = std::move(stack.back());
    stack.pop_back();

    if (task.level == L || static_cast<int>(task.members.size()) <= 1) {
      Node& node = vocab.nodes_[task.node];
      node.is_leaf = true;
      node.word_id = static_cast<WordId>(word_members.size());
      word_members.push_back(static_cast<int>(task.members.size()));
      continue;
    }

    std::vector<Descriptor> centers;
    const std::vector<int> assignment =
        kMeans(corpus, task.members, k, rng, &centers);

    // Children pushed onto the stack in reverse so expansion is in-order.
    std::vector<Task> children;
    for (int c = 0; c < static_cast<int>(centers.size()); ++c) {
      std::vector<int> subset;
      for (std::size_t i = 0; i < task.members.size(); ++i)
        if (assignment[i] == c) subset.push_back(task.members[i]);
      if (subset.empty()) continue;
      const auto child_id = static_cast<std::int32_t>(vocab.nodes_.size());
      Node child;
      child.center = centers[c];
      child.parent = task.node;
      vocab.nodes_.push_back(child);
      vocab.nodes_[task.node].children.push_back(child_id);
      children.push_back({child_id, task.level + 1, std::move(subset)});
    }
    for (auto it = children.rbegin(); it != children.rend(); ++it)
      stack.push_back(std::move(*it));
  }

  vocab.word_count_ = static_cast<std::uint32_t>(word_members.size());
  const double n_docs = static_cast<double>(corpus.size());
  vocab.word_to_node_.resize(vocab.word_count_);
  for (std::size_t i = 0; i < vocab.nodes_.size(); ++i) {
    Node& node = vocab.nodes_[i];
    if (!node.is_leaf) continue;
    node.weight =
        std::log(n_docs / std::max(1, word_members[node.word_id]));
    vocab.word_to_node_[node.word_id] = static_cast<std::int32_t>(i);
  }
  return vocab;
}

void Vocabulary::quantize(const Descriptor& descriptor, WordId* word,
                          NodeId* group_node) const {
  std::int32_t current = 0;
  int level = 0;
  if (group_node) *group_node = 0;
  while (!nodes_[current].is_leaf) {
    const auto& children = nodes_[current].children;
    float best = std::numeric_limits<float>::max();
    std::int32_t arg = children.front();
    for (std::int32_t child : children) {
      const float d = descriptorDistance(descriptor, nodes_[child].center);
      if (d < best) {
        best = d;
        arg = child;
      }
    }
    current = arg;
    ++level;
    if (group_node && level == groupingLevel())
      *group_node = static_cast<NodeId>(current);
  }
  if (word) *word = nodes_[current].word_id;
  // A tree shallower than the grouping level groups by the leaf itself.
  if (group_node && level < groupingLevel())
    *group_node = static_cast<NodeId>(current);
}

void Vocabulary::transform(const std::vector<Descriptor>& descriptors,
                           BowVector* bow, FeatureVector* groups) const {
  bow->clear();
  if (groups) groups->clear();
  if (empty()) return;

  std::map<WordId, double> tf;
  for (int i = 0; i < static_cast<int>(descriptors.size()); ++i) {
    WordId word = 0;
    NodeId group = 0;
    quantize(descriptors[i], &word, &group);
    tf[word] += 1.0;
    if (groups) (*groups)[group].push_back(i);
  }

  double total = 0.0;
  for (const auto& [word, count] : tf) {
    // Leaf lookup by word id: weights were assigned in leaf order.
    const double weighted = count * wordWeight(word);
    if (weighted > 0.0) {
      (*bow)[word] = weighted;
      total += weighted;
    }
  }
  if (total > 0.0)
    for (auto& [word, value] : *bow) value /= total;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write vocabulary: " + path);
  out.write(kMagic, 4);
  auto u32 = [&](std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), 4);
  };
  u32(kVersion);
  u32(static_cast<std::uint32_t>(k_));
  u32(static_cast<std::uint32_t>(L_));
  u32(word_count_);
  u32(static_cast<std::uint32_t>(nodes_.size()));
  for (const Node& node : nodes_) {
    out.write(reinterpret_cast<const char*>(&node.parent), 4);
    const std::uint8_t leaf = node.is_leaf ? 1 : 0;
    out.write(reinterpret_cast<const char*>(&leaf), 1);
    out.write(reinterpret_cast<const char*>(&node.word_id), 4);
    out.write(reinterpret_cast<const char*>(&node.weight), 8);
    out.write(reinterpret_cast<const char*>(node.center.data()),
              sizeof(float) * kDescriptorDim);
  }
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open vocabulary: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw ParseError("bad vocabulary magic: " + path);
  auto u32 = [&]() {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    return v;
  };
  if (u32() != kVersion) throw ParseError("unsupported vocabulary version");

  Vocabulary vocab;
  vocab.k_ = static_cast<int>(u32());
  vocab.L_ = static_cast<int>(u32());
  vocab.word_count_ = u32();
  const std::uint32_t node_count = u32();
  vocab.nodes_.resize(node_count);
  std::uint32_t leaves = 0;
  for (std::uint32_t i = 0; i < node_count; ++i) {
    Node& node = vocab.nodes_[i];
    std::uint8_t leaf = 0;
    in.read(reinterpret_cast<char*>(&node.parent), 4);
    in.read(reinterpret_cast<char*>(&leaf), 1);
    in.read(reinterpret_cast<char*>(&node.word_id), 4);
    in.read(reinterpret_cast<char*>(&node.weight), 8);
    in.read(reinterpret_cast<char*>(node.center.data()),
            sizeof(float) * kDescriptorDim);
    if (!in) throw ParseError("truncated vocabulary: " + path);
    node.is_leaf = leaf != 0;
    if (node.is_leaf) ++leaves;
    if (i > 0) {
      if (node.parent < 0 || node.parent >= static_cast<std::int32_t>(i))
        throw ParseError("vocabulary node " + std::to_string(i) +
                         " has an invalid parent");
      vocab.nodes_[node.parent].children.push_back(
          static_cast<std::int32_t>(i));
    }
  }
  if (leaves != vocab.word_count_)
    throw ParseError("vocabulary word count does not match its leaves");
  vocab.word_to_node_.resize(vocab.word_count_);
  for (std::size_t i = 0; i < vocab.nodes_.size(); ++i)
    if (vocab.nodes_[i].is_leaf) {
      if (vocab.nodes_[i].word_id >= vocab.word_count_)
        throw ParseError("vocabulary word id out of range");
      vocab.word_to_node_[vocab.nodes_[i].word_id] =
          static_cast<std::int32_t>(i);
    }
  for (const Node& node : vocab.nodes_)
    if (!node.is_leaf && node.children.empty())
      throw ParseError("vocabulary has an unreachable interior node");
  return vocab;
}

}  // namespace hyslam
