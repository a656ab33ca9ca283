#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <vector>

#include "doctest.h"
#include "hyslam/bow/keyframe_database.hpp"
#include "hyslam/bow/vocabulary.hpp"
#include "hyslam/io/errors.hpp"

using namespace hyslam;

namespace {

Descriptor randomUnitDescriptor(std::mt19937& rng) {
  std::normal_distribution<float> gauss(0.0f, 1.0f);
  Descriptor d;
  for (int i = 0; i < kDescriptorDim; ++i) d[i] = gauss(rng);
  d /= d.norm();
  return d;
}

// `clusters` well-separated random anchors with `per_cluster` noisy copies
// each; returns the corpus plus the cluster label of every descriptor.
struct PlantedCorpus {
  std::vector<Descriptor> descriptors;
  std::vector<int> labels;
  std::vector<Descriptor> anchors;

  PlantedCorpus(int clusters, int per_cluster, std::uint32_t seed,
                float spread = 0.05f) {
    std::mt19937 rng(seed);
    std::normal_distribution<float> gauss(0.0f, spread);
    while (static_cast<int>(anchors.size()) < clusters) {
      Descriptor candidate = randomUnitDescriptor(rng);
      bool separated = true;
      for (const Descriptor& a : anchors)
        if (descriptorDistance(candidate, a) < 0.8f) separated = false;
      if (separated) anchors.push_back(candidate);
    }
    for (int c = 0; c < clusters; ++c)
      for (int i = 0; i < per_cluster; ++i) {
        Descriptor d = anchors[c];
        for (int j = 0; j < kDescriptorDim; ++j) d[j] += gauss(rng);
        d /= d.norm();
        descriptors.push_back(d);
        labels.push_back(c);
      }
  }
};

}  // namespace

TEST_CASE("vocabulary training recovers planted clusters") {
  const PlantedCorpus corpus(8, 40, 7);
  const Vocabulary vocab = Vocabulary::train(corpus.descriptors, 8, 1, 11);
  CHECK(vocab.wordCount() == 8);

  // Every planted cluster quantizes to one word, and no two clusters share.
  std::map<int, WordId> cluster_word;
  for (std::size_t i = 0; i < corpus.descriptors.size(); ++i) {
    WordId word = 0;
    vocab.quantize(corpus.descriptors[i], &word, nullptr);
    const int label = corpus.labels[i];
    if (cluster_word.count(label)) {
      CHECK(cluster_word[label] == word);
    } else {
      cluster_word[label] = word;
    }
  }
  std::set<WordId> distinct;
  for (const auto& [label, word] : cluster_word) distinct.insert(word);
  CHECK(distinct.size() == 8);
}

TEST_CASE("vocabulary handles a deep tree and minimal branching") {
  const PlantedCorpus corpus(4, 30, 3);
  const Vocabulary vocab = Vocabulary::train(corpus.descriptors, 2, 2, 5);
  CHECK(vocab.branching() == 2);
  CHECK(vocab.depth() == 2);
  CHECK(vocab.wordCount() <= 4);
  CHECK(vocab.wordCount() >= 2);
  CHECK(vocab.groupingLevel() == 1);

  // Quantization stays inside the tree for arbitrary descriptors.
  std::mt19937 rng(99);
  for (int i = 0; i < 20; ++i) {
    WordId word = 0;
    NodeId group = 0;
    vocab.quantize(randomUnitDescriptor(rng), &word, &group);
    CHECK(word < vocab.wordCount());
    CHECK(group < vocab.nodes().size());
  }
}

TEST_CASE("vocabulary training is deterministic for a fixed seed") {
  const PlantedCorpus corpus(6, 25, 21);
  const Vocabulary a = Vocabulary::train(corpus.descriptors, 3, 2, 17);
  const Vocabulary b = Vocabulary::train(corpus.descriptors, 3, 2, 17);
  REQUIRE(a.nodes().size() == b.nodes().size());
  for (std::size_t i = 0; i < a.nodes().size(); ++i) {
    CHECK(a.nodes()[i].parent == b.nodes()[i].parent);
    CHECK(a.nodes()[i].is_leaf == b.nodes()[i].is_leaf);
    CHECK(a.nodes()[i].word_id == b.nodes()[i].word_id);
    CHECK(a.nodes()[i].weight == b.nodes()[i].weight);
    CHECK(a.nodes()[i].center == b.nodes()[i].center);
  }
}

TEST_CASE("vocabulary rejects an undersized corpus") {
  const PlantedCorpus corpus(2, 3, 1);
  CHECK_THROWS_AS(Vocabulary::train(corpus.descriptors, 3, 2, 1),
                  CorpusTooSmall);
  CHECK_THROWS_AS(Vocabulary::train(corpus.descriptors, 1, 1, 1),
                  CorpusTooSmall);
}

TEST_CASE("transform produces an L1-normalized TF-IDF vector") {
  const PlantedCorpus corpus(8, 40, 13);
  const Vocabulary vocab = Vocabulary::train(corpus.descriptors, 8, 1, 2);

  std::vector<Descriptor> image(corpus.descriptors.begin(),
                                corpus.descriptors.begin() + 60);
  BowVector bow;
  FeatureVector groups;
  vocab.transform(image, &bow, &groups);

  double total = 0.0;
  for (const auto& [word, value] : bow) {
    CHECK(value > 0.0);
    CHECK(word < vocab.wordCount());
    total += value;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

  // Group lists cover every feature exactly once.
  std::set<int> seen;
  for (const auto& [node, indices] : groups)
    for (int index : indices) CHECK(seen.insert(index).second);
  CHECK(seen.size() == image.size());

  CHECK(bowScore(bow, bow) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("bow score separates similar and disjoint images") {
  const PlantedCorpus corpus(8, 40, 29);
  const Vocabulary vocab = Vocabulary::train(corpus.descriptors, 8, 1, 2);

  // Two images drawn from the same clusters vs one from different clusters.
  std::vector<Descriptor> a, b, c;
  for (int i = 0; i < 30; ++i) {
    a.push_back(corpus.descriptors[i]);            // clusters 0
    b.push_back(corpus.descriptors[i + 5]);        // clusters 0 (overlap)
    c.push_back(corpus.descriptors[i + 4 * 40]);   // clusters 4
  }
  BowVector ba, bb, bc;
  vocab.transform(a, &ba);
  vocab.transform(b, &bb);
  vocab.transform(c, &bc);
  CHECK(bowScore(ba, bb) > 0.9);
  CHECK(bowScore(ba, bc) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("vocabulary survives a binary save/load round trip") {
  const PlantedCorpus corpus(6, 30, 41);
  const Vocabulary vocab = Vocabulary::train(corpus.descriptors, 3, 2, 8);

  const auto path =
      std::filesystem::temp_directory_path() / "hyslam_vocab_test.bin";
  vocab.save(path.string());
  const Vocabulary loaded = Vocabulary::load(path.string());
  std::filesystem::remove(path);

  REQUIRE(loaded.nodes().size() == vocab.nodes().size());
  CHECK(loaded.branching() == vocab.branching());
  CHECK(loaded.depth() == vocab.depth());
  CHECK(loaded.wordCount() == vocab.wordCount());
  for (std::size_t i = 0; i < vocab.nodes().size(); ++i) {
    CHECK(loaded.nodes()[i].parent == vocab.nodes()[i].parent);
    CHECK(loaded.nodes()[i].is_leaf == vocab.nodes()[i].is_leaf);
    CHECK(loaded.nodes()[i].word_id == vocab.nodes()[i].word_id);
    CHECK(loaded.nodes()[i].weight == vocab.nodes()[i].weight);
    CHECK(loaded.nodes()[i].center == vocab.nodes()[i].center);
  }

  // Transform agrees bitwise on both instances.
  BowVector original, reloaded;
  std::vector<Descriptor> image(corpus.descriptors.begin(),
                                corpus.descriptors.begin() + 40);
  vocab.transform(image, &original);
  loaded.transform(image, &reloaded);
  CHECK(original == reloaded);
}

TEST_CASE("vocabulary load rejects corrupt files") {
  const auto path =
      std::filesystem::temp_directory_path() / "hyslam_vocab_bad.bin";
  {
    std::ofstream out(path, std::ios::binary);
    out.write("NOPE", 4);
  }
  CHECK_THROWS_AS(Vocabulary::load(path.string()), ParseError);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(Vocabulary::load((path / "missing").string()), ParseError);
}

TEST_CASE("keyframe database retrieval, exclusion, and removal") {
  const PlantedCorpus corpus(8, 40, 7);
  const Vocabulary vocab = Vocabulary::train(corpus.descriptors, 8, 1, 11);

  // The scenario below assumes each planted cluster owns its own word.
  std::set<WordId> words;
  for (const Descriptor& d : corpus.descriptors) {
    WordId word = 0;
    vocab.quantize(d, &word, nullptr);
    words.insert(word);
  }
  REQUIRE(words.size() == 8);

  // Keyframe i sees clusters {i, i+1 mod 8}: neighbors share half their
  // words, opposite keyframes share none.
  std::vector<BowVector> bows(8);
  KeyFrameDatabase database;
  CHECK(database.empty());
  for (int i = 0; i < 8; ++i) {
    std::vector<Descriptor> image;
    for (int j = 0; j < 20; ++j) {
      image.push_back(corpus.descriptors[i * 40 + j]);
      image.push_back(corpus.descriptors[((i + 1) % 8) * 40 + j]);
    }
    vocab.transform(image, &bows[i]);
    database.add(static_cast<Id>(i), bows[i]);
  }
  CHECK(!database.empty());

  auto hits = database.query(bows[0], {});
  REQUIRE(!hits.empty());
  CHECK(hits.front().keyframe == 0);
  CHECK(hits.front().score == doctest::Approx(1.0).epsilon(1e-9));
  // Neighbors 1 and 7 share a cluster; keyframe 4 shares nothing.
  std::set<Id> returned;
  for (const auto& hit : hits) returned.insert(hit.keyframe);
  CHECK(returned.count(1) == 1);
  CHECK(returned.count(7) == 1);
  CHECK(returned.count(4) == 0);

  // Excluding the covisible group removes it from the ranking.
  hits = database.query(bows[0], {0, 1, 7});
  for (const auto& hit : hits) {
    CHECK(hit.keyframe != 0);
    CHECK(hit.keyframe != 1);
    CHECK(hit.keyframe != 7);
  }

  // A minimum score keeps only strong candidates.
  hits = database.query(bows[0], {}, 0.9);
  REQUIRE(hits.size() == 1);
  CHECK(hits.front().keyframe == 0);

  database.remove(0);
  hits = database.query(bows[0], {});
  for (const auto& hit : hits) CHECK(hit.keyframe != 0);
}
