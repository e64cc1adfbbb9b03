// Copyright 2026 The kgsumm Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef KGSUMM_TESTS_FIXTURES_H_
#define KGSUMM_TESTS_FIXTURES_H_

// Synthetic review corpora and pipeline helpers shared by the tests.

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "kgsumm/aspect_miner.h"
#include "kgsumm/corpus.h"
#include "kgsumm/kg.h"
#include "kgsumm/model.h"
#include "kgsumm/pairs.h"

namespace kgsumm::testing {

struct AspectSpec {
  std::string noun;
  std::vector<std::string> adjectives;
};

// room, staff, breakfast, location, pool.
const std::vector<AspectSpec>& HotelAspects();

// "The <noun> was <adj>." or the coordinated two-adjective form.
std::string AspectSentence(const AspectSpec& aspect, const std::string& adj,
                           const std::string& second_adj = "");

// products x reviews of 3-4 aspect sentences each; every review is well over
// 100 characters and every product draws from all five aspects.
std::vector<RawRecord> SyntheticRecords(int products, int reviews_per_product,
                                        std::uint64_t seed, Source source = Source::kAmazon);

// Hashed bag-of-tokens embedding with uniform attention: deterministic and
// untrained, so mining depends only on the text.
class BagEncoder : public SentenceEncoder {
 public:
  explicit BagEncoder(int dim = 64) : dim_(dim) {}
  SentenceEncoding Encode(const Sentence& sentence,
                          const std::vector<std::string>& tokens) const override;

 private:
  int dim_;
};

struct Pipeline {
  std::vector<ProductCorpus> corpora;
  std::vector<AspectSet> aspects;
  std::vector<WeightedKG> graphs;
  SentenceIndex index;
};

Pipeline BuildPipeline(const std::vector<RawRecord>& records, const MinerConfig& config = {});

// Small model shapes for fast tests.
ModelConfig TinyModelConfig(int d_model = 16);

struct GradientCheck {
  int checked = 0;
  double max_rel_error = 0.0;
  std::string worst;
  std::vector<double> rel_errors;
};

// Central differences on `samples` loss-reached parameter entries; relative
// error is |a - n| / max(|a|, |n|, 1e-8).
GradientCheck CheckModelGradients(Model& model, const ModelInput& input,
                                  const std::vector<int>& target, int samples,
                                  std::uint64_t seed, double eps = 1e-4);

// Product whose graph is assembled from explicit (attribute, mentions)
// counts per aspect; one single-sentence review per mention, ids in argument order.
struct HandProduct {
  ProductCorpus corpus;
  AspectSet aspects;
  WeightedKG graph;
};
HandProduct MakeHandProduct(
    const std::string& product_id,
    const std::vector<std::pair<std::string, std::vector<std::pair<std::string, int>>>>& counts);

// Store layout (corpus/, aspects/, kg/) with three synthetic hotels plus
// "weighted" (location 0.6/0.3/0.1, room 1.0, staff 0.75/0.25) and "uniform"
// (room 0.5/0.5, pool 4 x 0.25).
struct FixtureStore {
  Pipeline pipeline;
  HandProduct weighted;
  HandProduct uniform;
  std::vector<ProductCorpus> corpora;
  std::vector<WeightedKG> graphs;
};
FixtureStore WriteFixtureStore(const std::filesystem::path& dir);

// Graph with random aspect/attribute counts and proportion weights.
WeightedKG RandomGraph(std::uint64_t seed, int max_aspects = 5, int max_attributes = 6);

// Standard-normal entries times `scale`.
Matrix RandomMatrix(int rows, int cols, std::mt19937_64& rng, double scale = 1.0);

// Symmetric random graph with self-loops and node 0 as the global node.
GraphTensor RandomGraphTensor(int n, int d, std::mt19937_64& rng);

// Direct per-node masked softmax oracle for one attention layer.
GatOutput DenseGat(const GraphTensor& g, const GatParams& p);

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace kgsumm::testing

#endif  // KGSUMM_TESTS_FIXTURES_H_
