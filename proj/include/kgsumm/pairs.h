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

#ifndef KGSUMM_PAIRS_H_
#define KGSUMM_PAIRS_H_

// Self-supervised training pairs: a random aspect subset's subgraph paired
// with the sentences its triplets were extracted from.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "kgsumm/aspect_miner.h"
#include "kgsumm/corpus.h"
#include "kgsumm/kg.h"

namespace kgsumm {

struct SentenceRef {
  std::string review_id;
  int ordinal = 0;
  std::string text;
};

// sentence_id -> (review, ordinal, text) over any number of corpora.
class SentenceIndex {
 public:
  SentenceIndex() = default;
  explicit SentenceIndex(const std::vector<ProductCorpus>& corpora);
  void Add(const ProductCorpus& corpus);
  const SentenceRef* Find(const std::string& sentence_id) const;
  std::size_t size() const { return refs_.size(); }

 private:
  std::unordered_map<std::string, SentenceRef> refs_;
};

struct TrainingPair {
  std::string pair_id;
  std::string product_id;
  SubKG graph;
  std::vector<std::string> aspect_labels;  // sorted
  std::vector<std::string> aspect_ids;     // aligned with aspect_labels
  std::string pseudo_summary;
  std::vector<std::string> provenance;  // (review_id, ordinal) order
};

struct PairBuildConfig {
  int samples_per_product = 8;
  int k_min = 1;
  int k_max = 0;  // 0 = number of aspects
  double wc_train = 0.0;
  std::uint64_t seed = 13;
};

struct PairBuildReport {
  int clamped = 0;
  int duplicate_draws = 0;
  std::vector<std::string> warnings;
};

// Pair for an explicit aspect selection.
TrainingPair MakePair(const WeightedKG& kg, const std::vector<std::string>& aspect_ids,
                      const SentenceIndex& sentences, double wc);

// Draws up to samples_per_product distinct aspect combinations; sorted by
// pair_id.
std::vector<TrainingPair> BuildPairs(const WeightedKG& kg, const AspectSet& aspect_set,
                                     const SentenceIndex& sentences,
                                     const PairBuildConfig& config,
                                     PairBuildReport* report = nullptr);

struct PairSplits {
  std::vector<TrainingPair> train;
  std::vector<TrainingPair> valid;
  std::vector<TrainingPair> test;
};

// Splits by product so no product spans two splits. Ratios must sum to 1.
PairSplits SplitPairs(const std::vector<TrainingPair>& pairs,
                      const std::array<double, 3>& ratios, std::uint64_t seed);

nlohmann::json PairToJson(const TrainingPair& pair);
TrainingPair PairFromJson(const nlohmann::json& j);
void WritePairs(const std::filesystem::path& path, const std::vector<TrainingPair>& pairs);
std::vector<TrainingPair> ReadPairs(const std::filesystem::path& path);

}  // namespace kgsumm

#endif  // KGSUMM_PAIRS_H_
