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

#ifndef KGSUMM_ASPECT_MINER_H_
#define KGSUMM_ASPECT_MINER_H_

// Per-product aspect discovery: noun chunks per sentence, the chunk the
// sentence attends to most, merging of similar chunks, and centroid
// clustering of sentence embeddings with one cluster per merged chunk group.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kgsumm/corpus.h"
#include "kgsumm/matrix.h"
#include "kgsumm/nlp.h"

namespace kgsumm {

struct NounChunk {
  std::string text;        // lowercased, head lemmatized: "great view"
  std::string core;        // nominal part only: "view"
  std::string head_token;  // lemma of the head noun
  std::string sentence_id;
  int start = 0;  // token span [start, end)
  int end = 0;

  const std::string& key() const { return core.empty() ? text : core; }
};

struct SentenceEncoding {
  std::string sentence_id;
  std::vector<double> embedding;
  Matrix attention;  // tokens x tokens, row-stochastic
};

// Maps a tokenized sentence to an embedding plus a self-attention matrix over
// exactly those tokens.
class SentenceEncoder {
 public:
  virtual ~SentenceEncoder() = default;
  virtual SentenceEncoding Encode(const Sentence& sentence,
                                  const std::vector<std::string>& tokens) const = 0;
};

class ChunkEmbedder {
 public:
  virtual ~ChunkEmbedder() = default;
  virtual std::vector<double> Embed(std::string_view text) const = 0;
};

// Hashed character-trigram bag, L2-normalized. Surface-similar chunks land
// close together without any trained model.
class CharTrigramEmbedder : public ChunkEmbedder {
 public:
  explicit CharTrigramEmbedder(int dim = 512) : dim_(dim) {}
  std::vector<double> Embed(std::string_view text) const override;

 private:
  int dim_;
};

struct ChunkGroup {
  std::string label;                  // most frequent member key
  std::vector<NounChunk> members;
  std::vector<std::string> variants;  // distinct member texts and keys, sorted
};

struct AspectCluster {
  std::string aspect_id;
  std::string label;
  std::vector<std::string> sentence_ids;  // corpus order
  std::vector<std::string> variants;
  std::vector<double> centroid;

  friend bool operator==(const AspectCluster&, const AspectCluster&) = default;
};

struct AspectSet {
  std::string product_id;
  std::vector<AspectCluster> aspects;  // sorted by label
  int k = 0;            // == aspects.size()
  int requested_k = 0;  // merged chunk group count before clamping/merging
  std::vector<std::string> warnings;

  friend bool operator==(const AspectSet& a, const AspectSet& b) {
    return a.product_id == b.product_id && a.aspects == b.aspects && a.k == b.k &&
           a.requested_k == b.requested_k;
  }
  const AspectCluster* FindByLabel(std::string_view label) const;
  const AspectCluster* FindById(std::string_view id) const;
};

struct MinerConfig {
  double merge_threshold = 0.8;
  std::uint64_t seed = 13;
  int min_support = 2;
  int max_iterations = 100;
  int restarts = 10;
};

// Maximal noun phrases without determiners or pronouns.
std::vector<NounChunk> ExtractNounChunks(const Sentence& sentence,
                                         const nlp::DependencyParse& parse);

// The chunk with the highest per-token attention mass received (column sums
// of the attention matrix averaged over the chunk span); earliest span wins
// ties. nullopt when there is no chunk.
std::optional<NounChunk> CentralChunk(const Sentence& sentence,
                                      const SentenceEncoding& encoding,
                                      const std::vector<NounChunk>& chunks);

// Single-link grouping: chunks whose key embeddings have cosine similarity
// >= threshold end up in one group. Groups are ordered by label.
std::vector<ChunkGroup> MergeChunks(const std::vector<NounChunk>& chunks,
                                    double threshold,
                                    const ChunkEmbedder& embedder);

// Centroid clustering with k-means++ seeding; the lowest-inertia run of
// `restarts` draws from one seeded generator wins. Returns the cluster index
// of every row of `points`.
std::vector<int> ClusterEmbeddings(const Matrix& points, int k, std::uint64_t seed,
                                   int max_iterations, Matrix* centroids, int restarts = 10);

AspectSet MineAspects(const ProductCorpus& corpus, const SentenceEncoder& encoder,
                      const MinerConfig& config = {},
                      const ChunkEmbedder* embedder = nullptr);

std::string AspectIdFor(std::string_view product_id, std::string_view label);

std::string AspectSetToJsonLines(const AspectSet& set);
AspectSet AspectSetFromJsonLines(std::string_view product_id,
                                 const std::vector<std::string>& lines);
void WriteAspectSets(const std::filesystem::path& dir,
                     const std::vector<AspectSet>& sets);
// Keyed by product id.
std::vector<AspectSet> ReadAspectSets(const std::filesystem::path& dir);

}  // namespace kgsumm

#endif  // KGSUMM_ASPECT_MINER_H_
