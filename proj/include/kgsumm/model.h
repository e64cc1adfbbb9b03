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

#ifndef KGSUMM_MODEL_H_
#define KGSUMM_MODEL_H_

// Graph-conditioned summarizer: a transformer text encoder over aspect
// labels, a GAT encoder over the cast subgraph read out at the global node,
// and a causal decoder that fuses the graph embedding into every position
// before cross-attending to the aspect text.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kgsumm/aspect_miner.h"
#include "kgsumm/autograd.h"
#include "kgsumm/kg.h"
#include "kgsumm/matrix.h"
#include "json.hpp"

namespace kgsumm {

class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;

  Vocab();  // specials only
  // Every token of every text, in first-seen order after the specials.
  static Vocab Build(const std::vector<std::string>& texts);
  static Vocab FromTokens(const std::vector<std::string>& tokens);

  int Add(const std::string& token);
  int Id(const std::string& token) const;  // kUnk when absent
  bool Contains(const std::string& token) const { return ids_.count(token) > 0; }
  const std::string& Token(int id) const;
  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::vector<int> Encode(std::string_view text) const;
  std::vector<int> EncodeTokens(const std::vector<std::string>& tokens) const;
  // Stops at eos; drops pad/bos.
  std::string Decode(const std::vector<int>& ids) const;

  friend bool operator==(const Vocab& a, const Vocab& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

struct ModelConfig {
  int d_model = 128;
  int heads = 4;
  int ffn_dim = 256;
  int text_layers = 1;
  int gat_layers = 2;
  int decoder_layers = 2;
  int max_len = 256;
  double leaky_slope = 0.2;
  std::uint64_t seed = 13;

  void Validate() const;  // throws ConfigError
  nlohmann::json ToJson() const;
  static ModelConfig FromJson(const nlohmann::json& j);
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct GraphTensor {
  Matrix node_features;                 // N x d
  std::vector<std::uint8_t> adjacency;  // row-major N x N
  int global_index = 0;

  int size() const { return node_features.rows(); }
  // Symmetric, self-loops everywhere, global row all true.
  void Validate() const;
};

struct GatParams {
  Matrix w;  // d x d
  Matrix a;  // d x 2; column 0 scores the receiving node, column 1 the neighbour
  double leaky_slope = 0.2;
};

struct CrossAttnParams {
  Matrix w_q;  // d x d; head h owns columns [h*d_k, (h+1)*d_k)
  Matrix w_k;
  Matrix w_v;
  int heads = 1;
};

// Tape-level building blocks shared by the model and the standalone entry
// points below.
namespace ops {

struct GatVars {
  Var out;
  Var alpha;
};
GatVars GatLayer(Tape& t, Var h, const std::vector<std::uint8_t>& adjacency, Var w,
                 Var a, double leaky_slope);

// Queries from `queries`, keys and values from `keys`; heads concatenated
// without an output projection. Per-head attention is appended to `attention`
// when non-null.
Var MultiHeadAttention(Tape& t, Var queries, Var keys, Var wq, Var wk, Var wv,
                       int heads, bool causal, std::vector<Var>* attention = nullptr);

Matrix PositionalEncoding(int rows, int d);

}  // namespace ops

struct GatOutput {
  Matrix features;
  Matrix attention;
};
GatOutput GatLayer(const GraphTensor& g, const GatParams& p);
// Stacked layers; returns the 1 x d global-node row.
Matrix EncodeGraph(const GraphTensor& g, const std::vector<GatParams>& layers);

struct CrossAttnOutput {
  Matrix output;                  // queries.rows() x d
  std::vector<Matrix> attention;  // one queries x keys matrix per head
};
CrossAttnOutput CrossAttention(const Matrix& queries, const Matrix& text_hidden,
                               const CrossAttnParams& p);

struct ModelInput {
  GraphInput graph;
  std::vector<int> aspect_tokens;
};

enum class DecodeMode { kGreedy, kBeam };

struct GenerateOptions {
  int max_len = 256;
  DecodeMode mode = DecodeMode::kGreedy;
  int beam_size = 4;
  double length_penalty = 1.0;  // scores are logprob / length^penalty
};

class Model {
 public:
  Model(const ModelConfig& config, Vocab vocab);

  const ModelConfig& config() const { return config_; }
  const Vocab& vocab() const { return vocab_; }
  ParameterStore& params() { return params_; }
  const ParameterStore& params() const { return params_; }

  // Throws EmptyGraphError("nothing to encode") for an empty subgraph.
  ModelInput Prepare(const SubKG& sub, const std::vector<std::string>& aspect_labels) const;
  // At most max_len ids, cut at a sentence boundary when one fits.
  std::vector<int> TargetIds(std::string_view summary) const;

  Matrix EncodeText(const std::vector<int>& tokens, Matrix* attention = nullptr) const;
  GraphTensor EmbedGraph(const GraphInput& graph) const;
  std::vector<GatParams> GatLayers() const;
  Matrix EncodeGraph(const GraphInput& graph) const;

  // Teacher-forced logits for decoder input [bos] + prefix.
  Matrix Logits(const ModelInput& input, const std::vector<int>& prefix) const;
  // Mean token cross-entropy of target + eos.
  Var Loss(Tape& t, const ModelInput& input, const std::vector<int>& target) const;
  double LossValue(const ModelInput& input, const std::vector<int>& target) const;

  // Decoded ids without bos/eos.
  std::vector<int> Generate(const ModelInput& input, const GenerateOptions& options) const;
  std::string GenerateText(const ModelInput& input, const GenerateOptions& options) const;

  nlohmann::json ToJson() const;
  static Model FromJson(const nlohmann::json& j);
  void Save(const std::filesystem::path& path) const;
  static Model Load(const std::filesystem::path& path);

 private:
  Var TokenEmbed(Tape& t, const std::vector<int>& ids) const;
  Var EncodeTextVar(Tape& t, const std::vector<int>& tokens, Var* attention) const;
  Var EncodeGraphVar(Tape& t, const GraphInput& graph) const;
  Var DecodeVar(Tape& t, Var graph, Var text, const std::vector<int>& decoder_ids) const;
  Var P(Tape& t, const std::string& name) const { return t.Leaf(params_.Get(name)); }

  struct Beam;
  struct DecoderCache;
  DecoderCache StartDecoding(const ModelInput& input) const;
  std::vector<double> Step(DecoderCache& cache, int token) const;

  ModelConfig config_;
  Vocab vocab_;
  ParameterStore params_;
};

// Text-encoder view of a model: mean-pooled hidden states plus the final
// layer's head-averaged self-attention.
class NeuralSentenceEncoder : public SentenceEncoder {
 public:
  explicit NeuralSentenceEncoder(const Model& model) : model_(model) {}
  SentenceEncoding Encode(const Sentence& sentence,
                          const std::vector<std::string>& tokens) const override;

 private:
  const Model& model_;
};

}  // namespace kgsumm

#endif  // KGSUMM_MODEL_H_
