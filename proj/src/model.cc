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

#include "kgsumm/model.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "kgsumm/errors.h"
#include "kgsumm/kernels.h"
#include "kgsumm/text.h"

namespace kgsumm {

using nlohmann::json;

namespace {

constexpr std::string_view kCheckpointFormat = "kgsumm-checkpoint";
constexpr int kCheckpointVersion = 1;
constexpr int kNodeKinds = 4;

std::string L(const char* prefix, int layer, const char* name) {
  return std::string(prefix) + "." + std::to_string(layer) + "." + name;
}

// Row-vector helpers for incremental decoding. They mirror the tape ops
// exactly; model_test compares the two paths.
Matrix RowTimes(const Matrix& x, const Matrix& w) {
  Matrix out;
  kernels::MatMul(x, w, &out);
  return out;
}

void AddInPlace(Matrix* x, const Matrix& y) {
  for (std::size_t i = 0; i < x->size(); ++i) x->data()[i] += y.data()[i];
}

Matrix LayerNormRow(const Matrix& x, const Matrix& g, const Matrix& b) {
  constexpr double kEps = 1e-5;
  const int n = x.cols();
  Matrix out(1, n);
  double mean = 0.0;
  for (int j = 0; j < n; ++j) mean += x(0, j);
  mean /= n;
  double var = 0.0;
  for (int j = 0; j < n; ++j) var += (x(0, j) - mean) * (x(0, j) - mean);
  var /= n;
  const double inv_std = 1.0 / std::sqrt(var + kEps);
  for (int j = 0; j < n; ++j) out(0, j) = (x(0, j) - mean) * inv_std * g(0, j) + b(0, j);
  return out;
}

double GeluValue(double x) {
  constexpr double kC = 0.7978845608028654;
  return 0.5 * x * (1.0 + std::tanh(kC * (x + 0.044715 * x * x * x)));
}

// One query row against `count` key/value rows stored row-major with width d.
Matrix AttendRow(const Matrix& q, const double* keys, const double* values, int count,
                 int heads) {
  const int d = q.cols();
  const int dk = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
  Matrix out(1, d);
  std::vector<double> w(count);
  for (int h = 0; h < heads; ++h) {
    const int off = h * dk;
    Matrix scores(1, count);
    for (int j = 0; j < count; ++j) {
      double s = 0.0;
      for (int c = 0; c < dk; ++c) s += q(0, off + c) * keys[static_cast<std::size_t>(j) * d + off + c];
      scores(0, j) = s * scale;
    }
    Matrix probs;
    kernels::SoftmaxRows(scores, {}, &probs);
    for (int c = 0; c < dk; ++c) {
      double s = 0.0;
      for (int j = 0; j < count; ++j) {
        s += probs(0, j) * values[static_cast<std::size_t>(j) * d + off + c];
      }
      out(0, off + c) = s;
    }
  }
  return out;
}

std::vector<double> LogSoftmax(const Matrix& logits) {
  const int n = logits.cols();
  double mx = logits(0, 0);
  for (int j = 1; j < n; ++j) mx = std::max(mx, logits(0, j));
  double sum = 0.0;
  for (int j = 0; j < n; ++j) sum += std::exp(logits(0, j) - mx);
  const double lse = mx + std::log(sum);
  std::vector<double> out(n);
  for (int j = 0; j < n; ++j) out[j] = logits(0, j) - lse;
  return out;
}

Matrix MeanRows(const Matrix& m) {
  Matrix out(1, m.cols());
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) out(0, j) += m(i, j);
  }
  for (int j = 0; j < m.cols(); ++j) out(0, j) /= std::max(1, m.rows());
  return out;
}

json MatrixToJson(const Matrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.values()}};
}

}  // namespace

// ---------------------------------------------------------------------------
// Vocab

Vocab::Vocab() {
  for (const char* s : {"<pad>", "<bos>", "<eos>", "<unk>"}) Add(s);
}

Vocab Vocab::Build(const std::vector<std::string>& texts) {
  Vocab v;
  for (const std::string& t : texts) {
    for (const std::string& tok : text::Tokenize(t)) v.Add(tok);
  }
  return v;
}

Vocab Vocab::FromTokens(const std::vector<std::string>& tokens) {
  if (tokens.size() < 4 || tokens[kPad] != "<pad>" || tokens[kBos] != "<bos>" ||
      tokens[kEos] != "<eos>" || tokens[kUnk] != "<unk>") {
    throw IoError("vocabulary does not start with the special tokens");
  }
  Vocab v;
  for (std::size_t i = 4; i < tokens.size(); ++i) {
    if (v.Contains(tokens[i])) throw IoError("duplicate vocabulary token " + tokens[i]);
    v.Add(tokens[i]);
  }
  return v;
}

int Vocab::Add(const std::string& token) {
  auto [it, inserted] = ids_.emplace(token, size());
  if (inserted) tokens_.push_back(token);
  return it->second;
}

int Vocab::Id(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? kUnk : it->second;
}

const std::string& Vocab::Token(int id) const {
  if (id < 0 || id >= size()) throw std::out_of_range("token id " + std::to_string(id));
  return tokens_[id];
}

std::vector<int> Vocab::Encode(std::string_view text) const {
  return EncodeTokens(text::Tokenize(text));
}

std::vector<int> Vocab::EncodeTokens(const std::vector<std::string>& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const std::string& t : tokens) ids.push_back(Id(t));
  return ids;
}

std::string Vocab::Decode(const std::vector<int>& ids) const {
  std::vector<std::string> out;
  for (int id : ids) {
    if (id == kEos) break;
    if (id == kPad || id == kBos) continue;
    out.push_back(Token(id));
  }
  return text::Detokenize(out);
}

// ---------------------------------------------------------------------------
// Config and graph tensors

void ModelConfig::Validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("model config: " + m); };
  if (d_model <= 0 || heads <= 0 || ffn_dim <= 0) fail("sizes must be positive");
  if (d_model % heads != 0) fail("heads must divide d_model");
  if (text_layers < 1 || gat_layers < 1 || decoder_layers < 1) fail("need at least one layer each");
  if (max_len < 1) fail("max_len must be positive");
  if (!(leaky_slope >= 0.0 && leaky_slope < 1.0)) fail("leaky_slope must be in [0, 1)");
}

json ModelConfig::ToJson() const {
  return {{"d_model", d_model},         {"heads", heads},
          {"ffn_dim", ffn_dim},         {"text_layers", text_layers},
          {"gat_layers", gat_layers},   {"decoder_layers", decoder_layers},
          {"max_len", max_len},         {"leaky_slope", leaky_slope},
          {"seed", seed}};
}

ModelConfig ModelConfig::FromJson(const json& j) {
  ModelConfig c;
  try {
    c.d_model = j.value("d_model", c.d_model);
    c.heads = j.value("heads", c.heads);
    c.ffn_dim = j.value("ffn_dim", c.ffn_dim);
    c.text_layers = j.value("text_layers", c.text_layers);
    c.gat_layers = j.value("gat_layers", c.gat_layers);
    c.decoder_layers = j.value("decoder_layers", c.decoder_layers);
    c.max_len = j.value("max_len", c.max_len);
    c.leaky_slope = j.value("leaky_slope", c.leaky_slope);
    c.seed = j.value("seed", c.seed);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  c.Validate();
  return c;
}

void GraphTensor::Validate() const {
  const int n = size();
  if (n == 0) throw EmptyGraphError("nothing to encode");
  if (adjacency.size() != static_cast<std::size_t>(n) * n) {
    throw std::invalid_argument("adjacency is not " + std::to_string(n) + " x " +
                                std::to_string(n));
  }
  if (global_index < 0 || global_index >= n) throw std::out_of_range("global_index");
  auto at = [&](int i, int j) { return adjacency[static_cast<std::size_t>(i) * n + j]; };
  for (int i = 0; i < n; ++i) {
    if (!at(i, i)) throw std::invalid_argument("node " + std::to_string(i) + " lacks a self-loop");
    if (!at(global_index, i)) throw std::invalid_argument("global node misses a neighbour");
    for (int j = 0; j < i; ++j) {
      if (at(i, j) != at(j, i)) throw std::invalid_argument("adjacency is not symmetric");
    }
  }
}

// ---------------------------------------------------------------------------
// Tape-level ops

namespace ops {

GatVars GatLayer(Tape& t, Var h, const std::vector<std::uint8_t>& adjacency, Var w,
                 Var a, double leaky_slope) {
  const int d = t.value(h).cols();
  if (t.value(w).rows() != d || t.value(a).rows() != t.value(w).cols() ||
      t.value(a).cols() != 2) {
    throw std::invalid_argument("GAT parameter shapes do not match features " +
                                t.value(h).ShapeString());
  }
  Var z = t.MatMul(h, w);
  Var s = t.MatMul(z, a);
  Var beta = t.LeakyRelu(t.OuterSum(t.SliceCols(s, 0, 1), t.SliceCols(s, 1, 1)),
                         leaky_slope);
  Var alpha = t.Softmax(beta, adjacency, false);
  return {t.Elu(t.MatMul(alpha, z)), alpha};
}

Var MultiHeadAttention(Tape& t, Var queries, Var keys, Var wq, Var wk, Var wv, int heads,
                       bool causal, std::vector<Var>* attention) {
  const int d = t.value(wq).cols();
  if (heads <= 0 || d % heads != 0) {
    throw std::invalid_argument("heads must divide the projection width");
  }
  if (t.value(wk).cols() != d || t.value(wv).cols() != d) {
    throw std::invalid_argument("attention projections differ in width");
  }
  const int dk = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
  Var q = t.MatMul(queries, wq);
  Var k = t.MatMul(keys, wk);
  Var v = t.MatMul(keys, wv);
  std::vector<Var> outs;
  for (int h = 0; h < heads; ++h) {
    Var qh = t.SliceCols(q, h * dk, dk);
    Var kh = t.SliceCols(k, h * dk, dk);
    Var vh = t.SliceCols(v, h * dk, dk);
    Var p = t.Softmax(t.Scale(t.MatMulTransB(qh, kh), scale), {}, causal);
    if (attention) attention->push_back(p);
    outs.push_back(t.MatMul(p, vh));
  }
  return heads == 1 ? outs.front() : t.ConcatCols(outs);
}

Matrix PositionalEncoding(int rows, int d) {
  Matrix pe(rows, d);
  for (int pos = 0; pos < rows; ++pos) {
    for (int i = 0; i < d; i += 2) {
      const double angle = pos / std::pow(10000.0, static_cast<double>(i) / d);
      pe(pos, i) = std::sin(angle);
      if (i + 1 < d) pe(pos, i + 1) = std::cos(angle);
    }
  }
  return pe;
}

}  // namespace ops

GatOutput GatLayer(const GraphTensor& g, const GatParams& p) {
  g.Validate();
  Tape t(false);
  Var h = t.Constant(g.node_features);
  ops::GatVars out = ops::GatLayer(t, h, g.adjacency, t.Constant(p.w), t.Constant(p.a),
                                   p.leaky_slope);
  return {t.value(out.out), t.value(out.alpha)};
}

Matrix EncodeGraph(const GraphTensor& g, const std::vector<GatParams>& layers) {
  g.Validate();
  Tape t(false);
  Var h = t.Constant(g.node_features);
  for (const GatParams& p : layers) {
    h = ops::GatLayer(t, h, g.adjacency, t.Constant(p.w), t.Constant(p.a), p.leaky_slope).out;
  }
  return t.value(t.SelectRow(h, g.global_index));
}

CrossAttnOutput CrossAttention(const Matrix& queries, const Matrix& text_hidden,
                               const CrossAttnParams& p) {
  if (queries.cols() != p.w_q.rows() || text_hidden.cols() != p.w_k.rows() ||
      text_hidden.cols() != p.w_v.rows()) {
    throw std::invalid_argument("cross-attention input width does not match projections");
  }
  Tape t(false);
  std::vector<Var> attn;
  Var out = ops::MultiHeadAttention(t, t.Constant(queries), t.Constant(text_hidden),
                                    t.Constant(p.w_q), t.Constant(p.w_k),
                                    t.Constant(p.w_v), p.heads, false, &attn);
  CrossAttnOutput result{t.value(out), {}};
  for (Var a : attn) result.attention.push_back(t.value(a));
  return result;
}

// ---------------------------------------------------------------------------
// Model

Model::Model(const ModelConfig& config, Vocab vocab)
    : config_(config), vocab_(std::move(vocab)) {
  config_.Validate();
  const int d = config_.d_model;
  const int f = config_.ffn_dim;
  const int v = vocab_.size();
  std::mt19937_64 rng(config_.seed);
  auto normal = [&](int rows, int cols, double std) {
    std::normal_distribution<double> dist(0.0, std);
    Matrix m(rows, cols);
    for (double& x : m.data()) x = dist(rng);
    return m;
  };
  auto linear = [&](const std::string& name, int in, int out) {
    params_.Add(name, normal(in, out, 1.0 / std::sqrt(static_cast<double>(in))));
  };
  auto norm = [&](const std::string& name) {
    params_.Add(name + ".g", Matrix(1, d, 1.0));
    params_.Add(name + ".b", Matrix(1, d, 0.0));
  };
  auto ffn = [&](const std::string& prefix) {
    linear(prefix + ".ff1.w", d, f);
    params_.Add(prefix + ".ff1.b", Matrix(1, f));
    linear(prefix + ".ff2.w", f, d);
    params_.Add(prefix + ".ff2.b", Matrix(1, d));
  };

  params_.Add("tok_emb", normal(v, d, 1.0));
  params_.Add("type_emb", normal(kNodeKinds, d, 1.0));
  for (int l = 0; l < config_.text_layers; ++l) {
    norm(L("text", l, "ln1"));
    for (const char* w : {"attn.wq", "attn.wk", "attn.wv", "attn.wo"}) linear(L("text", l, w), d, d);
    norm(L("text", l, "ln2"));
    ffn(L("text", l, "ffn"));
  }
  norm("text.lnf");
  linear("graph.w_in", d + 1, d);
  for (int l = 0; l < config_.gat_layers; ++l) {
    linear(L("graph", l, "w"), d, d);
    linear(L("graph", l, "a"), d, 2);
  }
  for (int l = 0; l < config_.decoder_layers; ++l) {
    norm(L("dec", l, "ln1"));
    for (const char* w : {"self.wq", "self.wk", "self.wv", "self.wo"}) linear(L("dec", l, w), d, d);
    norm(L("dec", l, "ln2"));
    for (const char* w : {"cross.wq", "cross.wk", "cross.wv"}) linear(L("dec", l, w), d, d);
    norm(L("dec", l, "ln3"));
    ffn(L("dec", l, "ffn"));
  }
  norm("dec.lnf");
  linear("out.w", d, v);
  params_.Add("out.b", Matrix(1, v));
}

ModelInput Model::Prepare(const SubKG& sub, const std::vector<std::string>& aspect_labels) const {
  if (sub.Empty()) throw EmptyGraphError("nothing to encode");
  ModelInput in;
  in.graph = CastEdgesToNodes(sub);
  for (const std::string& label : aspect_labels) {
    for (int id : vocab_.Encode(label)) in.aspect_tokens.push_back(id);
  }
  return in;
}

std::vector<int> Model::TargetIds(std::string_view summary) const {
  const std::vector<std::string> tokens = text::Tokenize(summary);
  std::size_t keep = tokens.size();
  if (static_cast<int>(keep) > config_.max_len) {
    // Cut after the last sentence terminator that fits; a first sentence
    // longer than max_len is cut mid-sentence.
    keep = config_.max_len;
    for (std::size_t i = config_.max_len; i > 0; --i) {
      const std::string& t = tokens[i - 1];
      if (t == "." || t == "!" || t == "?") {
        keep = i;
        break;
      }
    }
  }
  return vocab_.EncodeTokens({tokens.begin(), tokens.begin() + keep});
}

Var Model::TokenEmbed(Tape& t, const std::vector<int>& ids) const {
  std::vector<std::vector<int>> rows;
  rows.reserve(ids.size());
  for (int id : ids) rows.push_back({id});
  Var x = t.GatherMean(P(t, "tok_emb"), rows);
  return t.Add(x, t.Constant(ops::PositionalEncoding(static_cast<int>(ids.size()),
                                                     config_.d_model)));
}

Var Model::EncodeTextVar(Tape& t, const std::vector<int>& tokens, Var* attention) const {
  const std::vector<int> ids = tokens.empty() ? std::vector<int>{Vocab::kBos} : tokens;
  Var x = TokenEmbed(t, ids);
  for (int l = 0; l < config_.text_layers; ++l) {
    Var h = t.LayerNorm(x, P(t, L("text", l, "ln1.g")), P(t, L("text", l, "ln1.b")));
    std::vector<Var> heads;
    Var a = ops::MultiHeadAttention(t, h, h, P(t, L("text", l, "attn.wq")),
                                    P(t, L("text", l, "attn.wk")),
                                    P(t, L("text", l, "attn.wv")), config_.heads, false,
                                    &heads);
    x = t.Add(x, t.MatMul(a, P(t, L("text", l, "attn.wo"))));
    Var h2 = t.LayerNorm(x, P(t, L("text", l, "ln2.g")), P(t, L("text", l, "ln2.b")));
    Var ff = t.Gelu(t.AddRow(t.MatMul(h2, P(t, L("text", l, "ffn.ff1.w"))),
                             P(t, L("text", l, "ffn.ff1.b"))));
    x = t.Add(x, t.AddRow(t.MatMul(ff, P(t, L("text", l, "ffn.ff2.w"))),
                          P(t, L("text", l, "ffn.ff2.b"))));
    if (attention && l == config_.text_layers - 1) {
      Var sum = heads.front();
      for (std::size_t i = 1; i < heads.size(); ++i) sum = t.Add(sum, heads[i]);
      *attention = t.Scale(sum, 1.0 / static_cast<double>(heads.size()));
    }
  }
  return t.LayerNorm(x, P(t, "text.lnf.g"), P(t, "text.lnf.b"));
}

Var Model::EncodeGraphVar(Tape& t, const GraphInput& graph) const {
  if (graph.size() == 0) throw EmptyGraphError("nothing to encode");
  std::vector<std::vector<int>> label_ids;
  std::vector<std::vector<int>> kinds;
  Matrix weights(graph.size(), 1);
  for (int i = 0; i < graph.size(); ++i) {
    const GraphNode& n = graph.nodes[i];
    label_ids.push_back(vocab_.Encode(n.text));
    kinds.push_back({static_cast<int>(n.kind)});
    weights(i, 0) = n.weight;
  }
  Var emb = t.GatherMean(P(t, "tok_emb"), label_ids);
  Var x = t.MatMul(t.ConcatCols({emb, t.Constant(std::move(weights))}), P(t, "graph.w_in"));
  x = t.Add(x, t.GatherMean(P(t, "type_emb"), kinds));
  for (int l = 0; l < config_.gat_layers; ++l) {
    x = ops::GatLayer(t, x, graph.adjacency, P(t, L("graph", l, "w")),
                      P(t, L("graph", l, "a")), config_.leaky_slope)
            .out;
  }
  return t.SelectRow(x, graph.global_index);
}

Var Model::DecodeVar(Tape& t, Var graph, Var text, const std::vector<int>& decoder_ids) const {
  Var x = TokenEmbed(t, decoder_ids);
  for (int l = 0; l < config_.decoder_layers; ++l) {
    Var h = t.LayerNorm(x, P(t, L("dec", l, "ln1.g")), P(t, L("dec", l, "ln1.b")));
    Var sa = ops::MultiHeadAttention(t, h, h, P(t, L("dec", l, "self.wq")),
                                     P(t, L("dec", l, "self.wk")),
                                     P(t, L("dec", l, "self.wv")), config_.heads, true);
    x = t.Add(x, t.MatMul(sa, P(t, L("dec", l, "self.wo"))));
    Var fused = t.AddRow(x, graph);
    Var h2 = t.LayerNorm(fused, P(t, L("dec", l, "ln2.g")), P(t, L("dec", l, "ln2.b")));
    Var ca = ops::MultiHeadAttention(t, h2, text, P(t, L("dec", l, "cross.wq")),
                                     P(t, L("dec", l, "cross.wk")),
                                     P(t, L("dec", l, "cross.wv")), config_.heads, false);
    x = t.Add(fused, ca);
    Var h3 = t.LayerNorm(x, P(t, L("dec", l, "ln3.g")), P(t, L("dec", l, "ln3.b")));
    Var ff = t.Gelu(t.AddRow(t.MatMul(h3, P(t, L("dec", l, "ffn.ff1.w"))),
                             P(t, L("dec", l, "ffn.ff1.b"))));
    x = t.Add(x, t.AddRow(t.MatMul(ff, P(t, L("dec", l, "ffn.ff2.w"))),
                          P(t, L("dec", l, "ffn.ff2.b"))));
  }
  Var out = t.LayerNorm(x, P(t, "dec.lnf.g"), P(t, "dec.lnf.b"));
  return t.AddRow(t.MatMul(out, P(t, "out.w")), P(t, "out.b"));
}

Matrix Model::EncodeText(const std::vector<int>& tokens, Matrix* attention) const {
  Tape t(false);
  Var attn;
  Var out = EncodeTextVar(t, tokens, attention ? &attn : nullptr);
  if (attention) *attention = t.value(attn);
  return t.value(out);
}

GraphTensor Model::EmbedGraph(const GraphInput& graph) const {
  // The input projection without the GAT stack.
  Tape t(false);
  std::vector<std::vector<int>> label_ids;
  std::vector<std::vector<int>> kinds;
  Matrix weights(graph.size(), 1);
  for (int i = 0; i < graph.size(); ++i) {
    label_ids.push_back(vocab_.Encode(graph.nodes[i].text));
    kinds.push_back({static_cast<int>(graph.nodes[i].kind)});
    weights(i, 0) = graph.nodes[i].weight;
  }
  if (graph.size() == 0) throw EmptyGraphError("nothing to encode");
  Var emb = t.GatherMean(P(t, "tok_emb"), label_ids);
  Var x = t.MatMul(t.ConcatCols({emb, t.Constant(std::move(weights))}), P(t, "graph.w_in"));
  x = t.Add(x, t.GatherMean(P(t, "type_emb"), kinds));
  return GraphTensor{t.value(x), graph.adjacency, graph.global_index};
}

std::vector<GatParams> Model::GatLayers() const {
  std::vector<GatParams> out;
  for (int l = 0; l < config_.gat_layers; ++l) {
    out.push_back({params_.Get(L("graph", l, "w")).value, params_.Get(L("graph", l, "a")).value,
                   config_.leaky_slope});
  }
  return out;
}

Matrix Model::EncodeGraph(const GraphInput& graph) const {
  Tape t(false);
  return t.value(EncodeGraphVar(t, graph));
}

Matrix Model::Logits(const ModelInput& input, const std::vector<int>& prefix) const {
  Tape t(false);
  std::vector<int> ids{Vocab::kBos};
  ids.insert(ids.end(), prefix.begin(), prefix.end());
  Var g = EncodeGraphVar(t, input.graph);
  Var txt = EncodeTextVar(t, input.aspect_tokens, nullptr);
  return t.value(DecodeVar(t, g, txt, ids));
}

Var Model::Loss(Tape& t, const ModelInput& input, const std::vector<int>& target) const {
  std::vector<int> ids{Vocab::kBos};
  ids.insert(ids.end(), target.begin(), target.end());
  std::vector<int> labels = target;
  labels.push_back(Vocab::kEos);
  Var g = EncodeGraphVar(t, input.graph);
  Var txt = EncodeTextVar(t, input.aspect_tokens, nullptr);
  return t.CrossEntropy(DecodeVar(t, g, txt, ids), labels);
}

double Model::LossValue(const ModelInput& input, const std::vector<int>& target) const {
  Tape t(false);
  return t.value(Loss(t, input, target))(0, 0);
}

// ---------------------------------------------------------------------------
// Incremental decoding

struct Model::DecoderCache {
  Matrix graph;  // 1 x d
  std::vector<Matrix> cross_k;
  std::vector<Matrix> cross_v;
  std::vector<std::vector<double>> self_k;  // per layer, positions x d row-major
  std::vector<std::vector<double>> self_v;
  int length = 0;
};

Model::DecoderCache Model::StartDecoding(const ModelInput& input) const {
  DecoderCache c;
  c.graph = EncodeGraph(input.graph);
  const Matrix text = EncodeText(input.aspect_tokens);
  for (int l = 0; l < config_.decoder_layers; ++l) {
    c.cross_k.push_back(RowTimes(text, params_.Get(L("dec", l, "cross.wk")).value));
    c.cross_v.push_back(RowTimes(text, params_.Get(L("dec", l, "cross.wv")).value));
  }
  c.self_k.resize(config_.decoder_layers);
  c.self_v.resize(config_.decoder_layers);
  return c;
}

std::vector<double> Model::Step(DecoderCache& c, int token) const {
  const int d = config_.d_model;
  auto V = [&](const std::string& name) -> const Matrix& { return params_.Get(name).value; };
  Matrix x(1, d);
  const Matrix& emb = V("tok_emb");
  for (int j = 0; j < d; ++j) x(0, j) = emb(token, j);
  // Same angles as ops::PositionalEncoding for row `length`.
  for (int i = 0; i < d; i += 2) {
    const double angle = c.length / std::pow(10000.0, static_cast<double>(i) / d);
    x(0, i) += std::sin(angle);
    if (i + 1 < d) x(0, i + 1) += std::cos(angle);
  }
  for (int l = 0; l < config_.decoder_layers; ++l) {
    const Matrix h = LayerNormRow(x, V(L("dec", l, "ln1.g")), V(L("dec", l, "ln1.b")));
    const Matrix q = RowTimes(h, V(L("dec", l, "self.wq")));
    const Matrix k = RowTimes(h, V(L("dec", l, "self.wk")));
    const Matrix v = RowTimes(h, V(L("dec", l, "self.wv")));
    c.self_k[l].insert(c.self_k[l].end(), k.values().begin(), k.values().end());
    c.self_v[l].insert(c.self_v[l].end(), v.values().begin(), v.values().end());
    const Matrix sa = AttendRow(q, c.self_k[l].data(), c.self_v[l].data(), c.length + 1,
                                config_.heads);
    AddInPlace(&x, RowTimes(sa, V(L("dec", l, "self.wo"))));
    AddInPlace(&x, c.graph);
    const Matrix h2 = LayerNormRow(x, V(L("dec", l, "ln2.g")), V(L("dec", l, "ln2.b")));
    const Matrix q2 = RowTimes(h2, V(L("dec", l, "cross.wq")));
    AddInPlace(&x, AttendRow(q2, c.cross_k[l].data().data(), c.cross_v[l].data().data(),
                             c.cross_k[l].rows(), config_.heads));
    const Matrix h3 = LayerNormRow(x, V(L("dec", l, "ln3.g")), V(L("dec", l, "ln3.b")));
    Matrix ff = RowTimes(h3, V(L("dec", l, "ffn.ff1.w")));
    const Matrix& b1 = V(L("dec", l, "ffn.ff1.b"));
    for (int j = 0; j < ff.cols(); ++j) ff(0, j) = GeluValue(ff(0, j) + b1(0, j));
    Matrix ff2 = RowTimes(ff, V(L("dec", l, "ffn.ff2.w")));
    AddInPlace(&ff2, V(L("dec", l, "ffn.ff2.b")));
    AddInPlace(&x, ff2);
  }
  ++c.length;
  Matrix logits = RowTimes(LayerNormRow(x, V("dec.lnf.g"), V("dec.lnf.b")), V("out.w"));
  AddInPlace(&logits, V("out.b"));
  std::vector<double> logp = LogSoftmax(logits);
  // Never emit structural tokens.
  logp[Vocab::kPad] = -std::numeric_limits<double>::infinity();
  logp[Vocab::kBos] = -std::numeric_limits<double>::infinity();
  return logp;
}

struct Model::Beam {
  std::vector<int> tokens;
  double logprob = 0.0;
  DecoderCache cache;
  std::vector<double> next;
};

std::vector<int> Model::Generate(const ModelInput& input, const GenerateOptions& options) const {
  if (options.max_len < 0) throw std::invalid_argument("max_len must be non-negative");
  if (options.max_len == 0) return {};
  DecoderCache cache = StartDecoding(input);

  if (options.mode == DecodeMode::kGreedy || options.beam_size <= 1) {
    std::vector<int> out;
    std::vector<double> logp = Step(cache, Vocab::kBos);
    while (static_cast<int>(out.size()) < options.max_len) {
      const int best = static_cast<int>(std::max_element(logp.begin(), logp.end()) - logp.begin());
      if (best == Vocab::kEos) break;
      out.push_back(best);
      if (static_cast<int>(out.size()) == options.max_len) break;
      logp = Step(cache, best);
    }
    return out;
  }

  const int width = options.beam_size;
  auto normalized = [&](const std::vector<int>& tokens, double logprob) {
    return logprob / std::pow(std::max<std::size_t>(1, tokens.size()), options.length_penalty);
  };
  std::vector<Beam> alive;
  alive.push_back(Beam{{}, 0.0, std::move(cache), {}});
  alive.front().next = Step(alive.front().cache, Vocab::kBos);
  std::vector<std::pair<double, std::vector<int>>> finished;

  for (int step = 0; step < options.max_len && !alive.empty(); ++step) {
    struct Candidate {
      double score;
      int beam;
      int token;
    };
    std::vector<Candidate> cands;
    for (int b = 0; b < static_cast<int>(alive.size()); ++b) {
      for (int v = 0; v < static_cast<int>(alive[b].next.size()); ++v) {
        if (std::isinf(alive[b].next[v])) continue;
        cands.push_back({alive[b].logprob + alive[b].next[v], b, v});
      }
    }
    const std::size_t keep = std::min<std::size_t>(width, cands.size());
    std::partial_sort(cands.begin(), cands.begin() + keep, cands.end(),
                      [](const Candidate& a, const Candidate& b) {
                        if (a.score != b.score) return a.score > b.score;
                        if (a.beam != b.beam) return a.beam < b.beam;
                        return a.token < b.token;
                      });
    std::vector<Beam> next;
    for (std::size_t i = 0; i < keep; ++i) {
      const Candidate& c = cands[i];
      const Beam& parent = alive[c.beam];
      if (c.token == Vocab::kEos) {
        finished.emplace_back(normalized(parent.tokens, c.score), parent.tokens);
        continue;
      }
      Beam child{parent.tokens, c.score, parent.cache, {}};
      child.tokens.push_back(c.token);
      if (static_cast<int>(child.tokens.size()) == options.max_len) {
        finished.emplace_back(normalized(child.tokens, child.logprob), child.tokens);
        continue;
      }
      child.next = Step(child.cache, c.token);
      next.push_back(std::move(child));
    }
    alive = std::move(next);
    if (static_cast<int>(finished.size()) >= width) break;
  }
  for (const Beam& b : alive) finished.emplace_back(normalized(b.tokens, b.logprob), b.tokens);
  if (finished.empty()) return {};
  auto best = std::max_element(finished.begin(), finished.end(),
                               [](const auto& a, const auto& b) { return a.first < b.first; });
  return best->second;
}

std::string Model::GenerateText(const ModelInput& input, const GenerateOptions& options) const {
  return vocab_.Decode(Generate(input, options));
}

// ---------------------------------------------------------------------------
// Checkpoints

json Model::ToJson() const {
  json params = json::object();
  for (std::size_t i = 0; i < params_.size(); ++i) {
    params[params_.at(i).name] = MatrixToJson(params_.at(i).value);
  }
  return {{"format", kCheckpointFormat},
          {"version", kCheckpointVersion},
          {"config", config_.ToJson()},
          {"vocab", vocab_.tokens()},
          {"params", std::move(params)}};
}

Model Model::FromJson(const json& j) {
  try {
    if (j.value("format", std::string()) != kCheckpointFormat) {
      throw IoError("not a kgsumm checkpoint");
    }
    if (j.value("version", 0) != kCheckpointVersion) {
      throw IoError("unsupported checkpoint version " + j.value("version", json()).dump());
    }
    Model m(ModelConfig::FromJson(j.at("config")),
            Vocab::FromTokens(j.at("vocab").get<std::vector<std::string>>()));
    const json& params = j.at("params");
    if (params.size() != m.params_.size()) {
      throw IoError("checkpoint has " + std::to_string(params.size()) + " tensors, config needs " +
                    std::to_string(m.params_.size()));
    }
    for (std::size_t i = 0; i < m.params_.size(); ++i) {
      Parameter& p = m.params_.at(i);
      if (!params.contains(p.name)) throw IoError("checkpoint lacks tensor " + p.name);
      const json& t = params[p.name];
      const int rows = t.at("rows").get<int>();
      const int cols = t.at("cols").get<int>();
      if (rows != p.value.rows() || cols != p.value.cols()) {
        throw IoError("tensor " + p.name + " is " + std::to_string(rows) + "x" +
                      std::to_string(cols) + ", config expects " + p.value.ShapeString());
      }
      std::vector<double> data = t.at("data").get<std::vector<double>>();
      if (data.size() != p.value.size()) throw IoError("tensor " + p.name + " has wrong size");
      p.value = Matrix(rows, cols, std::move(data));
    }
    return m;
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed checkpoint: ") + e.what());
  } catch (const ConfigError& e) {
    throw IoError(std::string("checkpoint config: ") + e.what());
  }
}

void Model::Save(const std::filesystem::path& path) const {
  text::WriteFileAtomic(path, ToJson().dump());
}

Model Model::Load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("checkpoint not found: " + path.string());
  json j = json::parse(text::ReadFile(path), nullptr, false);
  if (j.is_discarded()) throw IoError("checkpoint is not JSON: " + path.string());
  return FromJson(j);
}

// ---------------------------------------------------------------------------

SentenceEncoding NeuralSentenceEncoder::Encode(const Sentence& sentence,
                                               const std::vector<std::string>& tokens) const {
  SentenceEncoding enc;
  enc.sentence_id = sentence.sentence_id;
  if (tokens.empty()) {
    enc.embedding.assign(model_.config().d_model, 0.0);
    return enc;
  }
  Matrix attention;
  const Matrix hidden = model_.EncodeText(model_.vocab().EncodeTokens(tokens), &attention);
  enc.embedding = MeanRows(hidden).values();
  enc.attention = std::move(attention);
  return enc;
}

}  // namespace kgsumm
