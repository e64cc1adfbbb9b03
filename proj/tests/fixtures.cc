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

#include "fixtures.h"

#include <atomic>
#include <cmath>
#include <algorithm>
#include <cstdio>
#include <map>
#include <random>

#include "kgsumm/text.h"

namespace kgsumm::testing {

const std::vector<AspectSpec>& HotelAspects() {
  static const std::vector<AspectSpec> kAspects = {
      {"room", {"clean", "spacious", "quiet", "small"}},
      {"staff", {"friendly", "helpful", "rude", "polite"}},
      {"breakfast", {"delicious", "fresh", "cold", "expensive"}},
      {"location", {"central", "convenient", "noisy", "perfect"}},
      {"pool", {"warm", "huge", "dirty", "lovely"}},
  };
  return kAspects;
}

std::string AspectSentence(const AspectSpec& aspect, const std::string& adj,
                           const std::string& second_adj) {
  std::string s = "The " + aspect.noun + " was " + adj;
  if (!second_adj.empty()) s += " and " + second_adj;
  return s + ".";
}

std::vector<RawRecord> SyntheticRecords(int products, int reviews_per_product,
                                        std::uint64_t seed, Source source) {
  std::mt19937_64 rng(seed);
  const auto& aspects = HotelAspects();
  std::vector<RawRecord> out;
  for (int p = 0; p < products; ++p) {
    const std::string product = "hotel_" + std::to_string(p);
    for (int r = 0; r < reviews_per_product; ++r) {
      std::vector<int> order(aspects.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
      std::shuffle(order.begin(), order.end(), rng);
      const int n = 4 + static_cast<int>(rng() % 2);
      std::vector<std::string> sentences;
      std::size_t length = 0;
      for (int s = 0; s < n; ++s) {
        const AspectSpec& a = aspects[order[s]];
        const std::size_t first = rng() % a.adjectives.size();
        std::string second;
        // Coordinated pairs on a third of the sentences, and whenever the
        // review would otherwise stay short.
        if (rng() % 3 == 0 || length < 60) {
          second = a.adjectives[(first + 1 + rng() % (a.adjectives.size() - 1)) %
                                a.adjectives.size()];
        }
        sentences.push_back(AspectSentence(a, a.adjectives[first], second));
        length += sentences.back().size() + 1;
      }
      RawRecord rec;
      rec.source = source;
      rec.product_id = product;
      rec.review_body = text::Join(sentences, " ");
      rec.extra["review_id"] = product + "_r" + std::to_string(r);
      out.push_back(std::move(rec));
    }
  }
  return out;
}

SentenceEncoding BagEncoder::Encode(const Sentence& sentence,
                                    const std::vector<std::string>& tokens) const {
  SentenceEncoding enc;
  enc.sentence_id = sentence.sentence_id;
  enc.embedding.assign(dim_, 0.0);
  for (const std::string& t : tokens) {
    if (text::IsSentencePunct(t)) continue;
    enc.embedding[text::Fingerprint(t) % dim_] += 1.0;
  }
  double norm = 0.0;
  for (double v : enc.embedding) norm += v * v;
  if (norm > 0.0) {
    for (double& v : enc.embedding) v /= std::sqrt(norm);
  }
  const int n = static_cast<int>(tokens.size());
  enc.attention = Matrix(n, n, n > 0 ? 1.0 / n : 0.0);
  return enc;
}

Pipeline BuildPipeline(const std::vector<RawRecord>& records, const MinerConfig& config) {
  Pipeline p;
  p.corpora = BuildCorpora(records);
  const BagEncoder encoder;
  for (const ProductCorpus& c : p.corpora) {
    p.aspects.push_back(MineAspects(c, encoder, config));
    p.graphs.push_back(AssembleGraph(c, p.aspects.back(),
                                     ExtractProductTriplets(c, p.aspects.back())));
    p.index.Add(c);
  }
  return p;
}

ModelConfig TinyModelConfig(int d_model) {
  ModelConfig c;
  c.d_model = d_model;
  c.heads = 2;
  c.ffn_dim = 2 * d_model;
  c.text_layers = 1;
  c.gat_layers = 2;
  c.decoder_layers = 1;
  c.max_len = 64;
  c.seed = 7;
  return c;
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  std::random_device rd;
  path_ = std::filesystem::temp_directory_path() /
          ("kgsumm_" + tag + "_" + std::to_string(rd()) + "_" + std::to_string(counter++));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

WeightedKG RandomGraph(std::uint64_t seed, int max_aspects, int max_attributes) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> n_aspects(1, max_aspects);
  std::uniform_int_distribution<int> n_attributes(1, max_attributes);
  std::uniform_int_distribution<int> mentions(1, 20);
  ProductCorpus product;
  product.product_id = "rand_" + std::to_string(seed);
  AspectSet aspects;
  aspects.product_id = product.product_id;
  std::map<std::string, std::vector<Triplet>> triplets;
  const int a = n_aspects(rng);
  for (int i = 0; i < a; ++i) {
    AspectCluster cluster;
    cluster.label = "aspect" + std::to_string(i);
    cluster.aspect_id = AspectIdFor(product.product_id, cluster.label);
    const int m = n_attributes(rng);
    std::vector<Triplet> raw;
    for (int j = 0; j < m; ++j) {
      const int count = mentions(rng);
      for (int c = 0; c < count; ++c) {
        const std::string sid = cluster.label + "_" + std::to_string(j) + ":" + std::to_string(c);
        cluster.sentence_ids.push_back(sid);
        raw.push_back(Triplet{cluster.aspect_id, "attr" + std::to_string(j), 0.0, {sid}});
      }
    }
    triplets[cluster.aspect_id] = WeightTriplets(raw, cluster);
    aspects.aspects.push_back(std::move(cluster));
  }
  aspects.k = a;
  return AssembleGraph(product, aspects, triplets);
}

GradientCheck CheckModelGradients(Model& model, const ModelInput& input,
                                  const std::vector<int>& target, int samples,
                                  std::uint64_t seed, double eps) {
  Tape tape;
  Var loss = model.Loss(tape, input, target);
  tape.Backward(loss);
  ParameterStore& ps = model.params();
  // Candidate entries are those the loss actually reaches; unused embedding
  // rows have a zero gradient on both sides and would make the check vacuous.
  std::vector<std::vector<std::size_t>> reached(ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const Matrix* g = tape.GradOf(ps.at(i));
    if (!g) continue;
    for (std::size_t k = 0; k < g->size(); ++k) {
      if (g->data()[k] != 0.0) reached[i].push_back(k);
    }
  }
  std::mt19937_64 rng(seed);
  std::vector<std::pair<std::size_t, std::size_t>> picks;
  // One entry per tensor first so every parameter family is covered.
  for (std::size_t i = 0; i < ps.size() && static_cast<int>(picks.size()) < samples; ++i) {
    if (reached[i].empty()) continue;
    std::uniform_int_distribution<std::size_t> u(0, reached[i].size() - 1);
    picks.emplace_back(i, reached[i][u(rng)]);
  }
  std::vector<std::pair<std::size_t, std::size_t>> pool;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    for (std::size_t k : reached[i]) pool.emplace_back(i, k);
  }
  std::shuffle(pool.begin(), pool.end(), rng);
  for (const auto& entry : pool) {
    if (static_cast<int>(picks.size()) >= samples) break;
    if (std::find(picks.begin(), picks.end(), entry) == picks.end()) picks.push_back(entry);
  }

  GradientCheck result;
  for (const auto& [i, k] : picks) {
    Parameter& p = ps.at(i);
    const double analytic = tape.GradOf(p)->data()[k];
    const double saved = p.value.data()[k];
    p.value.data()[k] = saved + eps;
    const double up = model.LossValue(input, target);
    p.value.data()[k] = saved - eps;
    const double down = model.LossValue(input, target);
    p.value.data()[k] = saved;
    const double numeric = (up - down) / (2 * eps);
    const double rel = std::abs(analytic - numeric) /
                       std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    ++result.checked;
    if (rel > result.max_rel_error) {
      result.max_rel_error = rel;
      result.worst = p.name + "[" + std::to_string(k) + "]";
    }
    result.rel_errors.push_back(rel);
  }
  return result;
}

HandProduct MakeHandProduct(
    const std::string& product_id,
    const std::vector<std::pair<std::string, std::vector<std::pair<std::string, int>>>>& counts) {
  HandProduct out;
  out.corpus.product_id = product_id;
  out.corpus.category = "hotel";
  out.aspects.product_id = product_id;
  std::map<std::string, std::vector<Triplet>> triplets;
  int review = 0;
  for (const auto& [label, attributes] : counts) {
    AspectCluster cluster;
    cluster.label = label;
    cluster.aspect_id = AspectIdFor(product_id, label);
    cluster.variants = {label};
    std::vector<Triplet> raw;
    for (const auto& [attribute, count] : attributes) {
      for (int c = 0; c < count; ++c) {
        Review r;
        char id[16];
        std::snprintf(id, sizeof id, "_r%04d", review++);
        r.review_id = product_id + id;
        r.product_id = product_id;
        r.text = "The " + label + " was " + attribute + ".";
        r.sentences = SegmentSentences(r.text, r.review_id);
        cluster.sentence_ids.push_back(r.sentences[0].sentence_id);
        raw.push_back(Triplet{cluster.aspect_id, attribute, 0.0, {r.sentences[0].sentence_id}});
        out.corpus.reviews.push_back(std::move(r));
      }
    }
    triplets[cluster.aspect_id] = WeightTriplets(raw, cluster);
    out.aspects.aspects.push_back(std::move(cluster));
  }
  out.aspects.k = static_cast<int>(out.aspects.aspects.size());
  out.aspects.requested_k = out.aspects.k;
  out.graph = AssembleGraph(out.corpus, out.aspects, triplets);
  return out;
}

FixtureStore WriteFixtureStore(const std::filesystem::path& dir) {
  FixtureStore store;
  store.pipeline = BuildPipeline(SyntheticRecords(3, 8, 123));
  store.weighted = MakeHandProduct(
      "weighted", {{"location", {{"great", 6}, {"convenient", 3}, {"noisy", 1}}},
                   {"room", {{"clean", 2}}},
                   {"staff", {{"friendly", 3}, {"rude", 1}}}});
  store.uniform = MakeHandProduct(
      "uniform", {{"room", {{"clean", 2}, {"small", 2}}},
                  {"pool", {{"warm", 1}, {"dirty", 1}, {"huge", 1}, {"lovely", 1}}}});
  std::vector<ProductCorpus> corpora = store.pipeline.corpora;
  std::vector<AspectSet> aspects = store.pipeline.aspects;
  std::vector<WeightedKG> graphs = store.pipeline.graphs;
  for (const HandProduct* h : {&store.weighted, &store.uniform}) {
    corpora.push_back(h->corpus);
    aspects.push_back(h->aspects);
    graphs.push_back(h->graph);
  }
  WriteCorpora(dir / "corpus", corpora);
  WriteAspectSets(dir / "aspects", aspects);
  WriteGraphs(dir / "kg", graphs);
  store.corpora = corpora;
  store.graphs = graphs;
  return store;
}

Matrix RandomMatrix(int rows, int cols, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(rows, cols);
  for (double& x : m.data()) x = n(rng);
  return m;
}

GraphTensor RandomGraphTensor(int n, int d, std::mt19937_64& rng) {
  GraphTensor g;
  g.node_features = RandomMatrix(n, d, rng);
  g.adjacency.assign(static_cast<std::size_t>(n) * n, 0);
  std::bernoulli_distribution coin(0.4);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const bool on = i == j || i == 0 || coin(rng);
      g.adjacency[i * n + j] = g.adjacency[j * n + i] = on;
    }
  }
  return g;
}

namespace {
double LeakyRelu(double x, double slope) { return x > 0 ? x : slope * x; }
double Elu(double x) { return x > 0 ? x : std::expm1(x); }
}  // namespace

GatOutput DenseGat(const GraphTensor& g, const GatParams& p) {
  const int n = g.size();
  const int d = p.w.cols();
  Matrix z(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) {
      for (int k = 0; k < g.node_features.cols(); ++k) z(i, j) += g.node_features(i, k) * p.w(k, j);
    }
  }
  std::vector<double> left(n, 0.0), right(n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) {
      left[i] += z(i, j) * p.a(j, 0);
      right[i] += z(i, j) * p.a(j, 1);
    }
  }
  GatOutput out{Matrix(n, d), Matrix(n, n)};
  for (int i = 0; i < n; ++i) {
    double mx = -1e300;
    for (int j = 0; j < n; ++j) {
      if (g.adjacency[i * n + j]) mx = std::max(mx, LeakyRelu(left[i] + right[j], p.leaky_slope));
    }
    double sum = 0;
    for (int j = 0; j < n; ++j) {
      if (g.adjacency[i * n + j]) {
        out.attention(i, j) = std::exp(LeakyRelu(left[i] + right[j], p.leaky_slope) - mx);
        sum += out.attention(i, j);
      }
    }
    for (int j = 0; j < n; ++j) out.attention(i, j) /= sum;
    for (int c = 0; c < d; ++c) {
      double acc = 0;
      for (int j = 0; j < n; ++j) acc += out.attention(i, j) * z(j, c);
      out.features(i, c) = Elu(acc);
    }
  }
  return out;
}

}  // namespace kgsumm::testing
