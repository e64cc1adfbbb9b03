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

#include <cmath>
#include <random>

#include "fixtures.h"
#include "gtest/gtest.h"
#include "json.hpp"
#include "kgsumm/errors.h"
#include "kgsumm/text.h"
#include "kgsumm/trainer.h"

namespace kgsumm {
namespace {

using testing::DenseGat;
using testing::RandomGraphTensor;
using testing::RandomMatrix;

TEST(GatTest, MatchesDenseOracleOnRandomGraphs) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    GraphTensor g = RandomGraphTensor(6, 5, rng);
    GatParams p{RandomMatrix(5, 5, rng, 0.5), RandomMatrix(5, 2, rng, 0.5), 0.2};
    GatOutput got = GatLayer(g, p);
    GatOutput want = DenseGat(g, p);
    for (int i = 0; i < 6; ++i) {
      double row = 0;
      for (int j = 0; j < 6; ++j) {
        row += got.attention(i, j);
        EXPECT_NEAR(got.attention(i, j), want.attention(i, j), 1e-9);
        if (!g.adjacency[i * 6 + j]) EXPECT_EQ(got.attention(i, j), 0.0);
      }
      EXPECT_NEAR(row, 1.0, 1e-6);
      for (int c = 0; c < 5; ++c) EXPECT_NEAR(got.features(i, c), want.features(i, c), 1e-9);
    }
  }
}

TEST(GatTest, SingletonAndSymmetricNeighbours) {
  std::mt19937_64 rng(2);
  GraphTensor single;
  single.node_features = RandomMatrix(1, 4, rng);
  single.adjacency = {1};
  GatParams p{RandomMatrix(4, 4, rng), RandomMatrix(4, 2, rng), 0.2};
  EXPECT_DOUBLE_EQ(GatLayer(single, p).attention(0, 0), 1.0);

  GraphTensor pair;
  pair.node_features = Matrix(2, 4);
  for (int c = 0; c < 4; ++c) pair.node_features(0, c) = pair.node_features(1, c) = 0.3 * c;
  pair.adjacency = {1, 1, 1, 1};
  GatOutput out = GatLayer(pair, p);
  EXPECT_NEAR(out.attention(1, 0), 0.5, 1e-12);
  EXPECT_NEAR(out.attention(1, 1), 0.5, 1e-12);
}

TEST(GatTest, NonNeighbourFeaturesDoNotLeak) {
  std::mt19937_64 rng(5);
  GraphTensor g;
  const int n = 4;
  g.node_features = RandomMatrix(n, 3, rng);
  g.adjacency.assign(n * n, 0);
  auto link = [&](int a, int b) { g.adjacency[a * n + b] = g.adjacency[b * n + a] = 1; };
  for (int i = 0; i < n; ++i) {
    link(i, i);
    link(0, i);
  }
  link(1, 2);  // node 3 is not a neighbour of node 1
  GatParams p{RandomMatrix(3, 3, rng), RandomMatrix(3, 2, rng), 0.2};
  GatOutput before = GatLayer(g, p);
  for (int c = 0; c < 3; ++c) g.node_features(3, c) += 10.0;
  GatOutput after = GatLayer(g, p);
  for (int c = 0; c < 3; ++c) {
    EXPECT_EQ(before.features(1, c), after.features(1, c));
    EXPECT_EQ(before.features(2, c), after.features(2, c));
  }
  EXPECT_EQ(before.attention(1, 3), 0.0);
}

TEST(GatTest, RejectsMalformedGraphs) {
  std::mt19937_64 rng(9);
  GatParams p{RandomMatrix(3, 3, rng), RandomMatrix(3, 2, rng), 0.2};
  GraphTensor g = RandomGraphTensor(3, 3, rng);
  g.adjacency[4] = 0;  // drop the self-loop of node 1
  EXPECT_THROW(GatLayer(g, p), std::invalid_argument);
  GraphTensor empty;
  EXPECT_THROW(GatLayer(empty, p), EmptyGraphError);
  GraphTensor wide = RandomGraphTensor(3, 4, rng);
  EXPECT_THROW(GatLayer(wide, p), std::invalid_argument);
}

TEST(GatTest, ZeroFeaturesAndParamsGiveZeroEmbedding) {
  std::mt19937_64 rng(1);
  GraphTensor g = RandomGraphTensor(5, 4, rng);
  g.node_features = Matrix(5, 4);
  std::vector<GatParams> layers(2, GatParams{Matrix(4, 4), Matrix(4, 2), 0.2});
  Matrix e = EncodeGraph(g, layers);
  ASSERT_EQ(e.rows(), 1);
  for (double v : e.data()) EXPECT_EQ(v, 0.0);
}

TEST(CrossAttentionTest, HandRolledOracle) {
  std::mt19937_64 rng(21);
  const int d = 4;
  const int heads = 2;
  const int dk = d / heads;
  Matrix q_in = RandomMatrix(2, d, rng);
  Matrix text = RandomMatrix(3, d, rng);
  CrossAttnParams p{RandomMatrix(d, d, rng), RandomMatrix(d, d, rng), RandomMatrix(d, d, rng), heads};
  CrossAttnOutput got = CrossAttention(q_in, text, p);
  ASSERT_EQ(got.output.rows(), 2);
  ASSERT_EQ(got.attention.size(), 2u);
  auto project = [&](const Matrix& x, const Matrix& w, int r, int c) {
    double s = 0;
    for (int k = 0; k < d; ++k) s += x(r, k) * w(k, c);
    return s;
  };
  for (int h = 0; h < heads; ++h) {
    for (int i = 0; i < 2; ++i) {
      double scores[3];
      double mx = -1e300;
      for (int j = 0; j < 3; ++j) {
        double dot = 0;
        for (int c = h * dk; c < (h + 1) * dk; ++c) {
          dot += project(q_in, p.w_q, i, c) * project(text, p.w_k, j, c);
        }
        scores[j] = dot / std::sqrt(static_cast<double>(dk));
        mx = std::max(mx, scores[j]);
      }
      double sum = 0;
      for (double& s : scores) sum += (s = std::exp(s - mx));
      double row = 0;
      for (int j = 0; j < 3; ++j) {
        EXPECT_NEAR(got.attention[h](i, j), scores[j] / sum, 1e-9);
        row += got.attention[h](i, j);
      }
      EXPECT_NEAR(row, 1.0, 1e-6);
      for (int c = h * dk; c < (h + 1) * dk; ++c) {
        double v = 0;
        for (int j = 0; j < 3; ++j) v += scores[j] / sum * project(text, p.w_v, j, c);
        EXPECT_NEAR(got.output(i, c), v, 1e-6);
      }
    }
  }
}

TEST(CrossAttentionTest, SingleKeyReturnsProjectedValue) {
  std::mt19937_64 rng(22);
  Matrix q_in = RandomMatrix(3, 4, rng);
  Matrix text = RandomMatrix(1, 4, rng);
  CrossAttnParams p{RandomMatrix(4, 4, rng), RandomMatrix(4, 4, rng), RandomMatrix(4, 4, rng), 2};
  CrossAttnOutput got = CrossAttention(q_in, text, p);
  for (const Matrix& a : got.attention) {
    for (int i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(a(i, 0), 1.0);
  }
  for (int i = 0; i < 3; ++i) {
    for (int c = 0; c < 4; ++c) {
      double v = 0;
      for (int k = 0; k < 4; ++k) v += text(0, k) * p.w_v(k, c);
      EXPECT_NEAR(got.output(i, c), v, 1e-12);
    }
  }
  EXPECT_THROW(CrossAttention(RandomMatrix(2, 3, rng), text, p), std::invalid_argument);
  p.heads = 3;
  EXPECT_THROW(CrossAttention(q_in, text, p), std::invalid_argument);
}

struct Fixture {
  std::vector<TrainingPair> pairs;
  Vocab vocab;
};

const Fixture& Data() {
  static const Fixture f = [] {
    auto pipe = testing::BuildPipeline(testing::SyntheticRecords(3, 8, 61));
    Fixture out;
    for (std::size_t i = 0; i < pipe.graphs.size(); ++i) {
      const WeightedKG& kg = pipe.graphs[i];
      out.pairs.push_back(MakePair(kg, kg.AspectIds(), pipe.index, 0.0));
      out.pairs.push_back(MakePair(kg, {kg.AspectIds()[0]}, pipe.index, 0.0));
    }
    PairSplits splits;
    splits.train = out.pairs;
    out.vocab = BuildVocab(splits);
    return out;
  }();
  return f;
}

Model TinyModel(int d = 16) { return Model(testing::TinyModelConfig(d), Data().vocab); }

ModelInput InputOf(const Model& m, const TrainingPair& p) {
  return m.Prepare(p.graph, p.aspect_labels);
}

TEST(VocabTest, SpecialsEncodeDecode) {
  Vocab v = Vocab::Build({"The room was clean.", "the pool"});
  EXPECT_EQ(v.Token(Vocab::kPad), "<pad>");
  EXPECT_EQ(v.Id("room"), 5);
  EXPECT_EQ(v.Id("never"), Vocab::kUnk);
  std::vector<int> ids = v.Encode("The pool was warm");
  EXPECT_EQ(ids.back(), Vocab::kUnk);
  ids.push_back(Vocab::kEos);
  ids.push_back(v.Id("room"));
  EXPECT_EQ(v.Decode(ids), "the pool was <unk>");
  EXPECT_EQ(Vocab::FromTokens(v.tokens()), v);
  EXPECT_THROW(Vocab::FromTokens({"a", "b"}), IoError);
}

TEST(ModelConfigTest, ValidationAndJson) {
  ModelConfig c = testing::TinyModelConfig();
  EXPECT_EQ(ModelConfig::FromJson(c.ToJson()), c);
  c.heads = 3;
  EXPECT_THROW(c.Validate(), ConfigError);
  c = testing::TinyModelConfig();
  c.max_len = 0;
  EXPECT_THROW(c.Validate(), ConfigError);
}

TEST(ModelTest, TextEncoderShapeAndDeterminism) {
  Model m = TinyModel();
  std::vector<int> ids = m.vocab().Encode("room staff pool");
  Matrix attention;
  Matrix h = m.EncodeText(ids, &attention);
  EXPECT_EQ(h.rows(), 3);
  EXPECT_EQ(h.cols(), 16);
  EXPECT_EQ(m.EncodeText(ids), h);
  for (int i = 0; i < attention.rows(); ++i) {
    double row = 0;
    for (int j = 0; j < attention.cols(); ++j) row += attention(i, j);
    EXPECT_NEAR(row, 1.0, 1e-9);
  }
  EXPECT_EQ(m.EncodeText({}).rows(), 1);
}

TEST(ModelTest, EmptySubgraphHasNothingToEncode) {
  Model m = TinyModel();
  const TrainingPair& p = Data().pairs[0];
  SubKG empty = p.graph;
  empty.graph.edges.clear();
  empty.graph.attribute_nodes.clear();
  EXPECT_THROW(m.Prepare(empty, p.aspect_labels), EmptyGraphError);
  EXPECT_THROW(m.EncodeGraph(GraphInput{}), EmptyGraphError);
}

TEST(ModelTest, GraphEmbeddingIsPermutationInvariant) {
  Model m = TinyModel();
  GraphInput g = InputOf(m, Data().pairs[0]).graph;
  const int n = g.size();
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(4);
  std::shuffle(perm.begin(), perm.end(), rng);
  GraphInput q;
  q.nodes.resize(n);
  q.adjacency.assign(static_cast<std::size_t>(n) * n, 0);
  for (int i = 0; i < n; ++i) q.nodes[perm[i]] = g.nodes[i];
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) q.adjacency[perm[i] * n + perm[j]] = g.adjacency[i * n + j];
  }
  q.global_index = perm[g.global_index];
  Matrix a = m.EncodeGraph(g);
  Matrix b = m.EncodeGraph(q);
  for (int c = 0; c < a.cols(); ++c) EXPECT_NEAR(a(0, c), b(0, c), 1e-12);
}

TEST(ModelTest, GraphTensorCarriesEdgeWeights) {
  Model m = TinyModel();
  GraphInput g = InputOf(m, Data().pairs[0]).graph;
  GraphTensor t = m.EmbedGraph(g);
  EXPECT_EQ(t.size(), g.size());
  t.Validate();
  GraphInput heavier = g;
  for (GraphNode& node : heavier.nodes) {
    if (node.kind == NodeKind::kRelation) node.weight = 1.0 - node.weight;
  }
  Matrix a = m.EncodeGraph(g);
  Matrix b = m.EncodeGraph(heavier);
  double diff = 0;
  for (int c = 0; c < a.cols(); ++c) diff += std::abs(a(0, c) - b(0, c));
  EXPECT_GT(diff, 0.0);
}

TEST(ModelTest, DecoderIsCausal) {
  Model m = TinyModel();
  ModelInput in = InputOf(m, Data().pairs[1]);
  std::vector<int> a = m.TargetIds(Data().pairs[1].pseudo_summary);
  ASSERT_GE(a.size(), 6u);
  a.resize(6);
  std::vector<int> b = a;
  b[4] = b[4] == 5 ? 6 : 5;
  b[5] = Vocab::kUnk;
  Matrix la = m.Logits(in, a);
  Matrix lb = m.Logits(in, b);
  ASSERT_EQ(la.rows(), 7);
  // Row t predicts token t from bos + prefix[0, t); rows 0..4 see only a[0..3].
  for (int r = 0; r <= 4; ++r) {
    for (int c = 0; c < la.cols(); ++c) EXPECT_EQ(la(r, c), lb(r, c)) << r;
  }
  double diff = 0;
  for (int c = 0; c < la.cols(); ++c) diff += std::abs(la(5, c) - lb(5, c));
  EXPECT_GT(diff, 0.0);
}

TEST(ModelTest, IncrementalDecodingMatchesTeacherForcing) {
  Model m = TinyModel();
  for (const TrainingPair& p : Data().pairs) {
    ModelInput in = InputOf(m, p);
    GenerateOptions opt;
    opt.max_len = 12;
    std::vector<int> out = m.Generate(in, opt);
    Matrix logits = m.Logits(in, out);
    for (std::size_t t = 0; t <= out.size() && static_cast<int>(t) < opt.max_len; ++t) {
      int best = -1;
      double best_v = -1e300;
      for (int c = 0; c < logits.cols(); ++c) {
        if (c == Vocab::kPad || c == Vocab::kBos) continue;
        if (logits(static_cast<int>(t), c) > best_v) {
          best_v = logits(static_cast<int>(t), c);
          best = c;
        }
      }
      const int emitted = t < out.size() ? out[t] : Vocab::kEos;
      EXPECT_EQ(best, emitted) << "step " << t;
    }
    opt.mode = DecodeMode::kBeam;
    opt.beam_size = 1;
    EXPECT_EQ(m.Generate(in, opt), out);
  }
}

TEST(ModelTest, GenerationHonoursMaxLenAndIsDeterministic) {
  Model m = TinyModel();
  ModelInput in = InputOf(m, Data().pairs[0]);
  for (DecodeMode mode : {DecodeMode::kGreedy, DecodeMode::kBeam}) {
    GenerateOptions opt;
    opt.mode = mode;
    opt.max_len = 1;
    EXPECT_LE(m.Generate(in, opt).size(), 1u);
    opt.max_len = 0;
    EXPECT_TRUE(m.Generate(in, opt).empty());
    opt.max_len = 20;
    auto a = m.Generate(in, opt);
    EXPECT_LE(a.size(), 20u);
    EXPECT_EQ(m.Generate(in, opt), a);
    for (int id : a) {
      EXPECT_NE(id, Vocab::kPad);
      EXPECT_NE(id, Vocab::kBos);
      EXPECT_NE(id, Vocab::kEos);
    }
  }
}

TEST(ModelTest, TargetTruncationPrefersSentenceBoundary) {
  ModelConfig c = testing::TinyModelConfig();
  c.max_len = 8;
  Model m(c, Vocab::Build({"a b c . d e f g h ."}));
  EXPECT_EQ(m.TargetIds("a b c . d e f g h .").size(), 4u);
  EXPECT_EQ(m.TargetIds("a b c d e f g h i j").size(), 8u);
  EXPECT_EQ(m.TargetIds("a b .").size(), 3u);
}

TEST(ModelTest, CheckpointRoundTripAndShapeValidation) {
  Model m = TinyModel();
  testing::TempDir dir("model");
  m.Save(dir.path() / "model.json");
  Model back = Model::Load(dir.path() / "model.json");
  EXPECT_EQ(back.config(), m.config());
  EXPECT_EQ(back.vocab(), m.vocab());
  ASSERT_EQ(back.params().size(), m.params().size());
  for (std::size_t i = 0; i < m.params().size(); ++i) {
    EXPECT_EQ(back.params().at(i).value, m.params().at(i).value);
  }
  ModelInput in = InputOf(m, Data().pairs[0]);
  EXPECT_EQ(back.Logits(in, {5, 6}), m.Logits(in, {5, 6}));

  nlohmann::json j = m.ToJson();
  j["params"]["out.b"]["cols"] = 3;
  EXPECT_THROW(Model::FromJson(j), IoError);
  j = m.ToJson();
  j["params"].erase("dec.lnf.g");
  EXPECT_THROW(Model::FromJson(j), IoError);
  j = m.ToJson();
  j["format"] = "other";
  EXPECT_THROW(Model::FromJson(j), IoError);
  EXPECT_THROW(Model::Load(dir.path() / "missing.json"), IoError);
}

TEST(ModelTest, SameSeedSameInit) {
  Model a = TinyModel();
  Model b = TinyModel();
  for (std::size_t i = 0; i < a.params().size(); ++i) {
    EXPECT_EQ(a.params().at(i).value, b.params().at(i).value);
  }
}

TEST(ModelTest, GradientCheckOnFullLoss) {
  Model m = TinyModel(16);
  const TrainingPair& p = Data().pairs[0];
  ModelInput in = InputOf(m, p);
  std::vector<int> target = m.TargetIds(p.pseudo_summary);
  target.resize(std::min<std::size_t>(target.size(), 12));
  testing::GradientCheck r = testing::CheckModelGradients(m, in, target, 100, 3);
  EXPECT_EQ(r.checked, 100);
  EXPECT_LT(r.max_rel_error, 1e-3) << r.worst;
}

TEST(SentenceEncoderTest, RowStochasticAttention) {
  Model m = TinyModel();
  NeuralSentenceEncoder enc(m);
  Sentence s{"r:0", 0, "The room was clean ."};
  SentenceEncoding e = enc.Encode(s, text::Tokenize(s.text));
  EXPECT_EQ(e.embedding.size(), 16u);
  ASSERT_EQ(e.attention.rows(), 5);
  for (int i = 0; i < 5; ++i) {
    double row = 0;
    for (int j = 0; j < 5; ++j) row += e.attention(i, j);
    EXPECT_NEAR(row, 1.0, 1e-5);
  }
  for (double v : e.embedding) EXPECT_TRUE(std::isfinite(v));
  SentenceEncoding empty = enc.Encode(Sentence{"r:1", 1, ""}, {});
  EXPECT_EQ(empty.attention.rows(), 0);
}

}  // namespace
}  // namespace kgsumm
