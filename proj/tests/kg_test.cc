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

#include "kgsumm/kg.h"

#include <map>
#include <set>

#include "fixtures.h"
#include "gtest/gtest.h"
#include "kgsumm/errors.h"
#include "kgsumm/text.h"

namespace kgsumm {
namespace {

AspectCluster Cluster(const std::string& product, const std::string& label) {
  AspectCluster c;
  c.label = label;
  c.aspect_id = AspectIdFor(product, label);
  c.variants = {label};
  return c;
}

std::vector<Triplet> Extract(const std::string& text, const std::string& label) {
  Sentence s{"r:0", 0, text};
  nlp::RuleParser parser;
  return ExtractTriplets(s, Cluster("p", label), parser.Parse(text));
}

std::set<std::string> Attributes(const std::vector<Triplet>& ts) {
  std::set<std::string> out;
  for (const Triplet& t : ts) out.insert(t.attribute);
  return out;
}

// Single-review-per-sentence product, one cluster per label.
struct Built {
  ProductCorpus corpus;
  AspectSet aspects;
};

Built Product(const std::string& id,
              const std::vector<std::pair<std::string, std::string>>& label_and_text) {
  Built b;
  b.corpus.product_id = id;
  b.aspects.product_id = id;
  std::map<std::string, AspectCluster> clusters;
  for (std::size_t i = 0; i < label_and_text.size(); ++i) {
    const auto& [label, sentence] = label_and_text[i];
    Review r;
    r.review_id = id + "_r" + std::to_string(i);
    r.product_id = id;
    r.text = sentence;
    r.sentences = SegmentSentences(sentence, r.review_id);
    if (!clusters.count(label)) clusters[label] = Cluster(id, label);
    for (const Sentence& s : r.sentences) clusters[label].sentence_ids.push_back(s.sentence_id);
    b.corpus.reviews.push_back(std::move(r));
  }
  for (auto& [label, c] : clusters) b.aspects.aspects.push_back(std::move(c));
  b.aspects.k = static_cast<int>(b.aspects.aspects.size());
  return b;
}

TEST(ExtractTripletsTest, HandLabeledSentences) {
  auto t = Extract("The room was very clean.", "room");
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t[0].attribute, "clean");
  EXPECT_EQ(t[0].aspect_id, AspectIdFor("p", "room"));
  EXPECT_EQ(t[0].provenance, std::vector<std::string>{"r:0"});
  EXPECT_EQ(Attributes(Extract("The room was not clean.", "room")),
            std::set<std::string>{"not_clean"});
  EXPECT_TRUE(Extract("I arrived Tuesday.", "room").empty());
  EXPECT_EQ(Attributes(Extract("The staff were friendly and helpful.", "staff")),
            (std::set<std::string>{"friendly", "helpful"}));
  EXPECT_EQ(Attributes(Extract("We had a delicious breakfast.", "breakfast")),
            std::set<std::string>{"delicious"});
  EXPECT_TRUE(Extract("The room was very clean.", "pool").empty());
}

TEST(WeightTripletsTest, ProportionsAgainstCountingOracle) {
  std::vector<std::pair<std::string, std::string>> rows;
  const std::map<std::string, int> mentions = {{"great", 12}, {"convenient", 6}, {"noisy", 2}};
  for (const auto& [adj, n] : mentions) {
    for (int i = 0; i < n; ++i) {
      rows.push_back({"location", "The location was " + adj + " on day " + std::to_string(i) + "."});
    }
  }
  Built b = Product("hotel", rows);
  auto triplets = ExtractProductTriplets(b.corpus, b.aspects);
  const auto& loc = triplets.at(AspectIdFor("hotel", "location"));
  // Oracle: count sentences mentioning each adjective word.
  std::map<std::string, int> counted;
  for (const Review& r : b.corpus.reviews) {
    for (const std::string& w : text::Tokenize(r.text)) {
      if (mentions.count(w)) ++counted[w];
    }
  }
  const double total = 20.0;
  ASSERT_EQ(loc.size(), 3u);
  double sum = 0;
  for (const Triplet& t : loc) {
    EXPECT_NEAR(t.weight, counted.at(t.attribute) / total, 1e-12) << t.attribute;
    EXPECT_EQ(t.provenance.size(), static_cast<std::size_t>(counted.at(t.attribute)));
    sum += t.weight;
  }
  EXPECT_NEAR(sum, 1.0, 1e-6);
  std::map<std::string, double> w;
  for (const Triplet& t : loc) w[t.attribute] = t.weight;
  EXPECT_NEAR(w["great"], 0.60, 1e-12);
  EXPECT_NEAR(w["convenient"], 0.30, 1e-12);
  EXPECT_NEAR(w["noisy"], 0.10, 1e-12);
}

TEST(WeightTripletsTest, DegenerateCases) {
  AspectCluster c = Cluster("p", "room");
  EXPECT_TRUE(WeightTriplets({}, c).empty());
  auto one = WeightTriplets({Triplet{c.aspect_id, "clean", 0, {"a"}}}, c);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_DOUBLE_EQ(one[0].weight, 1.0);
  auto two = WeightTriplets({Triplet{c.aspect_id, "clean", 0, {"a"}},
                             Triplet{c.aspect_id, "small", 0, {"b"}},
                             Triplet{c.aspect_id, "clean", 0, {"c"}},
                             Triplet{c.aspect_id, "small", 0, {"a"}}},
                            c);
  ASSERT_EQ(two.size(), 2u);
  EXPECT_DOUBLE_EQ(two[0].weight, 0.5);
  EXPECT_DOUBLE_EQ(two[1].weight, 0.5);
  EXPECT_EQ(two[0].provenance, (std::vector<std::string>{"a", "c"}));
  EXPECT_THROW(WeightTriplets({Triplet{"other", "x", 0, {}}}, c), std::invalid_argument);
}

TEST(AssembleGraphTest, StructuralCounts) {
  Built b = Product("hotel", {{"room", "The room was clean and quiet."},
                              {"staff", "The staff were friendly."},
                              {"staff", "The staff were rude."},
                              {"pool", "The pool was warm."},
                              {"pool", "The pool was dirty."},
                              {"breakfast", "I arrived Tuesday."}});
  WeightedKG kg = AssembleGraph(b.corpus, b.aspects, ExtractProductTriplets(b.corpus, b.aspects));
  EXPECT_EQ(kg.global_node, "hotel");
  EXPECT_EQ(kg.aspect_nodes.size(), 3u);  // breakfast has no triplets
  EXPECT_EQ(kg.attribute_nodes.size(), 6u);
  EXPECT_EQ(kg.edges.size(), 3u + 6u);
  EXPECT_EQ(kg.AttributeEdges().size(), 6u);
  EXPECT_EQ(kg.FindAspectByLabel("breakfast"), nullptr);
  EXPECT_EQ(kg.AspectLabels(), (std::vector<std::string>{"pool", "room", "staff"}));
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(kg.edges[i].src, kg.global_node);
    EXPECT_EQ(kg.edges[i].label, kGlobalEdgeLabel);
  }
  for (const Edge* e : kg.AttributeEdges()) EXPECT_DOUBLE_EQ(e->weight, 0.5);
}

TEST(AssembleGraphTest, EmptyProductThrows) {
  Built b = Product("quiet", {{"room", "I arrived Tuesday."}});
  EXPECT_THROW(AssembleGraph(b.corpus, b.aspects, ExtractProductTriplets(b.corpus, b.aspects)),
               EmptyGraphError);
}

TEST(AssembleGraphTest, EdgeLabelFormat) {
  EXPECT_EQ(FormatEdgeLabel("good", 0.35), "good_0.35");
  EXPECT_EQ(FormatEdgeLabel("not_clean", 1.0), "not_clean_1.00");
  EXPECT_EQ(FormatEdgeLabel("fast", 0.125), "fast_0.12");
}

TEST(FilterSubgraphTest, StrictThresholdKeepsHeavierEdges) {
  std::vector<std::pair<std::string, std::string>> rows;
  for (int i = 0; i < 6; ++i) rows.push_back({"location", "The location was great " + std::to_string(i) + "."});
  for (int i = 0; i < 3; ++i) rows.push_back({"location", "The location was convenient " + std::to_string(i) + "."});
  rows.push_back({"location", "The location was noisy."});
  Built b = Product("hotel", rows);
  WeightedKG kg = AssembleGraph(b.corpus, b.aspects, ExtractProductTriplets(b.corpus, b.aspects));
  const std::string loc = AspectIdFor("hotel", "location");
  SubKG sub = FilterSubgraph(kg, {loc}, 0.2);
  std::set<std::string> kept;
  for (const Triplet& t : sub.graph.Triplets()) kept.insert(t.attribute);
  EXPECT_EQ(kept, (std::set<std::string>{"convenient", "great"}));
  EXPECT_EQ(FilterSubgraph(kg, {loc}, 0.3).graph.AttributeEdges().size(), 1u);
  SubKG none = FilterSubgraph(kg, {loc}, 0.99);
  EXPECT_TRUE(none.Empty());
  EXPECT_EQ(none.empty_aspects, std::vector<std::string>{loc});
  EXPECT_EQ(none.graph.aspect_nodes.size(), 1u);
}

TEST(FilterSubgraphTest, ErrorsListValidAspects) {
  WeightedKG kg = testing::RandomGraph(5);
  try {
    FilterSubgraph(kg, {"nope"}, 0.0);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.valid(), kg.AspectIds());
  }
  EXPECT_THROW(FilterSubgraph(kg, {}, 1.0), ValidationError);
  EXPECT_THROW(FilterSubgraph(kg, {}, -0.1), ValidationError);
}

std::set<std::pair<std::string, std::string>> EdgeSet(const WeightedKG& g) {
  std::set<std::pair<std::string, std::string>> out;
  for (const Edge& e : g.edges) out.insert({e.src, e.dst});
  return out;
}

TEST(FilterSubgraphTest, MonotoneAndClosedOverRandomGraphs) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    WeightedKG kg = testing::RandomGraph(seed);
    const auto ids = kg.AspectIds();
    std::set<std::string> selected;
    for (std::size_t i = 0; i < ids.size(); i += 2) selected.insert(ids[i]);
    std::set<std::string> all(ids.begin(), ids.end());
    // wc = 0 keeps every edge of the selected aspects.
    EXPECT_EQ(FilterSubgraph(kg, all, 0.0).graph.edges.size(), kg.edges.size());
    std::set<std::pair<std::string, std::string>> previous;
    bool first = true;
    for (double wc : {0.0, 0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9}) {
      SubKG sub = FilterSubgraph(kg, selected, wc);
      for (const AspectNode& a : sub.graph.aspect_nodes) EXPECT_TRUE(selected.count(a.id));
      for (const Edge* e : sub.graph.AttributeEdges()) {
        EXPECT_GT(e->weight, wc);
        EXPECT_TRUE(selected.count(e->src));
      }
      auto edges = EdgeSet(sub.graph);
      if (!first) {
        for (const auto& e : edges) EXPECT_TRUE(previous.count(e));
      }
      previous = edges;
      first = false;
    }
  }
}

TEST(GraphTest, WeightsSumToOnePerAspect) {
  for (std::uint64_t seed = 100; seed < 130; ++seed) {
    WeightedKG kg = testing::RandomGraph(seed);
    for (const std::string& id : kg.AspectIds()) {
      double sum = 0;
      for (const Edge* e : kg.AttributeEdgesOf(id)) sum += e->weight;
      EXPECT_NEAR(sum, 1.0, 1e-6);
    }
  }
}

TEST(CastEdgesTest, RelationNodesMirrorEdges) {
  Built b = Product("hotel", {{"room", "The room was clean."}});
  WeightedKG kg = AssembleGraph(b.corpus, b.aspects, ExtractProductTriplets(b.corpus, b.aspects));
  GraphInput g = CastEdgesToNodes(FilterSubgraph(kg, {kg.AspectIds()[0]}, 0.0));
  ASSERT_EQ(g.size(), 4);
  EXPECT_EQ(g.nodes[g.global_index].kind, NodeKind::kGlobal);

  WeightedKG big = testing::RandomGraph(42);
  const auto ids = big.AspectIds();
  SubKG sub = FilterSubgraph(big, std::set<std::string>(ids.begin(), ids.end()), 0.1);
  GraphInput gi = CastEdgesToNodes(sub);
  const auto edges = sub.graph.AttributeEdges();
  int relations = 0;
  std::map<std::string, double> weight_of;
  for (const Edge* e : edges) weight_of[e->src + "->" + e->dst] = e->weight;
  for (int i = 0; i < gi.size(); ++i) {
    const GraphNode& n = gi.nodes[i];
    EXPECT_TRUE(gi.Adjacent(i, i));
    EXPECT_TRUE(gi.Adjacent(i, gi.global_index));
    for (int j = 0; j < gi.size(); ++j) EXPECT_EQ(gi.Adjacent(i, j), gi.Adjacent(j, i));
    if (n.kind == NodeKind::kRelation) {
      ++relations;
      ASSERT_TRUE(weight_of.count(n.ref)) << n.ref;
      EXPECT_EQ(n.weight, weight_of[n.ref]);
    }
  }
  EXPECT_EQ(relations, static_cast<int>(edges.size()));
  EXPECT_EQ(gi.size(), 1 + static_cast<int>(sub.graph.aspect_nodes.size()) +
                           2 * static_cast<int>(edges.size()));
}

TEST(ProvenanceTest, TripletSentencesBelongToTheirCluster) {
  auto pipe = testing::BuildPipeline(testing::SyntheticRecords(3, 8, 41));
  for (std::size_t p = 0; p < pipe.graphs.size(); ++p) {
    const AspectSet* set = nullptr;
    for (const AspectSet& s : pipe.aspects) {
      if (s.product_id == pipe.graphs[p].product_id) set = &s;
    }
    ASSERT_NE(set, nullptr);
    for (const Triplet& t : pipe.graphs[p].Triplets()) {
      const AspectCluster* c = set->FindById(t.aspect_id);
      ASSERT_NE(c, nullptr);
      for (const std::string& sid : t.provenance) {
        EXPECT_NE(std::find(c->sentence_ids.begin(), c->sentence_ids.end(), sid),
                  c->sentence_ids.end());
      }
    }
  }
}

TEST(SerializationTest, RoundTrips) {
  WeightedKG kg = testing::RandomGraph(7);
  EXPECT_EQ(GraphFromJson(GraphToJson(kg)), kg);
  EXPECT_EQ(GraphFromJsonLines(text::Split(GraphToJsonLines(kg), '\n')), kg);
  testing::TempDir dir("kg");
  std::vector<WeightedKG> graphs = {testing::RandomGraph(1), testing::RandomGraph(2)};
  WriteGraphs(dir.path(), graphs);
  auto back = ReadGraphs(dir.path());
  ASSERT_EQ(back.size(), 2u);
  std::sort(graphs.begin(), graphs.end(),
            [](const auto& a, const auto& b) { return a.product_id < b.product_id; });
  EXPECT_EQ(back, graphs);
  const auto ids = kg.AspectIds();
  SubKG sub = FilterSubgraph(kg, {ids[0]}, 0.2);
  SubKG sub_back = SubKgFromJson(SubKgToJson(sub));
  EXPECT_EQ(sub_back.graph, sub.graph);
  EXPECT_EQ(sub_back.aspect_ids, sub.aspect_ids);
  EXPECT_EQ(sub_back.wc, sub.wc);
  EXPECT_EQ(sub_back.empty_aspects, sub.empty_aspects);
}

}  // namespace
}  // namespace kgsumm
