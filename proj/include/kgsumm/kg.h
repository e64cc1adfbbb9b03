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

#ifndef KGSUMM_KG_H_
#define KGSUMM_KG_H_

// Weighted per-product knowledge graphs: opinion triplets extracted from
// clustered sentences, proportion weights, assembly around a global product
// node, aspect/weight filtering and the edge-to-node cast fed to the graph
// encoder.

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "kgsumm/aspect_miner.h"
#include "kgsumm/corpus.h"
#include "kgsumm/nlp.h"

namespace kgsumm {

struct Triplet {
  std::string aspect_id;
  std::string attribute;  // lemma; multiword/negated joined by '_'
  double weight = 0.0;
  std::vector<std::string> provenance;  // sorted sentence ids

  friend bool operator==(const Triplet&, const Triplet&) = default;
};

struct AspectNode {
  std::string id;
  std::string label;
  friend bool operator==(const AspectNode&, const AspectNode&) = default;
};

struct AttributeNode {
  std::string id;  // "<aspect_id>/<attribute>"
  std::string aspect_id;
  std::string label;
  friend bool operator==(const AttributeNode&, const AttributeNode&) = default;
};

struct Edge {
  std::string src;
  std::string dst;
  std::string label;
  double weight = 0.0;
  std::vector<std::string> provenance;
  friend bool operator==(const Edge&, const Edge&) = default;
};

inline constexpr std::string_view kGlobalEdgeLabel = "has_aspect";

struct WeightedKG {
  std::string product_id;
  std::string global_node;
  std::vector<AspectNode> aspect_nodes;        // sorted by label
  std::vector<AttributeNode> attribute_nodes;  // aspect order, then label
  std::vector<Edge> edges;  // global edges first, then attribute edges

  const AspectNode* FindAspect(std::string_view id) const;
  const AspectNode* FindAspectByLabel(std::string_view label) const;
  // Attribute edges (aspect -> attribute) in storage order.
  std::vector<const Edge*> AttributeEdges() const;
  std::vector<const Edge*> AttributeEdgesOf(std::string_view aspect_id) const;
  std::vector<Triplet> Triplets() const;
  std::vector<std::string> AspectIds() const;
  std::vector<std::string> AspectLabels() const;

  friend bool operator==(const WeightedKG&, const WeightedKG&) = default;
};

struct SubKG {
  WeightedKG graph;
  std::set<std::string> aspect_ids;
  double wc = 0.0;
  std::vector<std::string> empty_aspects;  // selected but no edge survived

  bool Empty() const { return graph.AttributeEdges().empty(); }
};

// "attribute_weight" with the weight printed to two decimals: "good_0.35".
std::string FormatEdgeLabel(std::string_view attribute, double weight);
std::string AttributeNodeId(std::string_view aspect_id, std::string_view attribute);

// Opinion terms attached to the aspect's head noun(s) in this sentence:
// adjectival modifiers and adjectival complements of the clause the head is
// subject of, with coordinated adjectives and negation ("not_clean").
// Weights are left at 0.
std::vector<Triplet> ExtractTriplets(const Sentence& sentence,
                                     const AspectCluster& cluster,
                                     const nlp::DependencyParse& parse);

// Merges identical attributes and sets weight = mentions / total mentions of
// the aspect. Sorted by attribute.
std::vector<Triplet> WeightTriplets(const std::vector<Triplet>& triplets,
                                    const AspectCluster& aspect);

// Extraction + weighting over every clustered sentence of a product, keyed
// by aspect id.
std::map<std::string, std::vector<Triplet>> ExtractProductTriplets(
    const ProductCorpus& corpus, const AspectSet& aspects);

// Throws EmptyGraphError when no aspect has a triplet.
WeightedKG AssembleGraph(const ProductCorpus& product, const AspectSet& aspects,
                         const std::map<std::string, std::vector<Triplet>>& triplets);

// Keeps attribute edges of the selected aspects with weight strictly above
// wc. Throws ValidationError for unknown aspects or wc outside [0, 1).
SubKG FilterSubgraph(const WeightedKG& kg, const std::set<std::string>& aspect_ids,
                     double wc);

enum class NodeKind { kGlobal = 0, kAspect = 1, kRelation = 2, kAttribute = 3 };

struct GraphNode {
  NodeKind kind = NodeKind::kGlobal;
  std::string text;     // product id, aspect label or attribute
  double weight = 0.0;  // relation nodes carry their source edge weight
  std::string ref;      // source node id, or "src->dst" for relations
};

// Graph with every weighted edge turned into a relation node. Adjacency is
// symmetric, has self-loops, and the global node neighbours every node.
struct GraphInput {
  std::vector<GraphNode> nodes;
  std::vector<std::uint8_t> adjacency;  // row-major N x N
  int global_index = 0;

  int size() const { return static_cast<int>(nodes.size()); }
  bool Adjacent(int i, int j) const {
    return adjacency[static_cast<std::size_t>(i) * nodes.size() + j] != 0;
  }
};

GraphInput CastEdgesToNodes(const SubKG& sub);

// Object form: {"header": {...nodes...}, "edges": [...]}.
nlohmann::json GraphToJson(const WeightedKG& kg);
WeightedKG GraphFromJson(const nlohmann::json& j);
nlohmann::json SubKgToJson(const SubKG& sub);
SubKG SubKgFromJson(const nlohmann::json& j);

// File form: a header line carrying the node lists, then one line per edge
// {product_id, src, dst, label, weight, provenance}.
std::string GraphToJsonLines(const WeightedKG& kg);
WeightedKG GraphFromJsonLines(const std::vector<std::string>& lines);
void WriteGraphs(const std::filesystem::path& dir, const std::vector<WeightedKG>& graphs);
std::vector<WeightedKG> ReadGraphs(const std::filesystem::path& dir);
WeightedKG ReadGraphFile(const std::filesystem::path& path);

}  // namespace kgsumm

#endif  // KGSUMM_KG_H_
