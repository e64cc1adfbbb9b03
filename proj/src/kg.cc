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

#include <algorithm>
#include <cstdio>
#include <unordered_map>

#include "kgsumm/errors.h"
#include "kgsumm/text.h"

namespace kgsumm {
namespace {

using nlohmann::json;
using nlp::Dep;
using nlp::Pos;

bool ChunkMatches(const NounChunk& chunk, const AspectCluster& cluster) {
  if (chunk.key() == cluster.label || chunk.text == cluster.label) return true;
  const auto& v = cluster.variants;
  return std::find(v.begin(), v.end(), chunk.key()) != v.end() ||
         std::find(v.begin(), v.end(), chunk.text) != v.end();
}

bool HasNegation(const nlp::DependencyParse& parse, int token) {
  return !parse.Children(token, Dep::kNeg).empty();
}

// Adjective plus every adjective coordinated with it.
void CollectCoordinated(const nlp::DependencyParse& parse, int adj,
                        std::vector<int>* out) {
  out->push_back(adj);
  for (int c : parse.Children(adj, Dep::kConj)) {
    if (parse.tokens[c].pos == Pos::kAdj) CollectCoordinated(parse, c, out);
  }
}

void PushAttribute(const nlp::DependencyParse& parse, int adj, bool negated,
                   std::vector<std::string>* out) {
  negated = negated || HasNegation(parse, adj);
  std::string attr = parse.tokens[adj].lemma;
  if (negated) attr = "not_" + attr;
  if (std::find(out->begin(), out->end(), attr) == out->end()) out->push_back(attr);
}

std::vector<std::string> AttributesOf(const nlp::DependencyParse& parse, int head) {
  std::vector<std::string> attrs;
  const auto& toks = parse.tokens;
  for (int a : parse.Children(head, Dep::kAmod)) {
    if (toks[a].pos != Pos::kAdj) continue;
    const bool negated = a > 0 && toks[a - 1].pos == Pos::kNeg;
    PushAttribute(parse, a, negated, &attrs);
  }
  int predicate = -1;
  if (toks[head].dep == Dep::kNsubj) {
    predicate = toks[head].head;
  } else if (toks[head].dep == Dep::kConj && toks[head].head >= 0 &&
             toks[toks[head].head].dep == Dep::kNsubj) {
    predicate = toks[toks[head].head].head;
  }
  if (predicate >= 0) {
    const bool negated = HasNegation(parse, predicate);
    for (int comp : parse.Children(predicate, Dep::kAcomp)) {
      std::vector<int> adjs;
      CollectCoordinated(parse, comp, &adjs);
      for (int adj : adjs) PushAttribute(parse, adj, negated, &attrs);
    }
  }
  return attrs;
}

std::string FormatWeight(double w) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", w);
  return buf;
}

}  // namespace

std::string FormatEdgeLabel(std::string_view attribute, double weight) {
  return std::string(attribute) + "_" + FormatWeight(weight);
}

std::string AttributeNodeId(std::string_view aspect_id, std::string_view attribute) {
  return std::string(aspect_id) + "/" + std::string(attribute);
}

const AspectNode* WeightedKG::FindAspect(std::string_view id) const {
  for (const AspectNode& a : aspect_nodes) {
    if (a.id == id) return &a;
  }
  return nullptr;
}

const AspectNode* WeightedKG::FindAspectByLabel(std::string_view label) const {
  for (const AspectNode& a : aspect_nodes) {
    if (a.label == label) return &a;
  }
  return nullptr;
}

std::vector<const Edge*> WeightedKG::AttributeEdges() const {
  std::vector<const Edge*> out;
  for (const Edge& e : edges) {
    if (e.src != global_node) out.push_back(&e);
  }
  return out;
}

std::vector<const Edge*> WeightedKG::AttributeEdgesOf(std::string_view aspect_id) const {
  std::vector<const Edge*> out;
  for (const Edge& e : edges) {
    if (e.src == aspect_id && e.src != global_node) out.push_back(&e);
  }
  return out;
}

std::vector<Triplet> WeightedKG::Triplets() const {
  std::unordered_map<std::string, const AttributeNode*> attr;
  for (const AttributeNode& a : attribute_nodes) attr[a.id] = &a;
  std::vector<Triplet> out;
  for (const Edge* e : AttributeEdges()) {
    auto it = attr.find(e->dst);
    const std::string label = it == attr.end() ? e->dst : it->second->label;
    out.push_back(Triplet{e->src, label, e->weight, e->provenance});
  }
  return out;
}

std::vector<std::string> WeightedKG::AspectIds() const {
  std::vector<std::string> out;
  for (const AspectNode& a : aspect_nodes) out.push_back(a.id);
  return out;
}

std::vector<std::string> WeightedKG::AspectLabels() const {
  std::vector<std::string> out;
  for (const AspectNode& a : aspect_nodes) out.push_back(a.label);
  return out;
}

std::vector<Triplet> ExtractTriplets(const Sentence& sentence,
                                     const AspectCluster& cluster,
                                     const nlp::DependencyParse& parse) {
  std::vector<std::string> attrs;
  for (const NounChunk& chunk : ExtractNounChunks(sentence, parse)) {
    if (!ChunkMatches(chunk, cluster)) continue;
    for (const std::string& a : AttributesOf(parse, chunk.end - 1)) {
      if (std::find(attrs.begin(), attrs.end(), a) == attrs.end()) attrs.push_back(a);
    }
  }
  std::vector<Triplet> out;
  for (const std::string& a : attrs) {
    out.push_back(Triplet{cluster.aspect_id, a, 0.0, {sentence.sentence_id}});
  }
  return out;
}

std::vector<Triplet> WeightTriplets(const std::vector<Triplet>& triplets,
                                    const AspectCluster& aspect) {
  std::map<std::string, std::pair<int, std::set<std::string>>> merged;
  int total = 0;
  for (const Triplet& t : triplets) {
    if (t.aspect_id != aspect.aspect_id) {
      throw std::invalid_argument("triplet for " + t.aspect_id +
                                  " weighted under " + aspect.aspect_id);
    }
    auto& [count, prov] = merged[t.attribute];
    ++count;
    ++total;
    prov.insert(t.provenance.begin(), t.provenance.end());
  }
  std::vector<Triplet> out;
  for (const auto& [attribute, entry] : merged) {
    Triplet t;
    t.aspect_id = aspect.aspect_id;
    t.attribute = attribute;
    t.weight = static_cast<double>(entry.first) / static_cast<double>(total);
    t.provenance.assign(entry.second.begin(), entry.second.end());
    out.push_back(std::move(t));
  }
  return out;
}

std::map<std::string, std::vector<Triplet>> ExtractProductTriplets(
    const ProductCorpus& corpus, const AspectSet& aspects) {
  std::unordered_map<std::string, const Sentence*> index;
  for (const Review& r : corpus.reviews) {
    for (const Sentence& s : r.sentences) index[s.sentence_id] = &s;
  }
  nlp::RuleParser parser;
  std::map<std::string, std::vector<Triplet>> out;
  for (const AspectCluster& cluster : aspects.aspects) {
    std::vector<Triplet> raw;
    for (const std::string& sid : cluster.sentence_ids) {
      auto it = index.find(sid);
      if (it == index.end()) {
        throw std::invalid_argument("aspect " + cluster.aspect_id +
                                    " references unknown sentence " + sid);
      }
      std::vector<Triplet> found =
          ExtractTriplets(*it->second, cluster, parser.Parse(it->second->text));
      raw.insert(raw.end(), found.begin(), found.end());
    }
    out[cluster.aspect_id] = WeightTriplets(raw, cluster);
  }
  return out;
}

WeightedKG AssembleGraph(const ProductCorpus& product, const AspectSet& aspects,
                         const std::map<std::string, std::vector<Triplet>>& triplets) {
  WeightedKG kg;
  kg.product_id = product.product_id;
  kg.global_node = product.product_id;
  std::vector<const AspectCluster*> clusters;
  for (const AspectCluster& a : aspects.aspects) clusters.push_back(&a);
  std::sort(clusters.begin(), clusters.end(),
            [](const AspectCluster* a, const AspectCluster* b) { return a->label < b->label; });

  std::vector<Edge> attribute_edges;
  for (const AspectCluster* a : clusters) {
    auto it = triplets.find(a->aspect_id);
    if (it == triplets.end() || it->second.empty()) continue;
    kg.aspect_nodes.push_back(AspectNode{a->aspect_id, a->label});
    kg.edges.push_back(Edge{kg.global_node, a->aspect_id, std::string(kGlobalEdgeLabel), 1.0, {}});
    std::vector<Triplet> sorted = it->second;
    std::sort(sorted.begin(), sorted.end(),
              [](const Triplet& x, const Triplet& y) { return x.attribute < y.attribute; });
    for (const Triplet& t : sorted) {
      if (t.weight <= 0.0) {
        throw std::invalid_argument("unweighted triplet " + t.attribute);
      }
      const std::string node_id = AttributeNodeId(a->aspect_id, t.attribute);
      kg.attribute_nodes.push_back(AttributeNode{node_id, a->aspect_id, t.attribute});
      attribute_edges.push_back(Edge{a->aspect_id, node_id,
                                     FormatEdgeLabel(t.attribute, t.weight), t.weight,
                                     t.provenance});
    }
  }
  if (kg.aspect_nodes.empty()) {
    throw EmptyGraphError("empty graph: product " + product.product_id +
                          " has no opinion triplets");
  }
  kg.edges.insert(kg.edges.end(), attribute_edges.begin(), attribute_edges.end());
  return kg;
}

SubKG FilterSubgraph(const WeightedKG& kg, const std::set<std::string>& aspect_ids,
                     double wc) {
  if (!(wc >= 0.0 && wc < 1.0)) {
    throw ValidationError("weight controller must lie in [0, 1), got " +
                          std::to_string(wc));
  }
  for (const std::string& id : aspect_ids) {
    if (!kg.FindAspect(id)) {
      throw ValidationError("unknown aspect '" + id + "'", kg.AspectIds());
    }
  }
  SubKG sub;
  sub.aspect_ids = aspect_ids;
  sub.wc = wc;
  sub.graph.product_id = kg.product_id;
  sub.graph.global_node = kg.global_node;
  std::set<std::string> kept_attribute_nodes;
  std::vector<Edge> attribute_edges;
  for (const AspectNode& a : kg.aspect_nodes) {
    if (!aspect_ids.count(a.id)) continue;
    sub.graph.aspect_nodes.push_back(a);
    sub.graph.edges.push_back(
        Edge{kg.global_node, a.id, std::string(kGlobalEdgeLabel), 1.0, {}});
    bool any = false;
    for (const Edge* e : kg.AttributeEdgesOf(a.id)) {
      if (e->weight > wc) {
        attribute_edges.push_back(*e);
        kept_attribute_nodes.insert(e->dst);
        any = true;
      }
    }
    if (!any) sub.empty_aspects.push_back(a.id);
  }
  for (const AttributeNode& n : kg.attribute_nodes) {
    if (kept_attribute_nodes.count(n.id)) sub.graph.attribute_nodes.push_back(n);
  }
  sub.graph.edges.insert(sub.graph.edges.end(), attribute_edges.begin(),
                         attribute_edges.end());
  return sub;
}

GraphInput CastEdgesToNodes(const SubKG& sub) {
  const WeightedKG& g = sub.graph;
  GraphInput out;
  std::vector<std::pair<int, int>> links;
  out.nodes.push_back(GraphNode{NodeKind::kGlobal, g.global_node, 0.0, g.global_node});
  out.global_index = 0;
  std::unordered_map<std::string, const AttributeNode*> attr;
  for (const AttributeNode& a : g.attribute_nodes) attr[a.id] = &a;
  for (const AspectNode& aspect : g.aspect_nodes) {
    const int aspect_index = out.size();
    out.nodes.push_back(GraphNode{NodeKind::kAspect, aspect.label, 0.0, aspect.id});
    for (const Edge* e : g.AttributeEdgesOf(aspect.id)) {
      auto it = attr.find(e->dst);
      const std::string label = it == attr.end() ? e->dst : it->second->label;
      const int relation = out.size();
      out.nodes.push_back(
          GraphNode{NodeKind::kRelation, label, e->weight, e->src + "->" + e->dst});
      const int attribute = out.size();
      out.nodes.push_back(GraphNode{NodeKind::kAttribute, label, 0.0, e->dst});
      links.emplace_back(aspect_index, relation);
      links.emplace_back(relation, attribute);
    }
  }
  const int n = out.size();
  out.adjacency.assign(static_cast<std::size_t>(n) * n, 0);
  auto link = [&](int a, int b) {
    out.adjacency[static_cast<std::size_t>(a) * n + b] = 1;
    out.adjacency[static_cast<std::size_t>(b) * n + a] = 1;
  };
  for (int i = 0; i < n; ++i) {
    link(i, i);
    link(out.global_index, i);
  }
  for (const auto& [a, b] : links) link(a, b);
  return out;
}

json GraphToJson(const WeightedKG& kg) {
  json aspects = json::array();
  for (const AspectNode& a : kg.aspect_nodes) aspects.push_back({{"id", a.id}, {"label", a.label}});
  json attributes = json::array();
  for (const AttributeNode& a : kg.attribute_nodes) {
    attributes.push_back({{"id", a.id}, {"aspect_id", a.aspect_id}, {"label", a.label}});
  }
  json edges = json::array();
  for (const Edge& e : kg.edges) {
    edges.push_back({{"product_id", kg.product_id},
                     {"src", e.src},
                     {"dst", e.dst},
                     {"label", e.label},
                     {"weight", e.weight},
                     {"provenance", e.provenance}});
  }
  return {{"header",
           {{"product_id", kg.product_id},
            {"global_node", kg.global_node},
            {"aspect_nodes", aspects},
            {"attribute_nodes", attributes}}},
          {"edges", edges}};
}

WeightedKG GraphFromJson(const json& j) {
  try {
    WeightedKG kg;
    const json& h = j.at("header");
    kg.product_id = h.at("product_id").get<std::string>();
    kg.global_node = h.at("global_node").get<std::string>();
    for (const json& a : h.at("aspect_nodes")) {
      kg.aspect_nodes.push_back(
          AspectNode{a.at("id").get<std::string>(), a.at("label").get<std::string>()});
    }
    for (const json& a : h.at("attribute_nodes")) {
      kg.attribute_nodes.push_back(AttributeNode{a.at("id").get<std::string>(),
                                                 a.at("aspect_id").get<std::string>(),
                                                 a.at("label").get<std::string>()});
    }
    for (const json& e : j.at("edges")) {
      kg.edges.push_back(Edge{e.at("src").get<std::string>(), e.at("dst").get<std::string>(),
                              e.at("label").get<std::string>(), e.at("weight").get<double>(),
                              e.at("provenance").get<std::vector<std::string>>()});
    }
    return kg;
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed graph: ") + e.what());
  }
}

json SubKgToJson(const SubKG& sub) {
  json j = GraphToJson(sub.graph);
  j["filter"] = {{"aspect_ids", std::vector<std::string>(sub.aspect_ids.begin(),
                                                         sub.aspect_ids.end())},
                 {"wc", sub.wc},
                 {"empty_aspects", sub.empty_aspects}};
  return j;
}

SubKG SubKgFromJson(const json& j) {
  SubKG sub;
  sub.graph = GraphFromJson(j);
  try {
    const json& f = j.at("filter");
    for (const json& id : f.at("aspect_ids")) sub.aspect_ids.insert(id.get<std::string>());
    sub.wc = f.at("wc").get<double>();
    sub.empty_aspects = f.at("empty_aspects").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed subgraph filter: ") + e.what());
  }
  return sub;
}

std::string GraphToJsonLines(const WeightedKG& kg) {
  json j = GraphToJson(kg);
  json header = j["header"];
  header["header"] = true;
  std::string out = header.dump() + "\n";
  for (const json& e : j["edges"]) out += e.dump() + "\n";
  return out;
}

WeightedKG GraphFromJsonLines(const std::vector<std::string>& lines) {
  if (lines.empty()) throw IoError("empty graph file");
  json header = json::parse(lines.front(), nullptr, false);
  if (header.is_discarded() || !header.contains("header")) {
    throw IoError("graph file does not start with a header object");
  }
  header.erase("header");
  json edges = json::array();
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (text::Trim(lines[i]).empty()) continue;
    json e = json::parse(lines[i], nullptr, false);
    if (e.is_discarded()) throw IoError("graph edge line is not JSON");
    edges.push_back(std::move(e));
  }
  return GraphFromJson({{"header", header}, {"edges", edges}});
}

void WriteGraphs(const std::filesystem::path& dir, const std::vector<WeightedKG>& graphs) {
  std::filesystem::create_directories(dir);
  for (const WeightedKG& g : graphs) {
    text::WriteFileAtomic(dir / (text::FileStem(g.product_id) + ".jsonl"),
                          GraphToJsonLines(g));
  }
}

WeightedKG ReadGraphFile(const std::filesystem::path& path) {
  return GraphFromJsonLines(text::ReadLines(path));
}

std::vector<WeightedKG> ReadGraphs(const std::filesystem::path& dir) {
  std::vector<WeightedKG> out;
  for (const auto& path : text::ListFiles(dir, ".jsonl")) out.push_back(ReadGraphFile(path));
  std::sort(out.begin(), out.end(), [](const WeightedKG& a, const WeightedKG& b) {
    return a.product_id < b.product_id;
  });
  return out;
}

}  // namespace kgsumm
