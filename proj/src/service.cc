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

#include "kgsumm/service.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "httplib.h"
#include "kgsumm/corpus.h"
#include "kgsumm/errors.h"
#include "kgsumm/text.h"

namespace kgsumm {

using nlohmann::json;

namespace {

std::string AttributeLabel(const WeightedKG& g, const Edge& e) {
  for (const AttributeNode& n : g.attribute_nodes) {
    if (n.id == e.dst) return n.label;
  }
  return e.dst;
}

json TripletsToJson(const std::vector<TripletView>& ts) {
  json out = json::array();
  for (const TripletView& t : ts) {
    out.push_back({{"aspect", t.aspect}, {"attribute", t.attribute}, {"weight", t.weight}});
  }
  return out;
}

// Exact textual form of a double for cache keys.
std::string ExactDouble(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// Store

Store Store::Load(const std::filesystem::path& dir) {
  const std::filesystem::path corpus_dir = dir / "corpus";
  if (!std::filesystem::is_directory(corpus_dir)) {
    throw ServiceUnavailableError("store has no corpus index at " + corpus_dir.string());
  }
  Store s;
  for (const ProductCorpus& c : ReadCorpora(corpus_dir)) {
    Entry& e = s.products_[c.product_id];
    e.info.product_id = c.product_id;
    e.info.category = c.category;
    e.info.review_count = static_cast<int>(c.reviews.size());
  }
  if (std::filesystem::is_directory(dir / "aspects")) {
    for (AspectSet& a : ReadAspectSets(dir / "aspects")) {
      auto it = s.products_.find(a.product_id);
      if (it != s.products_.end()) it->second.aspects = std::move(a);
    }
  }
  if (std::filesystem::is_directory(dir / "kg")) {
    for (WeightedKG& g : ReadGraphs(dir / "kg")) {
      auto it = s.products_.find(g.product_id);
      if (it != s.products_.end()) it->second.graph = std::move(g);
    }
  }
  for (auto& [id, e] : s.products_) {
    if (e.graph) {
      e.info.aspect_count = static_cast<int>(e.graph->aspect_nodes.size());
    } else if (e.aspects) {
      e.info.aspect_count = static_cast<int>(e.aspects->aspects.size());
    }
  }
  return s;
}

const Store::Entry& Store::Find(const std::string& product_id) const {
  auto it = products_.find(product_id);
  if (it == products_.end()) throw NotFoundError("unknown product '" + product_id + "'");
  return it->second;
}

std::vector<ProductInfo> Store::ListProducts() const {
  std::vector<ProductInfo> out;
  for (const auto& [id, e] : products_) out.push_back(e.info);
  return out;
}

std::vector<AspectInfo> Store::ListAspects(const std::string& product_id) const {
  const Entry& e = Find(product_id);
  std::vector<AspectInfo> out;
  if (!e.graph) return out;
  const WeightedKG& g = *e.graph;
  for (const AspectNode& a : g.aspect_nodes) {
    AspectInfo info{a.label, a.id, {}};
    for (const Edge* edge : g.AttributeEdgesOf(a.id)) {
      info.attributes.push_back({AttributeLabel(g, *edge), edge->weight});
    }
    std::stable_sort(info.attributes.begin(), info.attributes.end(),
                     [](const AttributeWeight& x, const AttributeWeight& y) {
                       if (x.weight != y.weight) return x.weight > y.weight;
                       return x.attribute < y.attribute;
                     });
    out.push_back(std::move(info));
  }
  std::sort(out.begin(), out.end(),
            [](const AspectInfo& x, const AspectInfo& y) { return x.label < y.label; });
  return out;
}

const WeightedKG& Store::Graph(const std::string& product_id) const {
  const Entry& e = Find(product_id);
  if (!e.graph) throw NotFoundError("product '" + product_id + "' has no knowledge graph");
  return *e.graph;
}

const AspectSet* Store::Aspects(const std::string& product_id) const {
  const Entry& e = Find(product_id);
  return e.aspects ? &*e.aspects : nullptr;
}

// ---------------------------------------------------------------------------
// Service

json SummaryResponse::ToJson() const {
  return {{"v", 1},
          {"status", status},
          {"summary", summary},
          {"used_aspects", used_aspects},
          {"used_triplets", TripletsToJson(used_triplets)},
          {"dropped_by_wc", TripletsToJson(dropped_by_wc)},
          {"subgraph", SubKgToJson(subgraph)},
          {"timing_ms", timing_ms},
          {"cached", cached}};
}

SummarizerService::SummarizerService(Store store, std::shared_ptr<const Model> model,
                                     std::string checkpoint_hash, ServiceOptions options)
    : store_(std::move(store)),
      model_(std::move(model)),
      checkpoint_hash_(std::move(checkpoint_hash)),
      options_(options),
      slots_(std::max(1, options.max_concurrency)) {}

int SummarizerService::generation_count() const {
  std::lock_guard<std::mutex> lock(mu_);
  return generations_;
}

std::string SummarizerService::CacheKey(const SummaryRequest& request,
                                        const std::vector<std::string>& labels) const {
  json key = {request.product_id, labels, ExactDouble(request.wc), request.max_len,
              checkpoint_hash_};
  return key.dump();
}

std::optional<std::string> SummarizerService::CacheGet(const std::string& key) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = cache_.find(key);
  if (it == cache_.end()) return std::nullopt;
  lru_.splice(lru_.begin(), lru_, it->second);
  return it->second->second;
}

void SummarizerService::CachePut(const std::string& key, const std::string& summary) {
  std::lock_guard<std::mutex> lock(mu_);
  ++generations_;
  if (options_.cache_capacity == 0 || cache_.count(key)) return;
  lru_.emplace_front(key, summary);
  cache_[key] = lru_.begin();
  while (lru_.size() > options_.cache_capacity) {
    cache_.erase(lru_.back().first);
    lru_.pop_back();
  }
}

SummaryResponse SummarizerService::Summarize(const SummaryRequest& request) {
  const auto start = std::chrono::steady_clock::now();
  const WeightedKG& kg = store_.Graph(request.product_id);
  if (!(request.wc >= 0.0 && request.wc < 1.0)) {
    throw ValidationError("wc must lie in [0, 1)");
  }
  if (request.max_len < 1) throw ValidationError("max_len must be positive");

  std::set<std::string> ids;
  if (request.aspect_labels.empty()) {
    for (const AspectNode& a : kg.aspect_nodes) ids.insert(a.id);
  } else {
    for (const std::string& label : request.aspect_labels) {
      const AspectNode* a = kg.FindAspectByLabel(label);
      if (!a) {
        throw ValidationError("unknown aspect '" + label + "' for product " + request.product_id,
                              kg.AspectLabels());
      }
      ids.insert(a->id);
    }
  }

  SummaryResponse resp;
  resp.subgraph = FilterSubgraph(kg, ids, request.wc);
  std::vector<std::string> labels;
  for (const AspectNode& a : kg.aspect_nodes) {
    if (!ids.count(a.id)) continue;
    labels.push_back(a.label);
    for (const Edge* e : kg.AttributeEdgesOf(a.id)) {
      TripletView t{a.label, AttributeLabel(kg, *e), e->weight};
      (e->weight > request.wc ? resp.used_triplets : resp.dropped_by_wc).push_back(std::move(t));
    }
    const auto& empty = resp.subgraph.empty_aspects;
    if (std::find(empty.begin(), empty.end(), a.id) == empty.end()) {
      resp.used_aspects.push_back(a.label);
    }
  }
  std::sort(labels.begin(), labels.end());
  std::sort(resp.used_aspects.begin(), resp.used_aspects.end());

  if (resp.subgraph.Empty()) {
    resp.status = std::string(kStatusEmpty);
  } else {
    resp.status = std::string(kStatusOk);
    const std::string key = CacheKey(request, labels);
    if (std::optional<std::string> hit = CacheGet(key)) {
      resp.summary = *hit;
      resp.cached = true;
    } else {
      if (!model_) throw ServiceUnavailableError("no model checkpoint loaded");
      GenerateOptions gen = options_.generate;
      gen.max_len = request.max_len;
      const ModelInput input = model_->Prepare(resp.subgraph, labels);
      slots_.acquire();
      try {
        resp.summary = model_->GenerateText(input, gen);
      } catch (...) {
        slots_.release();
        throw;
      }
      slots_.release();
      CachePut(key, resp.summary);
    }
  }
  resp.timing_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::steady_clock::now() - start)
                       .count();
  return resp;
}

std::string CheckpointHash(const std::filesystem::path& path) {
  return text::HexFingerprint(text::ReadFile(path));
}

SummaryRequest ParseSummaryRequest(const std::string& product_id, const std::string& body) {
  SummaryRequest req;
  req.product_id = product_id;
  if (text::Trim(body).empty()) return req;
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ValidationError("body must be a JSON object");
  if (j.contains("v") && j["v"] != 1) throw ValidationError("unsupported body version");
  if (j.contains("aspects")) {
    if (!j["aspects"].is_array()) throw ValidationError("aspects must be an array of strings");
    for (const json& a : j["aspects"]) {
      if (!a.is_string()) throw ValidationError("aspects must be an array of strings");
      req.aspect_labels.push_back(a.get<std::string>());
    }
  }
  if (j.contains("wc")) {
    if (!j["wc"].is_number()) throw ValidationError("wc must be a number");
    req.wc = j["wc"].get<double>();
  }
  if (j.contains("max_len")) {
    if (!j["max_len"].is_number_integer()) throw ValidationError("max_len must be an integer");
    req.max_len = j["max_len"].get<int>();
  }
  return req;
}

json ProductsToJson(const std::vector<ProductInfo>& products) {
  json arr = json::array();
  for (const ProductInfo& p : products) {
    arr.push_back({{"product_id", p.product_id},
                   {"category", p.category},
                   {"review_count", p.review_count},
                   {"aspect_count", p.aspect_count}});
  }
  return {{"v", 1}, {"products", std::move(arr)}};
}

json AspectsToJson(const std::string& product_id, const std::vector<AspectInfo>& aspects) {
  json arr = json::array();
  for (const AspectInfo& a : aspects) {
    json attrs = json::array();
    for (const AttributeWeight& w : a.attributes) {
      attrs.push_back({{"attribute", w.attribute}, {"weight", w.weight}});
    }
    arr.push_back({{"label", a.label}, {"aspect_id", a.aspect_id}, {"attributes", attrs}});
  }
  return {{"v", 1}, {"product_id", product_id}, {"aspects", std::move(arr)}};
}

namespace {

void Reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void ReplyError(httplib::Response& res, int status, std::string_view code,
                const std::string& message, const std::vector<std::string>* valid = nullptr) {
  json body = {{"v", 1}, {"code", code}, {"message", message}};
  if (valid) body["valid_aspects"] = *valid;
  Reply(res, status, body);
}

template <typename Fn>
void Guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const NotFoundError& e) {
    ReplyError(res, 404, "not_found", e.what());
  } catch (const ValidationError& e) {
    ReplyError(res, 400, "validation_error", e.what(), &e.valid());
  } catch (const ServiceUnavailableError& e) {
    ReplyError(res, 503, "service_unavailable", e.what());
  } catch (const std::exception& e) {
    ReplyError(res, 500, "internal", e.what());
  }
}

}  // namespace

void RegisterRoutes(httplib::Server& server, SummarizerService& service) {
  server.Get("/v1/products", [&service](const httplib::Request&, httplib::Response& res) {
    Guarded(res, [&] { Reply(res, 200, ProductsToJson(service.ListProducts())); });
  });
  server.Get(R"(/v1/products/([^/]+)/aspects)",
             [&service](const httplib::Request& req, httplib::Response& res) {
               Guarded(res, [&] {
                 const std::string id = req.matches[1];
                 Reply(res, 200, AspectsToJson(id, service.ListAspects(id)));
               });
             });
  server.Post(R"(/v1/products/([^/]+)/summary)",
              [&service](const httplib::Request& req, httplib::Response& res) {
                Guarded(res, [&] {
                  const SummaryRequest r = ParseSummaryRequest(req.matches[1], req.body);
                  Reply(res, 200, service.Summarize(r).ToJson());
                });
              });
  server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) ReplyError(res, res.status, "not_found", "no such route");
  });
}

}  // namespace kgsumm
