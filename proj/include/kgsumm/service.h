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

#ifndef KGSUMM_SERVICE_H_
#define KGSUMM_SERVICE_H_

// Read-only summarization service over a persisted store:
//   <store>/corpus/*.jsonl   product corpora
//   <store>/aspects/*.jsonl  mined aspect sets (optional)
//   <store>/kg/*.jsonl       weighted graphs

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <unordered_map>
#include <vector>

#include "kgsumm/aspect_miner.h"
#include "kgsumm/kg.h"
#include "kgsumm/model.h"
#include "json.hpp"

namespace httplib {
class Server;
}

namespace kgsumm {

struct ProductInfo {
  std::string product_id;
  std::string category;
  int review_count = 0;
  int aspect_count = 0;
};

struct AttributeWeight {
  std::string attribute;
  double weight = 0.0;
};

struct AspectInfo {
  std::string label;
  std::string aspect_id;
  std::vector<AttributeWeight> attributes;  // weight descending
};

class Store {
 public:
  // Throws ServiceUnavailableError when the corpus index is missing.
  static Store Load(const std::filesystem::path& dir);

  std::vector<ProductInfo> ListProducts() const;  // by product id
  std::vector<AspectInfo> ListAspects(const std::string& product_id) const;
  const WeightedKG& Graph(const std::string& product_id) const;  // NotFoundError
  const AspectSet* Aspects(const std::string& product_id) const;

 private:
  struct Entry {
    ProductInfo info;
    std::optional<WeightedKG> graph;
    std::optional<AspectSet> aspects;
  };
  const Entry& Find(const std::string& product_id) const;
  std::map<std::string, Entry> products_;
};

struct SummaryRequest {
  std::string product_id;
  std::vector<std::string> aspect_labels;  // empty = every aspect
  double wc = 0.0;
  int max_len = 256;
};

struct TripletView {
  std::string aspect;
  std::string attribute;
  double weight = 0.0;
};

inline constexpr std::string_view kStatusOk = "ok";
inline constexpr std::string_view kStatusEmpty = "no_content_above_threshold";

struct SummaryResponse {
  std::string status;
  std::string summary;
  std::vector<std::string> used_aspects;
  std::vector<TripletView> used_triplets;
  std::vector<TripletView> dropped_by_wc;
  SubKG subgraph;
  std::int64_t timing_ms = 0;
  bool cached = false;

  nlohmann::json ToJson() const;
};

struct ServiceOptions {
  int max_concurrency = 2;  // simultaneous generations
  std::size_t cache_capacity = 256;
  GenerateOptions generate;  // max_len is overridden per request
};

class SummarizerService {
 public:
  // `model` may be null; summaries then fail with ServiceUnavailableError.
  SummarizerService(Store store, std::shared_ptr<const Model> model,
                    std::string checkpoint_hash, ServiceOptions options = {});

  std::vector<ProductInfo> ListProducts() const { return store_.ListProducts(); }
  std::vector<AspectInfo> ListAspects(const std::string& product_id) const {
    return store_.ListAspects(product_id);
  }
  SummaryResponse Summarize(const SummaryRequest& request);

  const Store& store() const { return store_; }
  int generation_count() const;

 private:
  std::string CacheKey(const SummaryRequest& request,
                       const std::vector<std::string>& labels) const;
  std::optional<std::string> CacheGet(const std::string& key);
  void CachePut(const std::string& key, const std::string& summary);

  Store store_;
  std::shared_ptr<const Model> model_;
  std::string checkpoint_hash_;
  ServiceOptions options_;
  std::counting_semaphore<> slots_;

  mutable std::mutex mu_;
  std::list<std::pair<std::string, std::string>> lru_;
  std::unordered_map<std::string, std::list<std::pair<std::string, std::string>>::iterator>
      cache_;
  int generations_ = 0;
};

// Hex fingerprint of a checkpoint file's bytes.
std::string CheckpointHash(const std::filesystem::path& path);

// Parses a POST body; throws ValidationError on bad fields.
SummaryRequest ParseSummaryRequest(const std::string& product_id, const std::string& body);

// Installs the /v1 routes.
void RegisterRoutes(httplib::Server& server, SummarizerService& service);

nlohmann::json ProductsToJson(const std::vector<ProductInfo>& products);
nlohmann::json AspectsToJson(const std::string& product_id,
                             const std::vector<AspectInfo>& aspects);

}  // namespace kgsumm

#endif  // KGSUMM_SERVICE_H_
