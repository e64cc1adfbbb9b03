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

#include "kgsumm/pairs.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "kgsumm/errors.h"
#include "kgsumm/text.h"

namespace kgsumm {

using nlohmann::json;

SentenceIndex::SentenceIndex(const std::vector<ProductCorpus>& corpora) {
  for (const ProductCorpus& c : corpora) Add(c);
}

void SentenceIndex::Add(const ProductCorpus& corpus) {
  for (const Review& r : corpus.reviews) {
    for (const Sentence& s : r.sentences) {
      refs_[s.sentence_id] = SentenceRef{r.review_id, s.ordinal, s.text};
    }
  }
}

const SentenceRef* SentenceIndex::Find(const std::string& sentence_id) const {
  auto it = refs_.find(sentence_id);
  return it == refs_.end() ? nullptr : &it->second;
}

TrainingPair MakePair(const WeightedKG& kg, const std::vector<std::string>& aspect_ids,
                      const SentenceIndex& sentences, double wc) {
  TrainingPair pair;
  pair.product_id = kg.product_id;
  pair.graph = FilterSubgraph(kg, {aspect_ids.begin(), aspect_ids.end()}, wc);
  std::vector<std::pair<std::string, std::string>> labelled;
  for (const std::string& id : aspect_ids) labelled.emplace_back(kg.FindAspect(id)->label, id);
  std::sort(labelled.begin(), labelled.end());
  for (const auto& [label, id] : labelled) {
    pair.aspect_labels.push_back(label);
    pair.aspect_ids.push_back(id);
  }
  pair.pair_id = kg.product_id + "#" + text::Join(pair.aspect_labels, "|");

  std::set<std::string> sentence_ids;
  for (const Edge* e : pair.graph.graph.AttributeEdges()) {
    sentence_ids.insert(e->provenance.begin(), e->provenance.end());
  }
  struct Keyed {
    const SentenceRef* ref;
    std::string id;
  };
  std::vector<Keyed> ordered;
  for (const std::string& id : sentence_ids) {
    const SentenceRef* ref = sentences.Find(id);
    if (!ref) throw std::invalid_argument("provenance sentence " + id + " not in index");
    ordered.push_back({ref, id});
  }
  std::sort(ordered.begin(), ordered.end(), [](const Keyed& a, const Keyed& b) {
    if (a.ref->review_id != b.ref->review_id) return a.ref->review_id < b.ref->review_id;
    return a.ref->ordinal < b.ref->ordinal;
  });
  std::vector<std::string> texts;
  for (const Keyed& k : ordered) {
    pair.provenance.push_back(k.id);
    texts.push_back(k.ref->text);
  }
  pair.pseudo_summary = text::Join(texts, " ");
  return pair;
}

std::vector<TrainingPair> BuildPairs(const WeightedKG& kg, const AspectSet& aspect_set,
                                     const SentenceIndex& sentences,
                                     const PairBuildConfig& config,
                                     PairBuildReport* report) {
  PairBuildReport local;
  PairBuildReport& rep = report ? *report : local;
  if (config.k_min < 1 || (config.k_max != 0 && config.k_max < config.k_min)) {
    throw ValidationError("pair config needs 1 <= k_min <= k_max");
  }
  std::vector<std::string> ids = kg.AspectIds();
  if (ids.empty()) throw EmptyGraphError("graph for " + kg.product_id + " has no aspects");
  for (const std::string& id : ids) {
    if (!aspect_set.aspects.empty() && !aspect_set.FindById(id)) {
      throw std::invalid_argument("graph aspect " + id + " missing from aspect set");
    }
  }
  const int count = static_cast<int>(ids.size());
  const int k_hi = config.k_max == 0 ? count : std::min(config.k_max, count);
  int k_lo = config.k_min;
  if (k_lo > k_hi) {
    ++rep.clamped;
    rep.warnings.push_back(kg.product_id + ": k_min " + std::to_string(k_lo) +
                           " clamped to " + std::to_string(k_hi));
    k_lo = k_hi;
  }

  // Seed per product so parallel or reordered processing never changes draws.
  std::mt19937_64 rng(config.seed ^ text::Fingerprint(kg.product_id));
  std::uniform_int_distribution<int> k_dist(k_lo, k_hi);
  std::set<std::vector<std::string>> seen;
  std::vector<TrainingPair> out;
  const int max_draws = std::max(1, config.samples_per_product) * 20;
  for (int draw = 0; draw < max_draws &&
                     static_cast<int>(out.size()) < config.samples_per_product;
       ++draw) {
    const int k = k_dist(rng);
    std::vector<std::string> pool = ids;
    std::shuffle(pool.begin(), pool.end(), rng);
    std::vector<std::string> chosen(pool.begin(), pool.begin() + k);
    std::sort(chosen.begin(), chosen.end());
    if (!seen.insert(chosen).second) {
      ++rep.duplicate_draws;
      continue;
    }
    TrainingPair pair = MakePair(kg, chosen, sentences, config.wc_train);
    if (pair.graph.Empty()) continue;
    out.push_back(std::move(pair));
  }
  std::sort(out.begin(), out.end(), [](const TrainingPair& a, const TrainingPair& b) {
    return a.pair_id < b.pair_id;
  });
  return out;
}

PairSplits SplitPairs(const std::vector<TrainingPair>& pairs,
                      const std::array<double, 3>& ratios, std::uint64_t seed) {
  const double total = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(total - 1.0) > 1e-9 ||
      std::any_of(ratios.begin(), ratios.end(), [](double r) { return r < 0.0; })) {
    throw ValidationError("split ratios must be non-negative and sum to 1");
  }
  std::set<std::string> product_set;
  for (const TrainingPair& p : pairs) product_set.insert(p.product_id);
  std::vector<std::string> products(product_set.begin(), product_set.end());
  const int n = static_cast<int>(products.size());
  const int wanted =
      static_cast<int>(std::count_if(ratios.begin(), ratios.end(), [](double r) { return r > 0.0; }));
  if (n < wanted) {
    throw ValidationError("cannot split " + std::to_string(n) + " products into " +
                          std::to_string(wanted) + " splits");
  }
  std::mt19937_64 rng(seed);
  std::shuffle(products.begin(), products.end(), rng);

  std::array<int, 3> counts{};
  counts[1] = static_cast<int>(std::lround(ratios[1] * n));
  counts[2] = static_cast<int>(std::lround(ratios[2] * n));
  for (int s : {1, 2}) {
    if (ratios[s] > 0.0 && counts[s] == 0) counts[s] = 1;
  }
  counts[0] = n - counts[1] - counts[2];
  if (ratios[0] > 0.0 && counts[0] < 1) {
    // Rounding starved train; take back from the larger held-out split.
    const int donor = counts[1] >= counts[2] ? 1 : 2;
    counts[donor] -= 1 - counts[0];
    counts[0] = 1;
  }
  std::map<std::string, int> split_of;
  int offset = 0;
  for (int s = 0; s < 3; ++s) {
    for (int i = 0; i < counts[s]; ++i) split_of[products[offset + i]] = s;
    offset += counts[s];
  }
  PairSplits out;
  for (const TrainingPair& p : pairs) {
    switch (split_of.at(p.product_id)) {
      case 0: out.train.push_back(p); break;
      case 1: out.valid.push_back(p); break;
      default: out.test.push_back(p); break;
    }
  }
  return out;
}

json PairToJson(const TrainingPair& pair) {
  return {{"pair_id", pair.pair_id},
          {"product_id", pair.product_id},
          {"aspect_labels", pair.aspect_labels},
          {"aspect_ids", pair.aspect_ids},
          {"graph", SubKgToJson(pair.graph)},
          {"pseudo_summary", pair.pseudo_summary},
          {"provenance", pair.provenance}};
}

TrainingPair PairFromJson(const json& j) {
  try {
    TrainingPair p;
    p.pair_id = j.at("pair_id").get<std::string>();
    p.product_id = j.at("product_id").get<std::string>();
    p.aspect_labels = j.at("aspect_labels").get<std::vector<std::string>>();
    if (j.contains("aspect_ids")) p.aspect_ids = j["aspect_ids"].get<std::vector<std::string>>();
    p.graph = SubKgFromJson(j.at("graph"));
    p.pseudo_summary = j.at("pseudo_summary").get<std::string>();
    if (j.contains("provenance")) p.provenance = j["provenance"].get<std::vector<std::string>>();
    return p;
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed pair: ") + e.what());
  }
}

void WritePairs(const std::filesystem::path& path, const std::vector<TrainingPair>& pairs) {
  std::string out;
  for (const TrainingPair& p : pairs) out += PairToJson(p).dump() + "\n";
  text::WriteFileAtomic(path, out);
}

std::vector<TrainingPair> ReadPairs(const std::filesystem::path& path) {
  std::vector<TrainingPair> out;
  for (const std::string& line : text::ReadLines(path)) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw IoError("pair line is not JSON in " + path.string());
    out.push_back(PairFromJson(j));
  }
  return out;
}

}  // namespace kgsumm
