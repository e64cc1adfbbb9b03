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

#include "kgsumm/aspect_miner.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "json.hpp"
#include "kgsumm/errors.h"
#include "kgsumm/kernels.h"
#include "kgsumm/text.h"

namespace kgsumm {
namespace {

using nlohmann::json;

double Cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}

class DisjointSets {
 public:
  explicit DisjointSets(int n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }
  int Find(int x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  void Union(int a, int b) {
    a = Find(a);
    b = Find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<int> parent_;
};

// Most frequent key; ties go to the shorter, then lexicographically smaller.
std::string PickLabel(const std::map<std::string, int>& counts) {
  std::string best;
  int best_count = -1;
  for (const auto& [key, count] : counts) {
    const bool better =
        count > best_count ||
        (count == best_count &&
         (key.size() < best.size() || (key.size() == best.size() && key < best)));
    if (better) {
      best = key;
      best_count = count;
    }
  }
  return best;
}

double SquaredDistance(const double* a, const double* b, int n) {
  double d = 0.0;
  for (int i = 0; i < n; ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
  return d;
}

}  // namespace

std::vector<double> CharTrigramEmbedder::Embed(std::string_view text) const {
  // Determiners are dropped and words lemmatized first, so surface variants
  // of one noun ("the rooms", "room") embed identically.
  static const std::set<std::string> kDeterminers = {
      "a", "an", "the", "this", "that", "these", "those", "my", "our",
      "your", "their", "his", "her", "its", "some", "any"};
  std::vector<double> v(dim_, 0.0);
  for (const std::string& raw : text::Split(text::Lowercase(text), ' ')) {
    if (raw.empty() || kDeterminers.count(raw)) continue;
    const std::string padded = "#" + nlp::Lemmatize(raw, nlp::Pos::kNoun) + "#";
    for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
      v[text::Fingerprint(padded.substr(i, 3)) % dim_] += 1.0;
    }
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
  }
  return v;
}

const AspectCluster* AspectSet::FindByLabel(std::string_view label) const {
  for (const AspectCluster& a : aspects) {
    if (a.label == label) return &a;
  }
  return nullptr;
}

const AspectCluster* AspectSet::FindById(std::string_view id) const {
  for (const AspectCluster& a : aspects) {
    if (a.aspect_id == id) return &a;
  }
  return nullptr;
}

std::vector<NounChunk> ExtractNounChunks(const Sentence& sentence,
                                         const nlp::DependencyParse& parse) {
  using nlp::Pos;
  std::vector<NounChunk> out;
  const auto& toks = parse.tokens;
  const int n = static_cast<int>(toks.size());
  for (int head = 0; head < n; ++head) {
    const Pos p = toks[head].pos;
    if (p != Pos::kNoun && p != Pos::kPropn) continue;
    // A chunk head is a nominal that is not itself a compound modifier.
    if (toks[head].dep == nlp::Dep::kCompound) continue;
    if (nlp::IsPersonalPronoun(toks[head].text)) continue;
    int start = head;
    while (start > 0 && toks[start - 1].head == head &&
           (toks[start - 1].dep == nlp::Dep::kCompound ||
            toks[start - 1].dep == nlp::Dep::kAmod ||
            toks[start - 1].dep == nlp::Dep::kNummod)) {
      --start;
    }
    // Adverbs modifying an adjective inside the chunk ("very good food") are
    // left out of the chunk text.
    NounChunk chunk;
    chunk.sentence_id = sentence.sentence_id;
    chunk.start = start;
    chunk.end = head + 1;
    std::vector<std::string> words;
    std::vector<std::string> core;
    for (int k = start; k <= head; ++k) {
      const std::string w = k == head ? toks[k].lemma : toks[k].text;
      words.push_back(w);
      if (toks[k].pos == Pos::kNoun || toks[k].pos == Pos::kPropn) core.push_back(w);
    }
    chunk.text = text::Join(words, " ");
    chunk.core = text::Join(core, " ");
    chunk.head_token = toks[head].lemma;
    out.push_back(std::move(chunk));
  }
  return out;
}

std::optional<NounChunk> CentralChunk(const Sentence& sentence,
                                      const SentenceEncoding& encoding,
                                      const std::vector<NounChunk>& chunks) {
  (void)sentence;
  if (chunks.empty()) return std::nullopt;
  const Matrix& att = encoding.attention;
  std::vector<double> column_mass(att.cols(), 0.0);
  for (int i = 0; i < att.rows(); ++i) {
    for (int j = 0; j < att.cols(); ++j) column_mass[j] += att(i, j);
  }
  const NounChunk* best = nullptr;
  double best_mass = -std::numeric_limits<double>::infinity();
  for (const NounChunk& c : chunks) {
    if (c.start < 0 || c.end > att.cols() || c.end <= c.start) {
      throw std::invalid_argument("chunk span outside attention matrix for " +
                                  c.sentence_id);
    }
    double mass = 0.0;
    for (int p = c.start; p < c.end; ++p) mass += column_mass[p];
    mass /= (c.end - c.start);
    const bool earlier_tie =
        best && mass == best_mass && c.start < best->start;
    if (mass > best_mass || earlier_tie) {
      best = &c;
      best_mass = mass;
    }
  }
  return *best;
}

std::vector<ChunkGroup> MergeChunks(const std::vector<NounChunk>& chunks,
                                    double threshold,
                                    const ChunkEmbedder& embedder) {
  if (chunks.empty()) return {};
  std::vector<std::string> keys;
  std::map<std::string, int> key_index;
  std::vector<int> chunk_key(chunks.size());
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    const std::string& key = chunks[i].key();
    auto [it, inserted] = key_index.emplace(key, static_cast<int>(keys.size()));
    if (inserted) keys.push_back(key);
    chunk_key[i] = it->second;
  }
  std::vector<std::vector<double>> emb;
  emb.reserve(keys.size());
  for (const std::string& k : keys) emb.push_back(embedder.Embed(k));

  const int u = static_cast<int>(keys.size());
  DisjointSets sets(u);
  for (int a = 0; a < u; ++a) {
    for (int b = a + 1; b < u; ++b) {
      if (Cosine(emb[a], emb[b]) >= threshold) sets.Union(a, b);
    }
  }

  std::map<int, ChunkGroup> by_root;
  std::map<int, std::map<std::string, int>> counts;
  std::map<int, std::set<std::string>> variants;
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    const int root = sets.Find(chunk_key[i]);
    by_root[root].members.push_back(chunks[i]);
    counts[root][chunks[i].key()]++;
    variants[root].insert(chunks[i].key());
    variants[root].insert(chunks[i].text);
  }
  std::vector<ChunkGroup> out;
  for (auto& [root, group] : by_root) {
    group.label = PickLabel(counts[root]);
    group.variants.assign(variants[root].begin(), variants[root].end());
    out.push_back(std::move(group));
  }
  std::sort(out.begin(), out.end(),
            [](const ChunkGroup& a, const ChunkGroup& b) { return a.label < b.label; });
  return out;
}

namespace {

// One seeded k-means++ / Lloyd run; returns the assignment and sets the
// within-cluster sum of squares.
std::vector<int> KMeansRun(const Matrix& points, int k, std::mt19937_64& rng,
                           int max_iterations, Matrix* centroids_out, double* inertia) {
  const int n = points.rows();
  const int d = points.cols();
  Matrix centroids(k, d);
  std::vector<char> chosen(n, 0);
  auto set_centroid = [&](int c, int p) {
    for (int j = 0; j < d; ++j) centroids(c, j) = points(p, j);
    chosen[p] = 1;
  };
  set_centroid(0, static_cast<int>(std::uniform_int_distribution<int>(0, n - 1)(rng)));
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (int p = 0; p < n; ++p) {
      nearest[p] = std::min(nearest[p], SquaredDistance(points.row(p), centroids.row(c - 1), d));
      total += nearest[p];
    }
    int pick = -1;
    if (total > 0.0) {
      double r = std::uniform_real_distribution<double>(0.0, total)(rng);
      for (int p = 0; p < n; ++p) {
        r -= nearest[p];
        if (r <= 0.0 && nearest[p] > 0.0) {
          pick = p;
          break;
        }
      }
      if (pick < 0) {
        for (int p = n - 1; p >= 0; --p) {
          if (nearest[p] > 0.0) {
            pick = p;
            break;
          }
        }
      }
    } else {
      for (int p = 0; p < n && pick < 0; ++p) {
        if (!chosen[p]) pick = p;
      }
    }
    set_centroid(c, pick);
  }

  std::vector<int> assign;
  std::vector<int> previous;
  for (int iter = 0; iter < max_iterations; ++iter) {
    kernels::AssignNearest(points, centroids, &assign);
    if (assign == previous) break;
    Matrix sums(k, d);
    std::vector<int> counts(k, 0);
    for (int p = 0; p < n; ++p) {
      counts[assign[p]]++;
      for (int j = 0; j < d; ++j) sums(assign[p], j) += points(p, j);
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      for (int j = 0; j < d; ++j) centroids(c, j) = sums(c, j) / counts[c];
    }
    previous = assign;
  }
  kernels::AssignNearest(points, centroids, &assign);
  *inertia = 0.0;
  for (int p = 0; p < n; ++p) *inertia += SquaredDistance(points.row(p), centroids.row(assign[p]), d);
  *centroids_out = std::move(centroids);
  return assign;
}

}  // namespace

std::vector<int> ClusterEmbeddings(const Matrix& points, int k, std::uint64_t seed,
                                   int max_iterations, Matrix* centroids_out, int restarts) {
  const int n = points.rows();
  if (k <= 0 || n == 0) throw std::invalid_argument("ClusterEmbeddings needs k > 0 and points");
  k = std::min(k, n);
  std::mt19937_64 rng(seed);
  std::vector<int> best;
  Matrix best_centroids;
  double best_inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(1, restarts); ++r) {
    Matrix centroids;
    double inertia = 0.0;
    std::vector<int> assign = KMeansRun(points, k, rng, max_iterations, &centroids, &inertia);
    if (inertia < best_inertia) {
      best_inertia = inertia;
      best = std::move(assign);
      best_centroids = std::move(centroids);
    }
  }
  if (centroids_out) *centroids_out = std::move(best_centroids);
  return best;
}

std::string AspectIdFor(std::string_view product_id, std::string_view label) {
  std::string id(product_id);
  id += "::";
  for (char c : label) id.push_back(c == ' ' ? '_' : c);
  return id;
}

AspectSet MineAspects(const ProductCorpus& corpus, const SentenceEncoder& encoder,
                      const MinerConfig& config, const ChunkEmbedder* embedder) {
  CharTrigramEmbedder default_embedder;
  if (!embedder) embedder = &default_embedder;
  nlp::RuleParser parser;

  AspectSet result;
  result.product_id = corpus.product_id;

  std::vector<const Sentence*> sentences;
  for (const Review& r : corpus.reviews) {
    for (const Sentence& s : r.sentences) sentences.push_back(&s);
  }
  if (sentences.empty()) {
    result.warnings.push_back("no sentences");
    return result;
  }

  std::vector<std::vector<double>> embeddings(sentences.size());
  std::vector<NounChunk> central;
  std::vector<int> central_of(sentences.size(), -1);
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    const std::vector<std::string> tokens = text::Tokenize(sentences[i]->text);
    const nlp::DependencyParse parse = parser.ParseTokens(tokens);
    SentenceEncoding enc = encoder.Encode(*sentences[i], tokens);
    if (!std::all_of(enc.embedding.begin(), enc.embedding.end(),
                     [](double v) { return std::isfinite(v); })) {
      throw std::runtime_error("non-finite sentence embedding for " +
                               sentences[i]->sentence_id);
    }
    embeddings[i] = std::move(enc.embedding);
    const std::vector<NounChunk> chunks = ExtractNounChunks(*sentences[i], parse);
    if (auto c = CentralChunk(*sentences[i], enc, chunks)) {
      central_of[i] = static_cast<int>(central.size());
      central.push_back(*c);
    }
  }

  const std::vector<ChunkGroup> groups =
      MergeChunks(central, config.merge_threshold, *embedder);
  result.requested_k = static_cast<int>(groups.size());
  if (groups.empty()) {
    result.warnings.push_back("no noun chunks; no aspects");
    return result;
  }
  std::map<std::string, int> group_of_key;
  for (int g = 0; g < static_cast<int>(groups.size()); ++g) {
    for (const NounChunk& m : groups[g].members) group_of_key[m.key()] = g;
  }
  std::vector<int> sentence_group(sentences.size(), -1);
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    if (central_of[i] >= 0) sentence_group[i] = group_of_key.at(central[central_of[i]].key());
  }

  int k = static_cast<int>(groups.size());
  if (k > static_cast<int>(sentences.size())) {
    result.warnings.push_back("k clamped from " + std::to_string(k) + " to " +
                              std::to_string(sentences.size()));
    k = static_cast<int>(sentences.size());
  }

  const int dim = static_cast<int>(embeddings.front().size());
  Matrix points(static_cast<int>(sentences.size()), dim);
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    if (static_cast<int>(embeddings[i].size()) != dim) {
      throw std::invalid_argument("sentence embeddings differ in dimension");
    }
    for (int j = 0; j < dim; ++j) points(static_cast<int>(i), j) = embeddings[i][j];
  }
  Matrix centroids;
  std::vector<int> assign =
      ClusterEmbeddings(points, k, config.seed, config.max_iterations, &centroids,
                        config.restarts);

  // Working clusters: member sentence indices and dominant group.
  struct Working {
    std::vector<int> members;
    int group = -1;
    bool alive = true;
  };
  std::vector<Working> clusters(k);
  for (std::size_t i = 0; i < assign.size(); ++i) {
    clusters[assign[i]].members.push_back(static_cast<int>(i));
  }
  auto centroid_of = [&](const Working& w) {
    std::vector<double> c(dim, 0.0);
    for (int m : w.members) {
      for (int j = 0; j < dim; ++j) c[j] += points(m, j);
    }
    for (double& v : c) v /= std::max<std::size_t>(1, w.members.size());
    return c;
  };
  auto distance = [&](const std::vector<double>& a, const std::vector<double>& b) {
    return SquaredDistance(a.data(), b.data(), dim);
  };
  auto merge_into = [&](int from, int to) {
    for (int m : clusters[from].members) clusters[to].members.push_back(m);
    clusters[from].members.clear();
    clusters[from].alive = false;
  };
  auto nearest_alive = [&](int from, bool require_label) {
    const std::vector<double> c = centroid_of(clusters[from]);
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int o = 0; o < k; ++o) {
      if (o == from || !clusters[o].alive || clusters[o].members.empty()) continue;
      if (require_label && clusters[o].group < 0) continue;
      const double dd = distance(c, centroid_of(clusters[o]));
      if (dd < best_d) {
        best_d = dd;
        best = o;
      }
    }
    return best;
  };

  for (Working& w : clusters) {
    w.alive = !w.members.empty();
    std::map<int, int> counts;
    for (int m : w.members) {
      if (sentence_group[m] >= 0) counts[sentence_group[m]]++;
    }
    int best_count = 0;
    for (const auto& [g, c] : counts) {
      if (c > best_count) {
        best_count = c;
        w.group = g;
      }
    }
  }
  // Clusters without any chunk-bearing sentence join the nearest labeled one.
  for (int c = 0; c < k; ++c) {
    if (!clusters[c].alive || clusters[c].group >= 0) continue;
    const int to = nearest_alive(c, true);
    if (to >= 0) merge_into(c, to);
  }
  // One cluster per label.
  for (int c = 0; c < k; ++c) {
    if (!clusters[c].alive) continue;
    for (int o = c + 1; o < k; ++o) {
      if (clusters[o].alive && clusters[o].group == clusters[c].group) merge_into(o, c);
    }
  }
  // Minimum support.
  while (true) {
    int alive = 0;
    int smallest = -1;
    for (int c = 0; c < k; ++c) {
      if (!clusters[c].alive) continue;
      ++alive;
      if (static_cast<int>(clusters[c].members.size()) < config.min_support &&
          (smallest < 0 || clusters[c].members.size() < clusters[smallest].members.size())) {
        smallest = c;
      }
    }
    if (alive <= 1 || smallest < 0) break;
    const int to = nearest_alive(smallest, true);
    if (to < 0) break;
    merge_into(smallest, to);
    result.warnings.push_back("merged under-supported aspect '" +
                              groups[clusters[smallest].group].label + "'");
  }

  for (Working& w : clusters) {
    if (!w.alive || w.group < 0) continue;
    std::sort(w.members.begin(), w.members.end());
    AspectCluster a;
    a.label = groups[w.group].label;
    a.aspect_id = AspectIdFor(corpus.product_id, a.label);
    for (int m : w.members) a.sentence_ids.push_back(sentences[m]->sentence_id);
    a.variants = groups[w.group].variants;
    a.centroid = centroid_of(w);
    result.aspects.push_back(std::move(a));
  }
  std::sort(result.aspects.begin(), result.aspects.end(),
            [](const AspectCluster& a, const AspectCluster& b) { return a.label < b.label; });
  result.k = static_cast<int>(result.aspects.size());
  return result;
}

std::string AspectSetToJsonLines(const AspectSet& set) {
  std::string out;
  for (const AspectCluster& a : set.aspects) {
    json j = {{"product_id", set.product_id},
              {"aspect_id", a.aspect_id},
              {"label", a.label},
              {"sentence_ids", a.sentence_ids},
              {"variants", a.variants}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

AspectSet AspectSetFromJsonLines(std::string_view product_id,
                                 const std::vector<std::string>& lines) {
  AspectSet set;
  set.product_id = std::string(product_id);
  for (const std::string& line : lines) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw IoError("aspect line is not JSON");
    try {
      AspectCluster a;
      a.aspect_id = j.at("aspect_id").get<std::string>();
      a.label = j.at("label").get<std::string>();
      a.sentence_ids = j.at("sentence_ids").get<std::vector<std::string>>();
      if (j.contains("variants")) a.variants = j["variants"].get<std::vector<std::string>>();
      if (set.product_id.empty() && j.contains("product_id")) {
        set.product_id = j["product_id"].get<std::string>();
      }
      set.aspects.push_back(std::move(a));
    } catch (const json::exception& e) {
      throw IoError(std::string("malformed aspect record: ") + e.what());
    }
  }
  set.k = static_cast<int>(set.aspects.size());
  set.requested_k = set.k;
  return set;
}

void WriteAspectSets(const std::filesystem::path& dir,
                     const std::vector<AspectSet>& sets) {
  std::filesystem::create_directories(dir);
  for (const AspectSet& s : sets) {
    text::WriteFileAtomic(dir / (text::FileStem(s.product_id) + ".jsonl"),
                          AspectSetToJsonLines(s));
  }
}

std::vector<AspectSet> ReadAspectSets(const std::filesystem::path& dir) {
  std::vector<AspectSet> out;
  for (const auto& path : text::ListFiles(dir, ".jsonl")) {
    std::vector<std::string> lines = text::ReadLines(path);
    if (lines.empty()) continue;
    out.push_back(AspectSetFromJsonLines("", lines));
  }
  std::sort(out.begin(), out.end(), [](const AspectSet& a, const AspectSet& b) {
    return a.product_id < b.product_id;
  });
  return out;
}

}  // namespace kgsumm
