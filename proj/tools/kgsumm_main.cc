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

// kgsumm: command-line driver for the summarization pipeline.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "httplib.h"
#include "json.hpp"
#include "kgsumm/aspect_miner.h"
#include "kgsumm/corpus.h"
#include "kgsumm/errors.h"
#include "kgsumm/eval.h"
#include "kgsumm/kg.h"
#include "kgsumm/model.h"
#include "kgsumm/pairs.h"
#include "kgsumm/service.h"
#include "kgsumm/text.h"
#include "kgsumm/trainer.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace kgsumm {
namespace {

std::vector<std::string> SplitList(const std::string& s) {
  std::vector<std::string> out;
  for (const std::string& part : text::Split(s, ',')) {
    std::string t = text::Trim(part);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

void PrintJson(const json& j) { std::cout << j.dump(2) << "\n"; }

std::vector<fs::path> ExpandInputs(const std::vector<std::string>& inputs) {
  std::vector<fs::path> out;
  for (const std::string& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(in)) {
        if (e.is_regular_file()) files.push_back(e.path());
      }
      std::sort(files.begin(), files.end());
      out.insert(out.end(), files.begin(), files.end());
    } else {
      out.emplace_back(in);
    }
  }
  return out;
}

int Ingest(const std::string& source, const std::vector<std::string>& inputs,
           const std::string& out, const CorpusOptions& options) {
  const LoadedRecords loaded = LoadDatasets(ExpandInputs(inputs), ParseSource(source));
  BuildReport report;
  const std::vector<ProductCorpus> corpora = BuildCorpora(loaded.records, options, &report);
  WriteCorpora(out, corpora);
  PrintJson({{"rows", loaded.stats.rows},
             {"malformed", loaded.stats.malformed},
             {"length_filtered", report.length_filtered},
             {"duplicates", report.duplicates},
             {"sparse_product_reviews", report.sparse_product_reviews},
             {"sparse_products", report.sparse_products},
             {"emitted_reviews", report.emitted_reviews},
             {"products", corpora.size()}});
  return 0;
}

int MineAspectsCmd(const std::string& corpus_dir, const std::string& out, const MinerConfig& config,
                   const std::string& encoder_path, int d_model) {
  const std::vector<ProductCorpus> corpora = ReadCorpora(corpus_dir);
  std::unique_ptr<Model> model;
  if (!encoder_path.empty()) {
    model = std::make_unique<Model>(Model::Load(encoder_path));
  } else {
    std::vector<std::string> texts;
    for (const ProductCorpus& c : corpora) {
      for (const Review& r : c.reviews) texts.push_back(r.text);
    }
    ModelConfig mc;
    mc.d_model = d_model;
    mc.ffn_dim = 2 * d_model;
    mc.seed = config.seed;
    model = std::make_unique<Model>(mc, Vocab::Build(texts));
  }
  const NeuralSentenceEncoder encoder(*model);
  std::vector<AspectSet> sets(corpora.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < corpora.size(); ++i) {
    sets[i] = MineAspects(corpora[i], encoder, config);
  }
  WriteAspectSets(out, sets);
  json summary = json::array();
  for (const AspectSet& s : sets) {
    summary.push_back({{"product_id", s.product_id}, {"k", s.k}, {"warnings", s.warnings}});
  }
  PrintJson({{"products", summary}});
  return 0;
}

std::map<std::string, AspectSet> AspectsByProduct(const fs::path& dir) {
  std::map<std::string, AspectSet> out;
  for (AspectSet& s : ReadAspectSets(dir)) out[s.product_id] = std::move(s);
  return out;
}

int BuildKg(const std::string& corpus_dir, const std::string& aspects_dir, const std::string& out) {
  const std::vector<ProductCorpus> corpora = ReadCorpora(corpus_dir);
  const auto aspects = AspectsByProduct(aspects_dir);
  std::vector<WeightedKG> graphs;
  json skipped = json::array();
  for (const ProductCorpus& c : corpora) {
    auto it = aspects.find(c.product_id);
    if (it == aspects.end()) {
      skipped.push_back({{"product_id", c.product_id}, {"reason", "no aspect file"}});
      continue;
    }
    try {
      graphs.push_back(AssembleGraph(c, it->second, ExtractProductTriplets(c, it->second)));
    } catch (const EmptyGraphError& e) {
      skipped.push_back({{"product_id", c.product_id}, {"reason", e.what()}});
    }
  }
  WriteGraphs(out, graphs);
  PrintJson({{"graphs", graphs.size()}, {"skipped", skipped}});
  return 0;
}

std::set<std::string> ResolveAspects(const WeightedKG& kg, const std::vector<std::string>& names) {
  std::set<std::string> ids;
  if (names.empty()) {
    for (const AspectNode& a : kg.aspect_nodes) ids.insert(a.id);
    return ids;
  }
  for (const std::string& n : names) {
    if (const AspectNode* a = kg.FindAspectByLabel(n)) {
      ids.insert(a->id);
    } else if (kg.FindAspect(n)) {
      ids.insert(n);
    } else {
      throw ValidationError("unknown aspect '" + n + "'", kg.AspectLabels());
    }
  }
  return ids;
}

int FilterKg(const std::string& graph, const std::string& aspects, double wc,
             const std::string& out) {
  const WeightedKG kg = ReadGraphFile(graph);
  const SubKG sub = FilterSubgraph(kg, ResolveAspects(kg, SplitList(aspects)), wc);
  text::WriteFileAtomic(out, SubKgToJson(sub).dump() + "\n");
  PrintJson({{"edges", sub.graph.AttributeEdges().size()}, {"empty_aspects", sub.empty_aspects}});
  return 0;
}

int BuildPairsCmd(const std::string& kg_dir, const std::string& aspects_dir,
                  const std::string& corpus_dir, const std::string& out,
                  const PairBuildConfig& config, const std::string& split) {
  const SentenceIndex index(ReadCorpora(corpus_dir));
  const auto aspects = AspectsByProduct(aspects_dir);
  std::vector<TrainingPair> pairs;
  json warnings = json::array();
  for (const WeightedKG& kg : ReadGraphs(kg_dir)) {
    auto it = aspects.find(kg.product_id);
    const AspectSet empty;
    PairBuildReport report;
    std::vector<TrainingPair> p =
        BuildPairs(kg, it == aspects.end() ? empty : it->second, index, config, &report);
    for (const std::string& w : report.warnings) warnings.push_back(w);
    pairs.insert(pairs.end(), p.begin(), p.end());
  }
  const std::vector<std::string> parts = SplitList(split);
  if (parts.size() != 3) throw ConfigError("--split needs three comma-separated ratios");
  const PairSplits splits =
      SplitPairs(pairs, {std::stod(parts[0]), std::stod(parts[1]), std::stod(parts[2])},
                 config.seed);
  fs::create_directories(out);
  WritePairs(fs::path(out) / "train.jsonl", splits.train);
  WritePairs(fs::path(out) / "valid.jsonl", splits.valid);
  WritePairs(fs::path(out) / "test.jsonl", splits.test);
  PrintJson({{"train", splits.train.size()},
             {"valid", splits.valid.size()},
             {"test", splits.test.size()},
             {"warnings", warnings}});
  return 0;
}

PairSplits ReadSplits(const fs::path& dir) {
  PairSplits s;
  auto read = [&](const char* name) {
    const fs::path p = dir / name;
    return fs::exists(p) ? ReadPairs(p) : std::vector<TrainingPair>{};
  };
  s.train = read("train.jsonl");
  s.valid = read("valid.jsonl");
  s.test = read("test.jsonl");
  return s;
}

int TrainCmd(const std::string& pairs_dir, const std::string& out, const std::string& config_path) {
  TrainConfig config;
  if (!config_path.empty()) {
    json j = json::parse(text::ReadFile(config_path), nullptr, false);
    if (j.is_discarded()) throw ConfigError("config is not JSON: " + config_path);
    config = TrainConfig::FromJson(j);
  }
  const TrainReport report = Train(ReadSplits(pairs_dir), config, out);
  PrintJson(report.ToJson());
  return 0;
}

int EvaluateCmd(const std::string& checkpoint, const std::string& pairs_dir,
                const std::string& split, const std::string& references,
                const std::string& aspects_dir, int max_len, int beam, const std::string& out) {
  const Model model = Model::Load(checkpoint);
  const PairSplits splits = ReadSplits(pairs_dir);
  const std::vector<TrainingPair>& pairs =
      split == "train" ? splits.train : split == "valid" ? splits.valid : splits.test;
  EvalInputs inputs;
  if (!references.empty()) inputs.references = ReadReferences(references);
  if (!aspects_dir.empty()) inputs.aspects = AspectsByProduct(aspects_dir);
  GenerateOptions gen;
  gen.max_len = max_len > 0 ? max_len : model.config().max_len;
  if (beam > 1) {
    gen.mode = DecodeMode::kBeam;
    gen.beam_size = beam;
  }
  const EvalReport report = EvaluateCheckpoint(model, pairs, gen, inputs);
  const json j = report.ToJson();
  if (!out.empty()) text::WriteFileAtomic(out, j.dump(2) + "\n");
  PrintJson(report.summary.ToJson());
  return 0;
}

// JSONL {"id"|"product_id": ..., <field>: ...}
std::map<std::string, json> ReadKeyed(const fs::path& path, const char* field) {
  std::map<std::string, json> out;
  for (const std::string& line : text::ReadLines(path)) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw IoError("not a JSON line in " + path.string());
    const std::string id = j.contains("id") ? j["id"].get<std::string>()
                                            : j.value("product_id", std::string());
    if (id.empty() || !j.contains(field)) {
      throw IoError(std::string("line needs an id and '") + field + "' in " + path.string());
    }
    out[id] = j[field];
  }
  return out;
}

int ScoreCmd(const std::string& candidates, const std::string& references,
             const std::string& aspects) {
  const auto cands = ReadKeyed(candidates, "summary");
  const auto refs = ReadKeyed(references, "summaries");
  std::map<std::string, json> aspect_rows;
  if (!aspects.empty()) {
    for (const std::string& line : text::ReadLines(aspects)) {
      json j = json::parse(line, nullptr, false);
      if (j.is_discarded()) throw IoError("not a JSON line in " + aspects);
      aspect_rows[j.contains("id") ? j["id"].get<std::string>()
                                   : j.value("product_id", std::string())] = j;
    }
  }
  std::vector<RougeScore> rouge;
  std::vector<Prf> coverage;
  json missing = json::array();
  for (const auto& [id, summary] : cands) {
    auto r = refs.find(id);
    if (r == refs.end()) {
      missing.push_back(id);
      continue;
    }
    const std::string text = summary.get<std::string>();
    rouge.push_back(Rouge(text, r->second.get<std::vector<std::string>>()));
    auto a = aspect_rows.find(id);
    if (a != aspect_rows.end()) {
      const auto labels = a->second.at("aspects").get<std::vector<std::string>>();
      std::map<std::string, std::vector<std::string>> lexicon;
      for (const std::string& l : labels) lexicon[l];
      if (a->second.contains("variants")) {
        for (const auto& [label, forms] : a->second["variants"].items()) {
          for (const auto& f : forms) lexicon[label].push_back(f.get<std::string>());
        }
      }
      coverage.push_back(AspectCoverage(text, {labels.begin(), labels.end()},
                                        LexiconExtractor(lexicon)));
    }
  }
  json j = Summarize(rouge, coverage).ToJson();
  j["v"] = 1;
  j["unmatched_candidates"] = missing;
  PrintJson(j);
  return 0;
}

std::unique_ptr<SummarizerService> OpenService(const std::string& store,
                                               const std::string& checkpoint,
                                               int max_concurrency) {
  std::shared_ptr<const Model> model;
  std::string hash;
  if (!checkpoint.empty()) {
    model = std::make_shared<const Model>(Model::Load(checkpoint));
    hash = CheckpointHash(checkpoint);
  }
  ServiceOptions options;
  options.max_concurrency = max_concurrency;
  return std::make_unique<SummarizerService>(Store::Load(store), model, hash, options);
}

int Serve(const std::string& store, const std::string& checkpoint, const std::string& host,
          int port, int max_concurrency) {
  auto service = OpenService(store, checkpoint, max_concurrency);
  httplib::Server server;
  RegisterRoutes(server, *service);
  std::cerr << "listening on " << host << ":" << port << "\n";
  if (!server.listen(host, port)) {
    std::cerr << "cannot listen on " << host << ":" << port << "\n";
    return 1;
  }
  return 0;
}

int SummarizeCmd(const std::string& store, const std::string& checkpoint,
                 const SummaryRequest& request) {
  auto service = OpenService(store, checkpoint, 1);
  PrintJson(service->Summarize(request).ToJson());
  return 0;
}

int ErrorExit(std::string_view code, const std::string& message,
              const std::vector<std::string>* valid = nullptr) {
  json j = {{"v", 1}, {"code", code}, {"message", message}};
  if (valid) j["valid_aspects"] = *valid;
  std::cerr << j.dump() << "\n";
  return code == "validation_error" || code == "not_found" ? 2 : 1;
}

}  // namespace
}  // namespace kgsumm

int main(int argc, char** argv) {
  using namespace kgsumm;
  CLI::App app{"kgsumm: aspect-controllable opinion summarization over review graphs"};
  app.require_subcommand(1);

  // ingest
  std::string source, out;
  std::vector<std::string> inputs;
  CorpusOptions corpus_options;
  auto* ingest = app.add_subcommand("ingest", "Load raw reviews and write per-product corpora");
  ingest->add_option("--source", source, "amazon|space|yelp")->required();
  ingest->add_option("--input", inputs, "Input file or directory (repeatable)")->required();
  ingest->add_option("--out", out, "Output corpus directory")->required();
  ingest->add_option("--min-chars", corpus_options.min_chars, "Minimum review length");
  ingest->add_option("--min-reviews", corpus_options.min_reviews, "Minimum reviews per product");

  // mine-aspects
  std::string corpus_dir, encoder_path;
  MinerConfig miner;
  int encoder_dim = 64;
  auto* mine = app.add_subcommand("mine-aspects", "Cluster sentences into labelled aspects");
  mine->add_option("--corpus", corpus_dir)->required();
  mine->add_option("--out", out)->required();
  mine->add_option("--merge-threshold", miner.merge_threshold);
  mine->add_option("--seed", miner.seed);
  mine->add_option("--min-support", miner.min_support);
  mine->add_option("--encoder", encoder_path, "Checkpoint whose text encoder embeds sentences");
  mine->add_option("--encoder-dim", encoder_dim, "Width of the fresh encoder without --encoder");

  // build-kg
  std::string aspects_dir;
  auto* build_kg = app.add_subcommand("build-kg", "Extract weighted triplets into graphs");
  build_kg->add_option("--corpus", corpus_dir)->required();
  build_kg->add_option("--aspects", aspects_dir)->required();
  build_kg->add_option("--out", out)->required();

  // filter-kg
  std::string graph_file, aspect_list;
  double wc = 0.0;
  auto* filter = app.add_subcommand("filter-kg", "Apply aspect selection and weight controller");
  filter->add_option("--graph", graph_file)->required();
  filter->add_option("--aspects", aspect_list, "Comma-separated labels or ids; empty = all");
  filter->add_option("--wc", wc);
  filter->add_option("--out", out)->required();

  // build-pairs
  std::string kg_dir, split = "0.8,0.1,0.1";
  PairBuildConfig pair_config;
  auto* build_pairs = app.add_subcommand("build-pairs", "Sample subgraph / pseudo-summary pairs");
  build_pairs->add_option("--kg", kg_dir)->required();
  build_pairs->add_option("--aspects", aspects_dir)->required();
  build_pairs->add_option("--corpus", corpus_dir)->required();
  build_pairs->add_option("--out", out)->required();
  build_pairs->add_option("--samples", pair_config.samples_per_product);
  build_pairs->add_option("--seed", pair_config.seed);
  build_pairs->add_option("--k-min", pair_config.k_min);
  build_pairs->add_option("--k-max", pair_config.k_max);
  build_pairs->add_option("--wc-train", pair_config.wc_train);
  build_pairs->add_option("--split", split, "train,valid,test ratios");

  // train
  std::string pairs_dir, config_path;
  auto* train = app.add_subcommand("train", "Train a summarizer checkpoint");
  train->add_option("--pairs", pairs_dir)->required();
  train->add_option("--out", out)->required();
  train->add_option("--config", config_path, "JSON training config");

  // evaluate
  std::string checkpoint, references, eval_split = "test";
  int max_len = 0, beam = 1;
  auto* evaluate = app.add_subcommand("evaluate", "Generate and score a pair split");
  evaluate->add_option("--checkpoint", checkpoint)->required();
  evaluate->add_option("--pairs", pairs_dir)->required();
  evaluate->add_option("--split", eval_split)->check(CLI::IsMember({"train", "valid", "test"}));
  evaluate->add_option("--references", references, "JSONL {product_id, summaries}");
  evaluate->add_option("--aspects", aspects_dir, "Aspect directory for the coverage lexicon");
  evaluate->add_option("--max-len", max_len, "Defaults to the checkpoint's max_len");
  evaluate->add_option("--beam", beam);
  evaluate->add_option("--out", out, "Write the per-pair report here");

  // score
  std::string candidates, aspects_file;
  auto* score = app.add_subcommand("score", "ROUGE and aspect coverage of candidate summaries");
  score->add_option("--candidates", candidates, "JSONL {id, summary}")->required();
  score->add_option("--references", references, "JSONL {id, summaries}")->required();
  score->add_option("--aspects", aspects_file, "JSONL {id, aspects, variants?}");

  // serve
  std::string store, host = "127.0.0.1";
  int port = 8080, max_concurrency = 2;
  auto* serve = app.add_subcommand("serve", "HTTP API over a store");
  serve->add_option("--store", store)->required();
  serve->add_option("--checkpoint", checkpoint);
  serve->add_option("--port", port);
  serve->add_option("--host", host);
  serve->add_option("--max-concurrency", max_concurrency);

  // summarize
  SummaryRequest request;
  auto* summarize = app.add_subcommand("summarize", "One-shot summary for a product");
  summarize->add_option("--store", store)->required();
  summarize->add_option("--checkpoint", checkpoint)->required();
  summarize->add_option("--product", request.product_id)->required();
  summarize->add_option("--aspects", aspect_list, "Comma-separated labels; empty = all");
  summarize->add_option("--wc", request.wc);
  summarize->add_option("--max-len", request.max_len);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) return Ingest(source, inputs, out, corpus_options);
    if (*mine) return MineAspectsCmd(corpus_dir, out, miner, encoder_path, encoder_dim);
    if (*build_kg) return BuildKg(corpus_dir, aspects_dir, out);
    if (*filter) return FilterKg(graph_file, aspect_list, wc, out);
    if (*build_pairs) {
      return BuildPairsCmd(kg_dir, aspects_dir, corpus_dir, out, pair_config, split);
    }
    if (*train) return TrainCmd(pairs_dir, out, config_path);
    if (*evaluate) {
      return EvaluateCmd(checkpoint, pairs_dir, eval_split, references, aspects_dir, max_len,
                         beam, out);
    }
    if (*score) return ScoreCmd(candidates, references, aspects_file);
    if (*serve) return Serve(store, checkpoint, host, port, max_concurrency);
    if (*summarize) {
      request.aspect_labels = SplitList(aspect_list);
      return SummarizeCmd(store, checkpoint, request);
    }
  } catch (const ValidationError& e) {
    return ErrorExit("validation_error", e.what(), &e.valid());
  } catch (const NotFoundError& e) {
    return ErrorExit("not_found", e.what());
  } catch (const std::exception& e) {
    return ErrorExit("error", e.what());
  }
  return 0;
}
