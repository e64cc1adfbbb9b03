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

#ifndef KGSUMM_TRAINER_H_
#define KGSUMM_TRAINER_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "kgsumm/eval.h"
#include "kgsumm/model.h"
#include "kgsumm/pairs.h"

namespace kgsumm {

struct TrainConfig {
  double lr = 1e-3;
  int batch_size = 8;
  int max_epochs = 50;
  int patience = 5;
  double grad_clip = 1.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 13;
  ModelConfig model;  // d_model, max_len, ... live here

  void Validate() const;  // throws ConfigError
  nlohmann::json ToJson() const;
  // Flat object; model keys sit beside the optimizer keys.
  static TrainConfig FromJson(const nlohmann::json& j);
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double valid_loss = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  int best_epoch = -1;
  double best_valid_loss = 0.0;
  bool stopped_early = false;
  std::filesystem::path checkpoint;

  nlohmann::json ToJson() const;
};

// Every token a model trained on these pairs may need to read or write.
Vocab BuildVocab(const PairSplits& splits);

// Trains on splits.train, selects on splits.valid and writes
// out_dir/model.json plus out_dir/train_report.json. When `final_model` is
// non-null it receives the best checkpoint's parameters.
TrainReport Train(const PairSplits& splits, const TrainConfig& config,
                  const std::filesystem::path& out_dir, Model* final_model = nullptr);

// Mean teacher-forced loss over pairs.
double MeanLoss(const Model& model, const std::vector<TrainingPair>& pairs);

struct PairEval {
  std::string pair_id;
  std::string product_id;
  std::string candidate;
  RougeScore rouge;
  bool has_coverage = false;
  Prf coverage;
};

struct EvalReport {
  ScoreSummary summary;
  std::vector<PairEval> pairs;

  nlohmann::json ToJson() const;
};

// Reference summaries by product id; a product without an entry is scored
// against its pair's pseudo summary. Aspect lexicons by product id; pairs
// without one fall back to their own labels.
struct EvalInputs {
  std::map<std::string, std::vector<std::string>> references;
  std::map<std::string, AspectSet> aspects;
};

EvalReport EvaluateCheckpoint(const Model& model, const std::vector<TrainingPair>& pairs,
                              const GenerateOptions& options, const EvalInputs& inputs = {});

// {"product_id": ..., "summaries": [...]} per line.
std::map<std::string, std::vector<std::string>> ReadReferences(const std::filesystem::path& path);

}  // namespace kgsumm

#endif  // KGSUMM_TRAINER_H_
