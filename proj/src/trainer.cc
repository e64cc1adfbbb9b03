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

#include "kgsumm/trainer.h"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <random>

#include "kgsumm/errors.h"
#include "kgsumm/text.h"

namespace kgsumm {

using nlohmann::json;

void TrainConfig::Validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("train config: " + m); };
  if (!(lr >= 0.0) || !std::isfinite(lr)) fail("lr must be non-negative");
  if (batch_size < 1 || max_epochs < 1 || patience < 1) {
    fail("batch_size, max_epochs and patience must be positive");
  }
  if (!(grad_clip > 0.0)) fail("grad_clip must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) fail("betas must be in [0, 1)");
  model.Validate();
}

json TrainConfig::ToJson() const {
  json j = model.ToJson();
  j["lr"] = lr;
  j["batch_size"] = batch_size;
  j["max_epochs"] = max_epochs;
  j["patience"] = patience;
  j["grad_clip"] = grad_clip;
  j["beta1"] = beta1;
  j["beta2"] = beta2;
  j["adam_eps"] = adam_eps;
  j["seed"] = seed;
  return j;
}

TrainConfig TrainConfig::FromJson(const json& j) {
  if (!j.is_object()) throw ConfigError("train config must be a JSON object");
  TrainConfig c;
  try {
    c.lr = j.value("lr", c.lr);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.patience = j.value("patience", c.patience);
    c.grad_clip = j.value("grad_clip", c.grad_clip);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.adam_eps = j.value("adam_eps", c.adam_eps);
    c.seed = j.value("seed", c.seed);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  c.model = ModelConfig::FromJson(j);
  if (!j.contains("seed")) c.model.seed = c.seed;
  c.Validate();
  return c;
}

json TrainReport::ToJson() const {
  json epochs_json = json::array();
  for (const EpochStats& e : epochs) {
    epochs_json.push_back(
        {{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"valid_loss", e.valid_loss}});
  }
  return {{"v", 1},
          {"epochs", epochs_json},
          {"best_epoch", best_epoch},
          {"best_valid_loss", best_valid_loss},
          {"stopped_early", stopped_early},
          {"checkpoint", checkpoint.string()}};
}

Vocab BuildVocab(const PairSplits& splits) {
  std::vector<std::string> texts;
  auto add_inputs = [&](const std::vector<TrainingPair>& pairs) {
    for (const TrainingPair& p : pairs) {
      texts.push_back(p.product_id);
      for (const std::string& l : p.aspect_labels) texts.push_back(l);
      for (const GraphNode& n : CastEdgesToNodes(p.graph).nodes) texts.push_back(n.text);
    }
  };
  add_inputs(splits.train);
  add_inputs(splits.valid);
  add_inputs(splits.test);
  // Output vocabulary only from what the model is trained or selected on.
  for (const auto* split : {&splits.train, &splits.valid}) {
    for (const TrainingPair& p : *split) texts.push_back(p.pseudo_summary);
  }
  return Vocab::Build(texts);
}

namespace {

struct Example {
  ModelInput input;
  std::vector<int> target;
  std::string pair_id;
};

std::vector<Example> Prepare(const Model& model, const std::vector<TrainingPair>& pairs) {
  std::vector<Example> out;
  out.reserve(pairs.size());
  for (const TrainingPair& p : pairs) {
    out.push_back({model.Prepare(p.graph, p.aspect_labels), model.TargetIds(p.pseudo_summary),
                   p.pair_id});
  }
  return out;
}

double MeanExampleLoss(const Model& model, const std::vector<Example>& examples) {
  std::vector<double> losses(examples.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < examples.size(); ++i) {
    losses[i] = model.LossValue(examples[i].input, examples[i].target);
  }
  double total = 0.0;
  for (double l : losses) total += l;
  return examples.empty() ? 0.0 : total / static_cast<double>(examples.size());
}

class Adam {
 public:
  Adam(const ParameterStore& params, const TrainConfig& config) : config_(config) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      const Matrix& v = params.at(i).value;
      m_.emplace_back(v.rows(), v.cols());
      v_.emplace_back(v.rows(), v.cols());
    }
  }

  void Update(ParameterStore& params, const std::vector<Matrix>& grads) {
    ++step_;
    const double c1 = 1.0 - std::pow(config_.beta1, step_);
    const double c2 = 1.0 - std::pow(config_.beta2, step_);
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto w = params.at(i).value.data();
      auto g = grads[i].data();
      auto m = m_[i].data();
      auto v = v_[i].data();
      for (std::size_t k = 0; k < w.size(); ++k) {
        m[k] = config_.beta1 * m[k] + (1.0 - config_.beta1) * g[k];
        v[k] = config_.beta2 * v[k] + (1.0 - config_.beta2) * g[k] * g[k];
        w[k] -= config_.lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + config_.adam_eps);
      }
    }
  }

 private:
  const TrainConfig& config_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  int step_ = 0;
};

}  // namespace

double MeanLoss(const Model& model, const std::vector<TrainingPair>& pairs) {
  return MeanExampleLoss(model, Prepare(model, pairs));
}

TrainReport Train(const PairSplits& splits, const TrainConfig& config,
                  const std::filesystem::path& out_dir, Model* final_model) {
  config.Validate();
  if (splits.train.empty() || splits.valid.empty()) {
    throw ValidationError("training needs non-empty train and valid splits");
  }
  std::filesystem::create_directories(out_dir);
  ModelConfig model_config = config.model;
  Model model(model_config, BuildVocab(splits));
  const std::vector<Example> train = Prepare(model, splits.train);
  const std::vector<Example> valid = Prepare(model, splits.valid);

  TrainReport report;
  report.checkpoint = out_dir / "model.json";
  ParameterStore& params = model.params();
  Adam adam(params, config);
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(train.size());
  int since_best = 0;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const std::size_t n = end - start;
      std::vector<double> losses(n);
      std::vector<std::vector<Matrix>> grads(n);
      std::exception_ptr error;
      // Each example differentiates on its own tape; the reduction below runs
      // in a fixed order so results do not depend on the thread count.
#pragma omp parallel for schedule(dynamic)
      for (std::size_t b = 0; b < n; ++b) {
        try {
          const Example& ex = train[order[start + b]];
          Tape tape;
          Var loss = model.Loss(tape, ex.input, ex.target);
          tape.Backward(loss);
          losses[b] = tape.value(loss)(0, 0);
          grads[b].reserve(params.size());
          for (std::size_t i = 0; i < params.size(); ++i) {
            const Matrix* g = tape.GradOf(params.at(i));
            grads[b].push_back(g ? *g
                                 : Matrix(params.at(i).value.rows(), params.at(i).value.cols()));
          }
        } catch (...) {
#pragma omp critical
          if (!error) error = std::current_exception();
        }
      }
      if (error) std::rethrow_exception(error);

      std::vector<Matrix> total = std::move(grads[0]);
      for (std::size_t b = 1; b < n; ++b) {
        for (std::size_t i = 0; i < total.size(); ++i) {
          auto dst = total[i].data();
          auto src = grads[b][i].data();
          for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
        }
      }
      double norm_sq = 0.0;
      for (Matrix& g : total) {
        for (double& x : g.data()) {
          x /= static_cast<double>(n);
          norm_sq += x * x;
        }
      }
      for (std::size_t b = 0; b < n; ++b) {
        if (!std::isfinite(losses[b])) {
          throw TrainingDivergedError("non-finite loss at epoch " + std::to_string(epoch) +
                                      " on pair " + train[order[start + b]].pair_id);
        }
        epoch_loss += losses[b];
      }
      const double norm = std::sqrt(norm_sq);
      if (!std::isfinite(norm)) {
        throw TrainingDivergedError("non-finite gradient norm at epoch " + std::to_string(epoch));
      }
      if (norm > config.grad_clip) {
        const double s = config.grad_clip / norm;
        for (Matrix& g : total) {
          for (double& x : g.data()) x *= s;
        }
      }
      adam.Update(params, total);
      for (std::size_t i = 0; i < params.size(); ++i) {
        for (double x : params.at(i).value.data()) {
          if (!std::isfinite(x)) {
            throw TrainingDivergedError("non-finite parameter " + params.at(i).name +
                                        " at epoch " + std::to_string(epoch));
          }
        }
      }
    }

    EpochStats stats{epoch, epoch_loss / static_cast<double>(train.size()),
                     MeanExampleLoss(model, valid)};
    if (!std::isfinite(stats.valid_loss)) {
      throw TrainingDivergedError("non-finite validation loss at epoch " + std::to_string(epoch));
    }
    report.epochs.push_back(stats);
    if (report.best_epoch < 0 || stats.valid_loss < report.best_valid_loss) {
      report.best_epoch = epoch;
      report.best_valid_loss = stats.valid_loss;
      since_best = 0;
      model.Save(report.checkpoint);
    } else if (++since_best >= config.patience) {
      report.stopped_early = epoch < config.max_epochs;
      break;
    }
  }
  text::WriteFileAtomic(out_dir / "train_report.json", report.ToJson().dump(2) + "\n");
  if (final_model) {
    *final_model = Model::Load(report.checkpoint);
  }
  return report;
}

json EvalReport::ToJson() const {
  json j = summary.ToJson();
  j["v"] = 1;
  json rows = json::array();
  for (const PairEval& p : pairs) {
    json row = {{"pair_id", p.pair_id},
                {"product_id", p.product_id},
                {"candidate", p.candidate},
                {"rouge", RougeToJson(p.rouge)}};
    if (p.has_coverage) row["coverage"] = PrfToJson(p.coverage);
    rows.push_back(std::move(row));
  }
  j["pairs"] = std::move(rows);
  return j;
}

EvalReport EvaluateCheckpoint(const Model& model, const std::vector<TrainingPair>& pairs,
                              const GenerateOptions& options, const EvalInputs& inputs) {
  if (pairs.empty()) throw ValidationError("evaluation needs at least one pair");
  EvalReport report;
  report.pairs.resize(pairs.size());
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    try {
      const TrainingPair& p = pairs[i];
      PairEval& out = report.pairs[i];
      out.pair_id = p.pair_id;
      out.product_id = p.product_id;
      out.candidate = model.GenerateText(model.Prepare(p.graph, p.aspect_labels), options);
      auto ref = inputs.references.find(p.product_id);
      out.rouge = ref != inputs.references.end()
                      ? Rouge(out.candidate, ref->second)
                      : Rouge(out.candidate, {p.pseudo_summary});
      if (!p.aspect_labels.empty()) {
        auto lex = inputs.aspects.find(p.product_id);
        const LexiconExtractor extractor = lex != inputs.aspects.end()
                                               ? LexiconExtractor::FromAspectSet(lex->second)
                                               : LexiconExtractor::FromLabels(p.aspect_labels);
        out.coverage = AspectCoverage(
            out.candidate, {p.aspect_labels.begin(), p.aspect_labels.end()}, extractor);
        out.has_coverage = true;
      }
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  std::vector<RougeScore> rouge;
  std::vector<Prf> coverage;
  for (const PairEval& p : report.pairs) {
    rouge.push_back(p.rouge);
    if (p.has_coverage) coverage.push_back(p.coverage);
  }
  report.summary = Summarize(rouge, coverage);
  return report;
}

std::map<std::string, std::vector<std::string>> ReadReferences(
    const std::filesystem::path& path) {
  std::map<std::string, std::vector<std::string>> out;
  for (const std::string& line : text::ReadLines(path)) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("product_id") || !j.contains("summaries")) {
      throw IoError("reference line needs product_id and summaries: " + path.string());
    }
    auto& dst = out[j["product_id"].get<std::string>()];
    for (const auto& s : j["summaries"]) dst.push_back(s.get<std::string>());
  }
  return out;
}

}  // namespace kgsumm
