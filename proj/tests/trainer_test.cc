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

#include <fstream>

#include "fixtures.h"
#include "gtest/gtest.h"
#include "json.hpp"
#include "kgsumm/errors.h"
#include "kgsumm/text.h"

namespace kgsumm {
namespace {

// Four training pairs from two products plus a one-product valid split.
const PairSplits& Splits() {
  static const PairSplits s = [] {
    auto pipe = testing::BuildPipeline(testing::SyntheticRecords(3, 6, 91));
    PairSplits out;
    for (std::size_t i = 0; i < pipe.graphs.size(); ++i) {
      const WeightedKG& kg = pipe.graphs[i];
      auto& dst = i + 1 < pipe.graphs.size() ? out.train : out.valid;
      dst.push_back(MakePair(kg, kg.AspectIds(), pipe.index, 0.0));
      dst.push_back(MakePair(kg, {kg.AspectIds()[1]}, pipe.index, 0.0));
    }
    return out;
  }();
  return s;
}

TrainConfig SmallConfig() {
  TrainConfig c;
  c.model = testing::TinyModelConfig(16);
  c.model.max_len = 48;
  c.lr = 3e-3;
  c.batch_size = 2;
  c.max_epochs = 4;
  c.patience = 10;
  return c;
}

TEST(TrainConfigTest, JsonIsFlatAndRoundTrips) {
  TrainConfig c = SmallConfig();
  nlohmann::json j = c.ToJson();
  EXPECT_EQ(j["d_model"], 16);
  EXPECT_EQ(j["batch_size"], 2);
  TrainConfig back = TrainConfig::FromJson(j);
  EXPECT_EQ(back.ToJson(), j);
  c.lr = -1;
  EXPECT_THROW(c.Validate(), ConfigError);
  c = SmallConfig();
  c.batch_size = 0;
  EXPECT_THROW(c.Validate(), ConfigError);
}

TEST(BuildVocabTest, TestSummariesStayOut) {
  PairSplits s = Splits();
  TrainingPair held = s.train.front();
  held.pseudo_summary = "zebra quokka";
  s.test.push_back(held);
  Vocab v = BuildVocab(s);
  EXPECT_FALSE(v.Contains("zebra"));
  EXPECT_TRUE(v.Contains("room") || v.Contains("staff"));
}

TEST(TrainTest, ZeroLearningRateLeavesParametersUnchanged) {
  TrainConfig c = SmallConfig();
  c.lr = 0.0;
  c.max_epochs = 2;
  testing::TempDir dir("train");
  Model final_model(c.model, Vocab());
  Train(Splits(), c, dir.path(), &final_model);
  Model fresh(c.model, BuildVocab(Splits()));
  ASSERT_EQ(final_model.params().size(), fresh.params().size());
  for (std::size_t i = 0; i < fresh.params().size(); ++i) {
    EXPECT_EQ(final_model.params().at(i).value, fresh.params().at(i).value)
        << fresh.params().at(i).name;
  }
}

TEST(TrainTest, DeterministicAcrossRuns) {
  TrainConfig c = SmallConfig();
  testing::TempDir a("train");
  testing::TempDir b("train");
  TrainReport ra = Train(Splits(), c, a.path());
  TrainReport rb = Train(Splits(), c, b.path());
  ASSERT_EQ(ra.epochs.size(), rb.epochs.size());
  for (std::size_t i = 0; i < ra.epochs.size(); ++i) {
    EXPECT_EQ(ra.epochs[i].train_loss, rb.epochs[i].train_loss);
    EXPECT_EQ(ra.epochs[i].valid_loss, rb.epochs[i].valid_loss);
  }
  EXPECT_EQ(text::ReadFile(ra.checkpoint), text::ReadFile(rb.checkpoint));
}

TEST(TrainTest, LossDecreasesAndCheckpointReproducesValidLoss) {
  TrainConfig c = SmallConfig();
  c.max_epochs = 15;
  testing::TempDir dir("train");
  TrainReport r = Train(Splits(), c, dir.path());
  ASSERT_FALSE(r.epochs.empty());
  EXPECT_LT(r.epochs.back().train_loss, 0.8 * r.epochs.front().train_loss);
  Model loaded = Model::Load(r.checkpoint);
  EXPECT_NEAR(MeanLoss(loaded, Splits().valid), r.best_valid_loss, 1e-6);
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "train_report.json"));
  nlohmann::json report = nlohmann::json::parse(text::ReadFile(dir.path() / "train_report.json"));
  EXPECT_EQ(report["best_epoch"], r.best_epoch);
}

TEST(TrainTest, EarlyStopsWhenValidationStalls) {
  TrainConfig c = SmallConfig();
  c.lr = 0.0;  // validation loss never improves after epoch 1
  c.max_epochs = 20;
  c.patience = 3;
  testing::TempDir dir("train");
  TrainReport r = Train(Splits(), c, dir.path());
  EXPECT_TRUE(r.stopped_early);
  EXPECT_EQ(r.best_epoch, 1);
  EXPECT_EQ(r.epochs.size(), 4u);
}

TEST(TrainTest, DivergenceIsReported) {
  TrainConfig c = SmallConfig();
  c.lr = 1e300;
  c.max_epochs = 5;
  testing::TempDir dir("train");
  EXPECT_THROW(Train(Splits(), c, dir.path()), TrainingDivergedError);
}

TEST(TrainTest, RejectsEmptySplits) {
  PairSplits s = Splits();
  s.valid.clear();
  testing::TempDir dir("train");
  EXPECT_THROW(Train(s, SmallConfig(), dir.path()), ValidationError);
}

TEST(EvaluateTest, ReportsScoresPerPair) {
  Model m(SmallConfig().model, BuildVocab(Splits()));
  GenerateOptions opt;
  opt.max_len = 10;
  EvalReport r = EvaluateCheckpoint(m, Splits().valid, opt);
  ASSERT_EQ(r.pairs.size(), Splits().valid.size());
  EXPECT_EQ(r.summary.count, static_cast<int>(Splits().valid.size()));
  for (const PairEval& p : r.pairs) {
    EXPECT_TRUE(p.has_coverage);
    EXPECT_GE(p.rouge.r1.f1, 0.0);
    EXPECT_LE(p.rouge.r1.f1, 1.0);
  }
  EXPECT_EQ(EvaluateCheckpoint(m, Splits().valid, opt).ToJson(), r.ToJson());
  EXPECT_THROW(EvaluateCheckpoint(m, {}, opt), ValidationError);
}

TEST(EvaluateTest, ReadsReferenceFile) {
  testing::TempDir dir("refs");
  std::ofstream(dir.path() / "refs.jsonl")
      << R"({"product_id":"hotel_0","summaries":["a b","c d"]})" << "\n";
  auto refs = ReadReferences(dir.path() / "refs.jsonl");
  EXPECT_EQ(refs.at("hotel_0"), (std::vector<std::string>{"a b", "c d"}));
  std::ofstream(dir.path() / "bad.jsonl") << "{\"x\":1}\n";
  EXPECT_THROW(ReadReferences(dir.path() / "bad.jsonl"), IoError);
}

}  // namespace
}  // namespace kgsumm
