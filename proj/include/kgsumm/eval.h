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

#ifndef KGSUMM_EVAL_H_
#define KGSUMM_EVAL_H_

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "kgsumm/aspect_miner.h"
#include "json.hpp"

namespace kgsumm {

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  static Prf From(double precision, double recall);
};

struct RougeScore {
  Prf r1;
  Prf r2;
  Prf rl;
};

// Lowercased whitespace tokens with punctuation removed; no stemming.
std::vector<std::string> RougeTokens(std::string_view s);

// Clipped n-gram overlap.
Prf NgramOverlap(const std::vector<std::string>& candidate,
                 const std::vector<std::string>& reference, int n);
std::size_t LcsLength(const std::vector<std::string>& a, const std::vector<std::string>& b);
Prf LcsScore(const std::vector<std::string>& candidate,
             const std::vector<std::string>& reference);

// Each component is the best-F1 match over the references.
RougeScore Rouge(std::string_view candidate, const std::vector<std::string>& references);

class AspectExtractor {
 public:
  virtual ~AspectExtractor() = default;
  virtual std::set<std::string> Extract(std::string_view summary) const = 0;
};

// An aspect is present when any of its surface forms occurs as a contiguous
// token run of the summary.
class LexiconExtractor : public AspectExtractor {
 public:
  explicit LexiconExtractor(const std::map<std::string, std::vector<std::string>>& lexicon);
  static LexiconExtractor FromAspectSet(const AspectSet& set);
  static LexiconExtractor FromLabels(const std::vector<std::string>& labels);

  std::set<std::string> Extract(std::string_view summary) const override;

 private:
  std::vector<std::pair<std::string, std::vector<std::vector<std::string>>>> forms_;
};

// Set F1 between extracted and reference aspects. Throws ValidationError for
// an empty reference set.
Prf AspectCoverage(std::string_view summary, const std::set<std::string>& reference_aspects,
                   const AspectExtractor& extractor);

nlohmann::json PrfToJson(const Prf& p);
nlohmann::json RougeToJson(const RougeScore& r);

// Table-style report: Rouge_* as percentages, coverage F1 as a fraction.
struct ScoreSummary {
  RougeScore mean;
  double coverage_f1 = 0.0;
  int count = 0;
  int coverage_count = 0;

  nlohmann::json ToJson() const;
};

// Mean of per-example scores; coverage entries may be fewer than rouge ones.
ScoreSummary Summarize(const std::vector<RougeScore>& rouge, const std::vector<Prf>& coverage);

}  // namespace kgsumm

#endif  // KGSUMM_EVAL_H_
