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

#include "kgsumm/eval.h"

#include <algorithm>
#include <cctype>

#include "kgsumm/errors.h"
#include "kgsumm/text.h"

namespace kgsumm {

using nlohmann::json;

Prf Prf::From(double precision, double recall) {
  Prf p{precision, recall, 0.0};
  if (precision + recall > 0.0) p.f1 = 2.0 * precision * recall / (precision + recall);
  return p;
}

std::vector<std::string> RougeTokens(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (char ch : s) {
    const unsigned char c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      flush();
    } else if (!std::ispunct(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  flush();
  return out;
}

Prf NgramOverlap(const std::vector<std::string>& candidate,
                 const std::vector<std::string>& reference, int n) {
  auto grams = [n](const std::vector<std::string>& toks) {
    std::map<std::vector<std::string>, int> counts;
    for (std::size_t i = 0; i + n <= toks.size(); ++i) {
      ++counts[std::vector<std::string>(toks.begin() + i, toks.begin() + i + n)];
    }
    return counts;
  };
  const auto c = grams(candidate);
  const auto r = grams(reference);
  int c_total = 0;
  int r_total = 0;
  int overlap = 0;
  for (const auto& [g, k] : c) {
    c_total += k;
    auto it = r.find(g);
    if (it != r.end()) overlap += std::min(k, it->second);
  }
  for (const auto& [g, k] : r) r_total += k;
  if (c_total == 0 || r_total == 0) return {};
  return Prf::From(static_cast<double>(overlap) / c_total, static_cast<double>(overlap) / r_total);
}

std::size_t LcsLength(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

Prf LcsScore(const std::vector<std::string>& candidate,
             const std::vector<std::string>& reference) {
  if (candidate.empty() || reference.empty()) return {};
  const double lcs = static_cast<double>(LcsLength(candidate, reference));
  return Prf::From(lcs / candidate.size(), lcs / reference.size());
}

RougeScore Rouge(std::string_view candidate, const std::vector<std::string>& references) {
  RougeScore best;
  const std::vector<std::string> cand = RougeTokens(candidate);
  if (cand.empty()) return best;
  auto keep = [](Prf& slot, const Prf& x) {
    if (x.f1 > slot.f1) slot = x;
  };
  for (const std::string& ref_text : references) {
    const std::vector<std::string> ref = RougeTokens(ref_text);
    keep(best.r1, NgramOverlap(cand, ref, 1));
    keep(best.r2, NgramOverlap(cand, ref, 2));
    keep(best.rl, LcsScore(cand, ref));
  }
  return best;
}

LexiconExtractor::LexiconExtractor(
    const std::map<std::string, std::vector<std::string>>& lexicon) {
  for (const auto& [label, variants] : lexicon) {
    std::set<std::vector<std::string>> forms;
    forms.insert(RougeTokens(label));
    for (const std::string& v : variants) forms.insert(RougeTokens(v));
    forms.erase(std::vector<std::string>{});
    forms_.emplace_back(label, std::vector<std::vector<std::string>>(forms.begin(), forms.end()));
  }
}

LexiconExtractor LexiconExtractor::FromAspectSet(const AspectSet& set) {
  std::map<std::string, std::vector<std::string>> lexicon;
  for (const AspectCluster& a : set.aspects) lexicon[a.label] = a.variants;
  return LexiconExtractor(lexicon);
}

LexiconExtractor LexiconExtractor::FromLabels(const std::vector<std::string>& labels) {
  std::map<std::string, std::vector<std::string>> lexicon;
  for (const std::string& l : labels) lexicon[l];
  return LexiconExtractor(lexicon);
}

std::set<std::string> LexiconExtractor::Extract(std::string_view summary) const {
  const std::vector<std::string> toks = RougeTokens(summary);
  std::set<std::string> found;
  for (const auto& [label, forms] : forms_) {
    for (const auto& form : forms) {
      if (std::search(toks.begin(), toks.end(), form.begin(), form.end()) != toks.end()) {
        found.insert(label);
        break;
      }
    }
  }
  return found;
}

Prf AspectCoverage(std::string_view summary, const std::set<std::string>& reference_aspects,
                   const AspectExtractor& extractor) {
  if (reference_aspects.empty()) {
    throw ValidationError("aspect coverage needs a non-empty reference set");
  }
  const std::set<std::string> got = extractor.Extract(summary);
  std::size_t hit = 0;
  for (const std::string& a : got) hit += reference_aspects.count(a);
  const double precision = got.empty() ? 0.0 : static_cast<double>(hit) / got.size();
  const double recall = static_cast<double>(hit) / reference_aspects.size();
  return Prf::From(precision, recall);
}

json PrfToJson(const Prf& p) {
  return {{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}};
}

json RougeToJson(const RougeScore& r) {
  return {{"rouge_1", PrfToJson(r.r1)}, {"rouge_2", PrfToJson(r.r2)}, {"rouge_l", PrfToJson(r.rl)}};
}

json ScoreSummary::ToJson() const {
  json j = {{"Rouge_1", 100.0 * mean.r1.f1},
            {"Rouge_2", 100.0 * mean.r2.f1},
            {"Rouge_L", 100.0 * mean.rl.f1},
            {"count", count}};
  j["Aspect Coverage F1"] = coverage_count > 0 ? json(coverage_f1) : json(nullptr);
  return j;
}

ScoreSummary Summarize(const std::vector<RougeScore>& rouge, const std::vector<Prf>& coverage) {
  ScoreSummary s;
  s.count = static_cast<int>(rouge.size());
  s.coverage_count = static_cast<int>(coverage.size());
  auto add = [](Prf& acc, const Prf& x) {
    acc.precision += x.precision;
    acc.recall += x.recall;
    acc.f1 += x.f1;
  };
  auto div = [](Prf& acc, double n) {
    acc.precision /= n;
    acc.recall /= n;
    acc.f1 /= n;
  };
  for (const RougeScore& r : rouge) {
    add(s.mean.r1, r.r1);
    add(s.mean.r2, r.r2);
    add(s.mean.rl, r.rl);
  }
  if (!rouge.empty()) {
    div(s.mean.r1, s.count);
    div(s.mean.r2, s.count);
    div(s.mean.rl, s.count);
  }
  for (const Prf& c : coverage) s.coverage_f1 += c.f1;
  if (!coverage.empty()) s.coverage_f1 /= s.coverage_count;
  return s;
}

}  // namespace kgsumm
