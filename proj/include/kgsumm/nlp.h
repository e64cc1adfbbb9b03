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

#ifndef KGSUMM_NLP_H_
#define KGSUMM_NLP_H_

// A small deterministic English analyzer: lexicon + suffix part-of-speech
// tagging, lemmatization and a pattern-based dependency attachment that covers
// the constructions review sentences use to attach opinions to things
// (adjectival modifiers, copular complements, negation, coordination).
//
// It stands in for a statistical dependency parser. Everything downstream
// consumes the DependencyParse structure, so a real parser's output can be
// converted and passed instead.

#include <string>
#include <string_view>
#include <vector>

namespace kgsumm::nlp {

enum class Pos {
  kNoun, kPropn, kVerb, kAux, kAdj, kAdv, kDet, kPron, kAdp, kCconj, kSconj,
  kNeg, kNum, kPunct, kOther
};

enum class Dep {
  kRoot, kNsubj, kDobj, kAmod, kCompound, kNummod, kDet, kPoss, kAcomp,
  kAdvmod, kNeg, kConj, kCc, kPrep, kPobj, kPunct, kAux, kDep
};

std::string_view PosName(Pos pos);
std::string_view DepName(Dep dep);

struct Token {
  std::string text;   // lowercased surface form
  std::string lemma;
  Pos pos = Pos::kOther;
  int head = -1;      // -1 for the root
  Dep dep = Dep::kDep;
};

struct DependencyParse {
  std::vector<Token> tokens;

  std::vector<int> Children(int head, Dep dep) const;
};

// Lemma for a lowercased word given its tag.
std::string Lemmatize(std::string_view word, Pos pos);

bool IsOpinionAdjective(std::string_view lemma);
bool IsPersonalPronoun(std::string_view word);

class RuleParser {
 public:
  DependencyParse Parse(std::string_view sentence) const;
  DependencyParse ParseTokens(const std::vector<std::string>& tokens) const;
};

}  // namespace kgsumm::nlp

#endif  // KGSUMM_NLP_H_
