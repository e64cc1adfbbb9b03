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

#include "kgsumm/nlp.h"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

#include "kgsumm/text.h"

namespace kgsumm::nlp {
namespace {

using WordSet = std::unordered_set<std::string_view>;

const WordSet& Determiners() {
  static const WordSet k = {"the", "a", "an", "this", "that", "these", "those",
                            "every", "each", "some", "any", "no", "another",
                            "either", "neither", "several", "such", "all",
                            "both", "many", "much", "few", "more", "most"};
  return k;
}

const WordSet& PossessivePronouns() {
  static const WordSet k = {"my", "our", "your", "his", "her", "their", "its"};
  return k;
}

const WordSet& PersonalPronouns() {
  static const WordSet k = {
      "i", "me", "we", "us", "you", "he", "him", "she", "it", "they", "them",
      "myself", "ourselves", "yourself", "yourselves", "himself", "herself",
      "itself", "themselves", "mine", "ours", "yours", "hers", "theirs", "i'm",
      "i've", "i'd", "i'll", "we're", "we've", "we'd", "you're", "you've",
      "it's", "they're", "they've", "he's", "she's", "that's", "there's"};
  return k;
}

const WordSet& OtherPronouns() {
  static const WordSet k = {"something", "anything", "everything", "nothing",
                            "someone", "anyone", "everyone", "somebody",
                            "anybody", "everybody", "nobody", "one", "which",
                            "who", "whom", "whose", "what", "there", "here"};
  return k;
}

const WordSet& Adpositions() {
  static const WordSet k = {
      "in", "on", "at", "to", "for", "with", "from", "of", "by", "about",
      "near", "into", "onto", "over", "under", "after", "before", "during",
      "through", "around", "across", "between", "without", "within", "than",
      "as", "up", "down", "out", "off", "upon", "behind", "beside", "besides",
      "along", "against", "among", "toward", "towards", "per", "via", "inside",
      "outside", "beyond", "despite", "except", "since", "until", "till"};
  return k;
}

const WordSet& CoordConj() {
  static const WordSet k = {"and", "or", "but", "nor", "yet", "&"};
  return k;
}

const WordSet& SubordConj() {
  static const WordSet k = {"because", "although", "though", "while", "if",
                            "when", "whenever", "where", "whereas", "unless",
                            "whether", "once", "so", "then"};
  return k;
}

const WordSet& Negations() {
  static const WordSet k = {"not", "n't", "never", "hardly", "barely"};
  return k;
}

const std::unordered_map<std::string_view, std::string_view>& AuxLemmas() {
  static const std::unordered_map<std::string_view, std::string_view> k = {
      {"is", "be"},     {"was", "be"},      {"are", "be"},     {"were", "be"},
      {"be", "be"},     {"been", "be"},     {"being", "be"},   {"am", "be"},
      {"'s", "be"},     {"'re", "be"},      {"do", "do"},      {"does", "do"},
      {"did", "do"},    {"have", "have"},   {"has", "have"},   {"had", "have"},
      {"will", "will"}, {"wo", "will"},     {"would", "would"}, {"can", "can"},
      {"ca", "can"},    {"could", "could"}, {"should", "should"},
      {"shall", "shall"}, {"may", "may"},   {"might", "might"}, {"must", "must"},
      {"get", "get"},   {"gets", "get"},    {"got", "get"},    {"getting", "get"}};
  return k;
}

// Verbs that take an adjectival complement ("looks great", "felt cramped").
const WordSet& LinkingVerbs() {
  static const WordSet k = {"be", "seem", "look", "feel", "remain", "get",
                            "become", "stay", "sound", "smell", "taste",
                            "appear", "prove", "keep", "turn"};
  return k;
}

const WordSet& Adverbs() {
  static const WordSet k = {
      "very", "really", "so", "too", "quite", "extremely", "super", "rather",
      "always", "also", "just", "still", "even", "only", "pretty", "fairly",
      "somewhat", "highly", "incredibly", "absolutely", "totally", "truly",
      "overall", "again", "almost", "already", "ever", "often", "sometimes",
      "usually", "well", "enough", "indeed", "definitely", "especially",
      "simply", "clearly", "certainly", "generally", "mostly", "less", "fast",
      "now", "soon", "later", "once", "twice", "maybe", "perhaps", "however",
      "instead", "otherwise", "therefore", "everywhere", "anywhere", "away",
      "back", "together", "right", "exactly", "immediately", "constantly"};
  return k;
}

const WordSet& AdjectiveLexicon() {
  static const WordSet k = {
      "good", "great", "bad", "nice", "clean", "dirty", "friendly", "helpful",
      "rude", "spacious", "small", "large", "big", "tiny", "huge", "quiet",
      "noisy", "loud", "comfortable", "uncomfortable", "comfy", "cheap",
      "expensive", "pricey", "affordable", "reasonable", "fast", "slow",
      "quick", "excellent", "amazing", "awesome", "terrible", "horrible",
      "awful", "poor", "perfect", "fantastic", "wonderful", "beautiful",
      "lovely", "pleasant", "unpleasant", "convenient", "inconvenient",
      "central", "close", "far", "modern", "old", "new", "outdated", "dated",
      "fresh", "stale", "tasty", "delicious", "bland", "cold", "hot", "warm",
      "cool", "bright", "dark", "sturdy", "flimsy", "durable", "fragile",
      "heavy", "light", "easy", "hard", "difficult", "simple", "smooth",
      "rough", "soft", "firm", "sharp", "clear", "crisp", "blurry", "dull",
      "responsive", "laggy", "reliable", "unreliable", "helpful", "attentive",
      "professional", "unprofessional", "efficient", "inefficient", "polite",
      "courteous", "knowledgeable", "slow", "safe", "unsafe", "secure",
      "crowded", "busy", "empty", "cozy", "cramped", "roomy", "stylish",
      "elegant", "ugly", "gorgeous", "stunning", "spectacular", "impressive",
      "disappointing", "disappointed", "satisfied", "happy", "unhappy", "sad",
      "annoying", "annoyed", "frustrating", "worth", "worthless", "useful",
      "useless", "handy", "solid", "strong", "weak", "long", "short", "high",
      "low", "fine", "ok", "okay", "decent", "average", "mediocre", "superb",
      "outstanding", "exceptional", "incredible", "brilliant", "best", "worst",
      "better", "worse", "favorite", "favourite", "free", "friendlier",
      "overpriced", "broken", "defective", "faulty", "loose", "tight", "thin",
      "thick", "wide", "narrow", "spotless", "filthy", "smelly", "musty",
      "stained", "worn", "shabby", "luxurious", "basic", "functional",
      "adequate", "sufficient", "generous", "limited", "extensive", "varied",
      "diverse", "tasteless", "greasy", "salty", "sweet", "sour", "bitter",
      "spicy", "juicy", "crispy", "soggy", "overcooked", "undercooked", "raw",
      "ready", "available", "unavailable", "accessible", "walkable", "scenic",
      "peaceful", "relaxing", "lively", "vibrant", "charming", "quaint",
      "historic", "welcoming", "accommodating", "unhelpful", "slick",
      "intuitive", "confusing", "complicated", "accurate", "inaccurate",
      "vivid", "rich", "deep", "tinny", "muffled", "balanced", "powerful",
      "weak", "quietest", "premium", "flawless", "glossy", "matte", "compact",
      "portable", "bulky", "lightweight", "waterproof", "wireless", "fancy",
      "plain", "pleased", "recommended", "impressed", "sleek", "pricy",
      "amazingly", "superior", "inferior", "original", "genuine", "fake",
      "true", "false", "real", "great-value", "ideal", "lousy", "nasty",
      "gross", "yummy", "fluffy", "cosy", "airy", "stuffy", "humid", "dry",
      "wet", "damp", "steady", "unstable", "stable", "loyal", "fun", "boring",
      "interesting", "exciting", "charged", "dead", "full", "crappy", "cute",
      "pretty", "handsome", "gentle", "kind", "warmest", "nicest", "cleanest"};
  return k;
}

const WordSet& VerbLexicon() {
  static const WordSet k = {
      "provide", "love", "like", "hate", "enjoy", "recommend", "stay", "arrive",
      "leave", "buy", "purchase", "order", "return", "use", "work", "break",
      "charge", "last", "come", "go", "make", "take", "give", "find", "say",
      "tell", "think", "know", "want", "need", "try", "expect", "offer",
      "serve", "include", "feature", "cost", "pay", "book", "check", "sleep",
      "eat", "drink", "visit", "walk", "drive", "call", "ask", "help", "wait",
      "open", "close", "clean", "fix", "replace", "install", "connect", "play",
      "watch", "listen", "hear", "see", "look", "seem", "feel", "smell",
      "taste", "sound", "fit", "wear", "keep", "hold", "carry", "run", "sit",
      "stand", "move", "change", "turn", "start", "stop", "begin", "end",
      "happen", "notice", "appreciate", "recommend", "complain", "receive",
      "send", "ship", "deliver", "arrive", "pack", "unpack", "set", "put",
      "get", "become", "remain", "appear", "prove", "allow", "let", "help",
      "manage", "handle", "treat", "greet", "welcome", "upgrade", "request",
      "reserve", "cancel", "refund", "exchange", "compare", "choose", "pick",
      "prefer", "miss", "lose", "win", "spend", "save", "read", "write", "show",
      "believe", "hope", "wish", "plan", "decide", "learn", "understand",
      "remember", "forget", "mean", "bring", "hit", "cut", "heat", "cook",
      "bake", "fry", "taste", "eat", "swim", "relax", "rest", "explore",
      "impress", "disappoint", "satisfy", "annoy", "bother", "overlook",
      "face", "boast", "lack", "contain", "require", "produce", "perform",
      "display", "load", "crash", "freeze", "die", "drain", "last", "stick",
      "fall", "drop", "tear", "rip", "smell", "stain", "leak", "sell", "live",
      "love", "adore", "dislike", "detest", "suggest", "advise", "warn",
      "describe", "advertise", "promise", "deserve", "improve", "ruin"};
  return k;
}

const std::unordered_map<std::string_view, std::string_view>& IrregularVerbs() {
  static const std::unordered_map<std::string_view, std::string_view> k = {
      {"went", "go"},     {"gone", "go"},       {"came", "come"},
      {"made", "make"},   {"took", "take"},     {"taken", "take"},
      {"gave", "give"},   {"given", "give"},    {"found", "find"},
      {"left", "leave"},  {"felt", "feel"},     {"thought", "think"},
      {"bought", "buy"},  {"brought", "bring"}, {"saw", "see"},
      {"seen", "see"},    {"ate", "eat"},       {"eaten", "eat"},
      {"slept", "sleep"}, {"paid", "pay"},      {"told", "tell"},
      {"said", "say"},    {"kept", "keep"},     {"ran", "run"},
      {"sat", "sit"},     {"stood", "stand"},   {"broke", "break"},
      {"knew", "know"},   {"known", "know"},    {"spent", "spend"},
      {"sent", "send"},   {"held", "hold"},     {"wore", "wear"},
      {"worn", "wear"},   {"began", "begin"},   {"begun", "begin"},
      {"chose", "choose"}, {"chosen", "choose"}, {"lost", "lose"},
      {"won", "win"},     {"fell", "fall"},     {"fallen", "fall"},
      {"drove", "drive"}, {"driven", "drive"},  {"drank", "drink"},
      {"swam", "swim"},   {"heard", "hear"},    {"meant", "mean"},
      {"tore", "tear"},   {"torn", "tear"},     {"stuck", "stick"},
      {"froze", "freeze"}, {"frozen", "freeze"}, {"sold", "sell"},
      {"became", "become"}};
  return k;
}

const std::unordered_map<std::string_view, std::string_view>& IrregularNouns() {
  static const std::unordered_map<std::string_view, std::string_view> k = {
      {"people", "person"}, {"children", "child"}, {"men", "man"},
      {"women", "woman"},   {"feet", "foot"},      {"teeth", "tooth"},
      {"mice", "mouse"},    {"knives", "knife"},   {"shelves", "shelf"},
      {"wives", "wife"},    {"lives", "life"},     {"leaves", "leaf"}};
  return k;
}

const WordSet& InvariantNouns() {
  static const WordSet k = {"news", "series", "species", "clothes",
                            "electronics", "lens", "gas", "canvas", "chaos",
                            "basis", "analysis", "bus", "this", "pants",
                            "jeans", "glasses", "headphones", "earphones",
                            "scissors", "amenities", "premises", "mathematics",
                            "physics", "wifi", "always", "ios", "plus"};
  return k;
}

bool IsDigitStart(std::string_view w) {
  return !w.empty() && w[0] >= '0' && w[0] <= '9';
}

bool IsPunctToken(std::string_view w) {
  if (w.empty()) return false;
  return std::all_of(w.begin(), w.end(), [](char c) {
    return std::string_view(".,!?;:()\"'-").find(c) != std::string_view::npos;
  });
}

bool EndsWith(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

bool IsVowel(char c) {
  return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
}

// Candidate stems for a suffixed form: plain strip, strip + "e", undoubled
// consonant.
std::vector<std::string> StemCandidates(std::string_view word,
                                        std::string_view suffix) {
  std::vector<std::string> out;
  if (!EndsWith(word, suffix) || word.size() <= suffix.size() + 1) return out;
  std::string stem(word.substr(0, word.size() - suffix.size()));
  out.push_back(stem);
  out.push_back(stem + "e");
  if (stem.size() >= 2 && stem[stem.size() - 1] == stem[stem.size() - 2] &&
      !IsVowel(stem.back())) {
    out.push_back(stem.substr(0, stem.size() - 1));
  }
  if (stem.back() == 'i') out.push_back(stem.substr(0, stem.size() - 1) + "y");
  return out;
}

std::string VerbLemma(std::string_view w) {
  if (auto it = IrregularVerbs().find(w); it != IrregularVerbs().end()) {
    return std::string(it->second);
  }
  if (VerbLexicon().count(w)) return std::string(w);
  for (std::string_view suffix : {"ing", "ed", "es", "s"}) {
    for (const std::string& cand : StemCandidates(w, suffix)) {
      if (VerbLexicon().count(cand)) return cand;
    }
  }
  if (EndsWith(w, "ies") && w.size() > 4) {
    return std::string(w.substr(0, w.size() - 3)) + "y";
  }
  return "";
}

std::string AdjLemma(std::string_view w) {
  if (AdjectiveLexicon().count(w)) return std::string(w);
  if (w == "better") return "good";
  if (w == "worse") return "bad";
  for (std::string_view suffix : {"est", "er"}) {
    for (const std::string& cand : StemCandidates(w, suffix)) {
      if (AdjectiveLexicon().count(cand)) return cand;
    }
  }
  return "";
}

bool HasAdjSuffix(std::string_view w) {
  if (w.size() < 5) return false;
  for (std::string_view s : {"ful", "less", "ous", "ive", "able", "ible", "ish",
                             "ical", "ic"}) {
    if (EndsWith(w, s)) return true;
  }
  return false;
}

Pos TagWord(std::string_view w) {
  if (w.empty()) return Pos::kOther;
  if (IsPunctToken(w)) return Pos::kPunct;
  if (IsDigitStart(w)) return Pos::kNum;
  if (Negations().count(w)) return Pos::kNeg;
  if (PossessivePronouns().count(w) || PersonalPronouns().count(w) ||
      OtherPronouns().count(w)) {
    return Pos::kPron;
  }
  if (Determiners().count(w)) return Pos::kDet;
  if (AuxLemmas().count(w)) return Pos::kAux;
  if (CoordConj().count(w)) return Pos::kCconj;
  if (SubordConj().count(w)) return Pos::kSconj;
  if (Adpositions().count(w)) return Pos::kAdp;
  if (Adverbs().count(w)) return Pos::kAdv;
  if (!AdjLemma(w).empty()) return Pos::kAdj;
  if (!VerbLemma(w).empty()) return Pos::kVerb;
  if (EndsWith(w, "ly") && w.size() > 4) return Pos::kAdv;
  if (HasAdjSuffix(w)) return Pos::kAdj;
  if (EndsWith(w, "ing") && w.size() > 5) return Pos::kVerb;
  if (EndsWith(w, "ed") && w.size() > 4) return Pos::kVerb;
  return Pos::kNoun;
}

bool IsNominal(Pos p) { return p == Pos::kNoun || p == Pos::kPropn; }

// Verb/noun ambiguity: a verb-lexicon word right after a determiner,
// possessive, adjective or number is a noun ("the view", "great stay").
void ResolveNounVerb(std::vector<Token>* tokens) {
  for (std::size_t i = 0; i < tokens->size(); ++i) {
    Token& t = (*tokens)[i];
    if (t.pos != Pos::kVerb || i == 0) continue;
    const Token& prev = (*tokens)[i - 1];
    const bool nominal_context =
        prev.pos == Pos::kDet || prev.pos == Pos::kAdj || prev.pos == Pos::kNum ||
        (prev.pos == Pos::kPron && PossessivePronouns().count(prev.text));
    if (nominal_context && !EndsWith(t.text, "ed")) t.pos = Pos::kNoun;
  }
  // "-ing"/"-ed" words directly after a linking verb and before punctuation
  // or the end read as adjectives ("was crowded", "is amazing").
  for (std::size_t i = 1; i < tokens->size(); ++i) {
    Token& t = (*tokens)[i];
    if (t.pos != Pos::kVerb) continue;
    const bool participle = EndsWith(t.text, "ed") || EndsWith(t.text, "ing");
    const Token& prev = (*tokens)[i - 1];
    const bool after_link =
        prev.pos == Pos::kAux || prev.pos == Pos::kNeg || prev.pos == Pos::kAdv;
    const bool clause_end = i + 1 == tokens->size() ||
                            (*tokens)[i + 1].pos == Pos::kPunct ||
                            (*tokens)[i + 1].pos == Pos::kCconj;
    if (participle && after_link && clause_end) t.pos = Pos::kAdj;
  }
}

struct Chunk {
  int start;
  int head;  // last nominal, inclusive end
};

std::vector<Chunk> FindChunks(const std::vector<Token>& toks) {
  std::vector<Chunk> out;
  const int n = static_cast<int>(toks.size());
  int i = 0;
  while (i < n) {
    auto in_run = [&](int k) {
      const Pos p = toks[k].pos;
      if (IsNominal(p) || p == Pos::kAdj || p == Pos::kNum) return true;
      return p == Pos::kAdv && k + 1 < n && toks[k + 1].pos == Pos::kAdj;
    };
    if (!in_run(i)) {
      ++i;
      continue;
    }
    int j = i;
    int last_nominal = -1;
    while (j < n && in_run(j)) {
      if (IsNominal(toks[j].pos)) last_nominal = j;
      ++j;
    }
    if (last_nominal >= 0) {
      int start = i;
      while (start < last_nominal && toks[start].pos == Pos::kAdv) ++start;
      out.push_back({start, last_nominal});
    }
    i = j;
  }
  return out;
}

}  // namespace

std::string_view PosName(Pos pos) {
  switch (pos) {
    case Pos::kNoun: return "NOUN";
    case Pos::kPropn: return "PROPN";
    case Pos::kVerb: return "VERB";
    case Pos::kAux: return "AUX";
    case Pos::kAdj: return "ADJ";
    case Pos::kAdv: return "ADV";
    case Pos::kDet: return "DET";
    case Pos::kPron: return "PRON";
    case Pos::kAdp: return "ADP";
    case Pos::kCconj: return "CCONJ";
    case Pos::kSconj: return "SCONJ";
    case Pos::kNeg: return "PART";
    case Pos::kNum: return "NUM";
    case Pos::kPunct: return "PUNCT";
    case Pos::kOther: return "X";
  }
  return "X";
}

std::string_view DepName(Dep dep) {
  switch (dep) {
    case Dep::kRoot: return "ROOT";
    case Dep::kNsubj: return "nsubj";
    case Dep::kDobj: return "dobj";
    case Dep::kAmod: return "amod";
    case Dep::kCompound: return "compound";
    case Dep::kNummod: return "nummod";
    case Dep::kDet: return "det";
    case Dep::kPoss: return "poss";
    case Dep::kAcomp: return "acomp";
    case Dep::kAdvmod: return "advmod";
    case Dep::kNeg: return "neg";
    case Dep::kConj: return "conj";
    case Dep::kCc: return "cc";
    case Dep::kPrep: return "prep";
    case Dep::kPobj: return "pobj";
    case Dep::kPunct: return "punct";
    case Dep::kAux: return "aux";
    case Dep::kDep: return "dep";
  }
  return "dep";
}

std::vector<int> DependencyParse::Children(int head, Dep dep) const {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(tokens.size()); ++i) {
    if (tokens[i].head == head && tokens[i].dep == dep) out.push_back(i);
  }
  return out;
}

std::string Lemmatize(std::string_view word, Pos pos) {
  const std::string w = text::Lowercase(word);
  switch (pos) {
    case Pos::kNoun:
    case Pos::kPropn: {
      if (auto it = IrregularNouns().find(w); it != IrregularNouns().end()) {
        return std::string(it->second);
      }
      if (InvariantNouns().count(w) || w.size() <= 3) return w;
      if (EndsWith(w, "ies") && w.size() > 4) return w.substr(0, w.size() - 3) + "y";
      if (EndsWith(w, "sses")) return w.substr(0, w.size() - 2);
      for (std::string_view s : {"ches", "shes", "xes", "zes"}) {
        if (EndsWith(w, s)) return w.substr(0, w.size() - 2);
      }
      if (EndsWith(w, "ss") || EndsWith(w, "us") || EndsWith(w, "is")) return w;
      if (EndsWith(w, "s")) return w.substr(0, w.size() - 1);
      return w;
    }
    case Pos::kVerb: {
      std::string l = VerbLemma(w);
      return l.empty() ? w : l;
    }
    case Pos::kAux: {
      auto it = AuxLemmas().find(w);
      return it == AuxLemmas().end() ? w : std::string(it->second);
    }
    case Pos::kAdj: {
      std::string l = AdjLemma(w);
      return l.empty() ? w : l;
    }
    case Pos::kNeg:
      return "not";
    default:
      return w;
  }
}

bool IsOpinionAdjective(std::string_view lemma) {
  return AdjectiveLexicon().count(lemma) > 0 || HasAdjSuffix(lemma);
}

bool IsPersonalPronoun(std::string_view word) {
  const std::string w = text::Lowercase(word);
  return PersonalPronouns().count(w) || PossessivePronouns().count(w);
}

DependencyParse RuleParser::Parse(std::string_view sentence) const {
  return ParseTokens(text::Tokenize(sentence));
}

DependencyParse RuleParser::ParseTokens(const std::vector<std::string>& words) const {
  DependencyParse parse;
  auto& toks = parse.tokens;
  for (const std::string& w : words) {
    Token t;
    t.text = text::Lowercase(w);
    t.pos = TagWord(t.text);
    toks.push_back(std::move(t));
  }
  ResolveNounVerb(&toks);
  for (Token& t : toks) t.lemma = Lemmatize(t.text, t.pos);

  const int n = static_cast<int>(toks.size());
  if (n == 0) return parse;

  const std::vector<Chunk> chunks = FindChunks(toks);
  std::vector<int> chunk_of(n, -1);
  for (int c = 0; c < static_cast<int>(chunks.size()); ++c) {
    for (int k = chunks[c].start; k <= chunks[c].head; ++k) chunk_of[k] = c;
  }

  // Inside noun chunks.
  for (const Chunk& c : chunks) {
    for (int k = c.start; k < c.head; ++k) {
      Token& t = toks[k];
      t.head = c.head;
      if (IsNominal(t.pos)) t.dep = Dep::kCompound;
      else if (t.pos == Pos::kAdj) t.dep = Dep::kAmod;
      else if (t.pos == Pos::kNum) t.dep = Dep::kNummod;
      else if (t.pos == Pos::kAdv) {
        t.dep = Dep::kAdvmod;
        t.head = k + 1;
      }
    }
    // Determiners / possessives / negation directly before the chunk.
    for (int k = c.start - 1; k >= 0; --k) {
      Token& t = toks[k];
      if (t.pos == Pos::kDet) {
        t.head = c.head;
        t.dep = Dep::kDet;
      } else if (t.pos == Pos::kPron && PossessivePronouns().count(t.text)) {
        t.head = c.head;
        t.dep = Dep::kPoss;
      } else {
        break;
      }
    }
  }

  // Clause-level attachment, one pass left to right.
  int root = -1;
  int subject = -1;       // head of the current clause subject
  int predicate = -1;     // current main verb / copula
  int last_adj_comp = -1; // last adjectival complement, for coordination
  int last_nominal_head = -1;
  int pending_prep = -1;
  for (int i = 0; i < n; ++i) {
    Token& t = toks[i];
    const bool chunk_head = chunk_of[i] >= 0 && chunks[chunk_of[i]].head == i;
    if (chunk_of[i] >= 0 && !chunk_head) continue;
    if (t.head >= 0) continue;  // det/poss already attached
    switch (t.pos) {
      case Pos::kAux:
      case Pos::kVerb: {
        // An auxiliary immediately followed (modulo negation/adverbs) by a
        // main verb is an aux dependent of that verb.
        int next = i + 1;
        while (next < n && (toks[next].pos == Pos::kNeg || toks[next].pos == Pos::kAdv)) {
          ++next;
        }
        if (t.pos == Pos::kAux && next < n && toks[next].pos == Pos::kVerb) {
          t.head = next;
          t.dep = Dep::kAux;
          break;
        }
        if (predicate >= 0 && subject < 0 && last_adj_comp < 0) {
          // Verb chain without a new subject ("stayed and loved").
          t.head = predicate;
          t.dep = Dep::kConj;
        } else if (root < 0) {
          t.dep = Dep::kRoot;
          root = i;
        } else {
          t.head = root;
          t.dep = Dep::kConj;
        }
        predicate = i;
        last_adj_comp = -1;
        pending_prep = -1;
        if (subject >= 0) {
          toks[subject].head = i;
          toks[subject].dep = Dep::kNsubj;
        }
        subject = -1;
        break;
      }
      case Pos::kNeg: {
        int target = -1;
        int next = i + 1;
        while (next < n && toks[next].pos == Pos::kAdv) ++next;
        if (predicate >= 0 && i > predicate) target = predicate;
        else if (next < n && (toks[next].pos == Pos::kVerb || toks[next].pos == Pos::kAdj)) target = next;
        if (target >= 0) {
          t.head = target;
          t.dep = Dep::kNeg;
        }
        break;
      }
      case Pos::kAdv: {
        int next = i + 1;
        if (next < n && (toks[next].pos == Pos::kAdj || toks[next].pos == Pos::kAdv ||
                         toks[next].pos == Pos::kVerb)) {
          t.head = next;
        } else if (predicate >= 0) {
          t.head = predicate;
        }
        t.dep = Dep::kAdvmod;
        break;
      }
      case Pos::kAdj: {
        if (predicate >= 0 &&
            LinkingVerbs().count(toks[predicate].lemma) && last_adj_comp < 0 &&
            pending_prep < 0) {
          t.head = predicate;
          t.dep = Dep::kAcomp;
          last_adj_comp = i;
        } else if (last_adj_comp >= 0) {
          t.head = last_adj_comp;
          t.dep = Dep::kConj;
        } else if (predicate >= 0) {
          t.head = predicate;
          t.dep = Dep::kDep;
        }
        break;
      }
      case Pos::kNoun:
      case Pos::kPropn:
      case Pos::kPron:
      case Pos::kNum: {
        if (pending_prep >= 0) {
          t.head = pending_prep;
          t.dep = Dep::kPobj;
          pending_prep = -1;
        } else if (predicate >= 0 && subject < 0 && last_adj_comp < 0 &&
                   toks[predicate].pos == Pos::kVerb &&
                   toks[predicate].dep != Dep::kDobj) {
          t.head = predicate;
          t.dep = Dep::kDobj;
        } else if (subject >= 0 && i > 0 &&
                   (toks[i - 1].pos == Pos::kCconj || toks[i - 1].pos == Pos::kPunct ||
                    (i > 1 && toks[i - 1].pos == Pos::kDet &&
                     toks[i - 2].pos == Pos::kCconj))) {
          t.head = subject;
          t.dep = Dep::kConj;
        } else {
          // A new clause subject.
          subject = i;
          last_adj_comp = -1;
          if (predicate >= 0 && i > predicate) predicate = -1;
        }
        last_nominal_head = i;
        break;
      }
      case Pos::kAdp: {
        t.head = last_nominal_head >= 0 && last_nominal_head > predicate
                     ? last_nominal_head
                     : predicate;
        t.dep = Dep::kPrep;
        pending_prep = i;
        break;
      }
      case Pos::kCconj: {
        t.dep = Dep::kCc;
        t.head = last_adj_comp >= 0 ? last_adj_comp
                 : predicate >= 0   ? predicate
                                    : last_nominal_head;
        if (t.text == "but" && last_adj_comp < 0) subject = -1;
        break;
      }
      case Pos::kPunct: {
        t.dep = Dep::kPunct;
        t.head = root;
        if (t.text == "." || t.text == "!" || t.text == "?" || t.text == ";") {
          subject = -1;
          predicate = -1;
          last_adj_comp = -1;
          pending_prep = -1;
        }
        break;
      }
      default:
        break;
    }
  }
  if (root < 0) {
    for (const Chunk& c : chunks) {
      if (toks[c.head].head < 0) {
        root = c.head;
        break;
      }
    }
  }
  if (root >= 0) {
    toks[root].head = -1;
    toks[root].dep = Dep::kRoot;
  }
  for (int i = 0; i < n; ++i) {
    if (i != root && toks[i].head < 0) {
      toks[i].head = root;
      toks[i].dep = toks[i].pos == Pos::kPunct ? Dep::kPunct : Dep::kDep;
    }
    if (toks[i].head == i) toks[i].head = root == i ? -1 : root;
  }
  return parse;
}

}  // namespace kgsumm::nlp
