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

#include "kgsumm/corpus.h"

#include <algorithm>
#include <exception>
#include <set>
#include <sstream>
#include <unordered_map>

#include "json.hpp"
#include "kgsumm/errors.h"
#include "kgsumm/text.h"

namespace kgsumm {
namespace {

using nlohmann::json;

bool IsSpace(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

bool IsAlpha(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

bool StartsWithNoCase(std::string_view s, std::size_t pos, std::string_view p) {
  if (pos + p.size() > s.size()) return false;
  for (std::size_t i = 0; i < p.size(); ++i) {
    char c = s[pos + i];
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    if (c != p[i]) return false;
  }
  return true;
}

bool IsStrippedPunct(char c) {
  return std::string_view("\"#$%&*+/<=>@[\\]^_`{|}~").find(c) !=
         std::string_view::npos;
}

std::string RemoveUrls(std::string_view s) {
  std::string out;
  std::size_t i = 0;
  while (i < s.size()) {
    if (StartsWithNoCase(s, i, "http://") || StartsWithNoCase(s, i, "https://") ||
        StartsWithNoCase(s, i, "www.")) {
      while (i < s.size() && !IsSpace(s[i])) ++i;
      out.push_back(' ');
      continue;
    }
    out.push_back(s[i++]);
  }
  return out;
}

// Drops <tag ...>, </tag>, <!-- ... --> style markup and &entities;.
std::string RemoveMarkup(std::string_view s) {
  std::string out;
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] == '<' && i + 1 < s.size() &&
        (IsAlpha(s[i + 1]) || s[i + 1] == '/' || s[i + 1] == '!')) {
      const std::size_t close = s.find('>', i + 1);
      const std::size_t reopen = s.find('<', i + 1);
      if (close != std::string_view::npos && close < reopen) {
        out.push_back(' ');
        i = close + 1;
        continue;
      }
    }
    if (s[i] == '&') {
      std::size_t j = i + 1;
      if (j < s.size() && s[j] == '#') ++j;
      const std::size_t name_start = j;
      while (j < s.size() && j - name_start < 10 &&
             (IsAlpha(s[j]) || (s[j] >= '0' && s[j] <= '9'))) {
        ++j;
      }
      if (j > name_start && j < s.size() && s[j] == ';') {
        out.push_back(' ');
        i = j + 1;
        continue;
      }
    }
    out.push_back(s[i++]);
  }
  return out;
}

std::string CleanOnce(std::string_view raw) {
  std::string s = RemoveMarkup(RemoveUrls(raw));
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    const unsigned char u = static_cast<unsigned char>(c);
    if (u < 0x20 || u == 0x7f || IsSpace(c) || IsStrippedPunct(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space && !out.empty()) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

const std::set<std::string>& Abbreviations() {
  static const std::set<std::string> kAbbrev = {
      "dr", "mr", "mrs", "ms", "st", "jr", "sr", "prof", "vs", "etc", "e.g",
      "i.e", "no", "inc", "ltd", "co", "mt", "ft", "approx", "sgt", "capt",
      "gen", "rev", "hon", "u.s", "a.m", "p.m", "min", "max", "oz", "lb", "lbs"};
  return kAbbrev;
}

// Word (letters and inner dots) ending just before position `end`.
std::string WordBefore(std::string_view s, std::size_t end) {
  std::size_t b = end;
  while (b > 0 && (IsAlpha(s[b - 1]) || s[b - 1] == '.')) --b;
  std::string w = text::Lowercase(s.substr(b, end - b));
  while (!w.empty() && w.front() == '.') w.erase(w.begin());
  return w;
}

std::string JsonString(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return "";
  if (it->is_string()) return it->get<std::string>();
  return it->dump();
}

void AddExtras(const json& obj, RawRecord* rec,
               std::initializer_list<const char*> skip) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool skipped = false;
    for (const char* k : skip) skipped = skipped || it.key() == k;
    if (skipped || it->is_structured()) continue;
    rec->extra[it.key()] = it->is_string() ? it->get<std::string>() : it->dump();
  }
}

LoadStats LoadAmazon(std::istream& in, const std::function<void(RawRecord)>& sink) {
  LoadStats stats;
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (header.empty()) {
      if (text::Trim(line).empty()) continue;
      header = text::Split(line, '\t');
      continue;
    }
    if (text::Trim(line).empty()) continue;
    ++stats.rows;
    std::vector<std::string> fields = text::Split(line, '\t');
    if (fields.size() != header.size()) {
      ++stats.malformed;
      continue;
    }
    RawRecord rec;
    rec.source = Source::kAmazon;
    bool has_body = false;
    for (std::size_t i = 0; i < header.size(); ++i) {
      const std::string& key = header[i];
      if (key == "product_id") {
        rec.product_id = text::Trim(fields[i]);
      } else if (key == "review_headline") {
        rec.review_headline = fields[i];
      } else if (key == "review_body") {
        rec.review_body = fields[i];
        has_body = true;
      } else {
        rec.extra[key] = fields[i];
      }
    }
    if (!has_body || rec.product_id.empty()) {
      ++stats.malformed;
      continue;
    }
    sink(std::move(rec));
  }
  if (header.empty()) return stats;
  const bool has_columns =
      std::find(header.begin(), header.end(), "product_id") != header.end() &&
      std::find(header.begin(), header.end(), "review_body") != header.end();
  if (!has_columns) {
    throw ConfigError("amazon TSV header lacks product_id/review_body columns");
  }
  return stats;
}

// One SPACE line is an entity with a "reviews" array (sentences or text per
// review) or a single flat review object.
LoadStats LoadSpace(std::istream& in, const std::function<void(RawRecord)>& sink) {
  LoadStats stats;
  std::string line;
  while (std::getline(in, line)) {
    if (text::Trim(line).empty()) continue;
    json obj = json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) {
      ++stats.rows;
      ++stats.malformed;
      continue;
    }
    std::string entity = JsonString(obj, "entity_id");
    if (entity.empty()) entity = JsonString(obj, "product_id");
    std::vector<json> reviews;
    if (obj.contains("reviews") && obj["reviews"].is_array()) {
      for (const json& r : obj["reviews"]) reviews.push_back(r);
    } else {
      reviews.push_back(obj);
    }
    for (const json& r : reviews) {
      ++stats.rows;
      if (!r.is_object()) {
        ++stats.malformed;
        continue;
      }
      RawRecord rec;
      rec.source = Source::kSpace;
      rec.product_id = entity;
      rec.review_headline = JsonString(r, "title");
      if (r.contains("sentences") && r["sentences"].is_array()) {
        std::vector<std::string> parts;
        for (const json& s : r["sentences"]) {
          if (s.is_string()) parts.push_back(s.get<std::string>());
        }
        rec.review_body = text::Join(parts, " ");
      } else {
        rec.review_body = JsonString(r, "text");
      }
      if (rec.product_id.empty() || rec.review_body.empty()) {
        ++stats.malformed;
        continue;
      }
      AddExtras(r, &rec, {"title", "text", "sentences", "entity_id"});
      sink(std::move(rec));
    }
  }
  return stats;
}

LoadStats LoadYelp(std::istream& in, const std::function<void(RawRecord)>& sink) {
  LoadStats stats;
  std::string line;
  while (std::getline(in, line)) {
    if (text::Trim(line).empty()) continue;
    ++stats.rows;
    json obj = json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) {
      ++stats.malformed;
      continue;
    }
    RawRecord rec;
    rec.source = Source::kYelp;
    rec.product_id = JsonString(obj, "business_id");
    rec.review_body = JsonString(obj, "text");
    if (rec.product_id.empty() || rec.review_body.empty()) {
      ++stats.malformed;
      continue;
    }
    AddExtras(obj, &rec, {"business_id", "text"});
    sink(std::move(rec));
  }
  return stats;
}

std::string CategoryOf(const RawRecord& rec) {
  auto it = rec.extra.find("product_category");
  if (it != rec.extra.end() && !it->second.empty()) return it->second;
  switch (rec.source) {
    case Source::kSpace:
      return "hotel";
    case Source::kYelp:
      return "business";
    case Source::kAmazon:
      break;
  }
  return "unknown";
}

}  // namespace

Source ParseSource(std::string_view name) {
  const std::string n = text::Lowercase(name);
  if (n == "amazon") return Source::kAmazon;
  if (n == "space") return Source::kSpace;
  if (n == "yelp") return Source::kYelp;
  throw ConfigError("unknown source '" + std::string(name) +
                    "' (expected amazon, space or yelp)");
}

std::string SourceName(Source source) {
  switch (source) {
    case Source::kAmazon:
      return "amazon";
    case Source::kSpace:
      return "space";
    case Source::kYelp:
      return "yelp";
  }
  return "unknown";
}

LoadStats LoadDataset(const std::filesystem::path& path, Source source,
                      const std::function<void(RawRecord)>& sink) {
  std::istringstream in(text::ReadFile(path));
  switch (source) {
    case Source::kAmazon:
      return LoadAmazon(in, sink);
    case Source::kSpace:
      return LoadSpace(in, sink);
    case Source::kYelp:
      return LoadYelp(in, sink);
  }
  throw ConfigError("unknown source");
}

LoadedRecords LoadDatasets(const std::vector<std::filesystem::path>& paths,
                           Source source) {
  const int n = static_cast<int>(paths.size());
  std::vector<LoadedRecords> parts(paths.size());
  std::vector<std::exception_ptr> errors(paths.size());
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    try {
      parts[i].stats = LoadDataset(paths[i], source, [&](RawRecord r) {
        parts[i].records.push_back(std::move(r));
      });
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  LoadedRecords all;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (errors[i]) std::rethrow_exception(errors[i]);
    all.stats.rows += parts[i].stats.rows;
    all.stats.malformed += parts[i].stats.malformed;
    for (RawRecord& r : parts[i].records) all.records.push_back(std::move(r));
  }
  return all;
}

std::string CleanText(std::string_view raw) {
  std::string current = CleanOnce(raw);
  // Removing one construct can expose another ("h<b>ttp://"), so iterate to
  // a fixed point.
  for (int guard = 0; guard < 16; ++guard) {
    std::string next = CleanOnce(current);
    if (next == current) break;
    current = std::move(next);
  }
  return current;
}

std::vector<Sentence> SegmentSentences(std::string_view review_text,
                                       std::string_view review_id) {
  std::vector<std::string> pieces;
  const std::string_view s = review_text;
  std::size_t start = 0;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (c != '.' && c != '!' && c != '?') {
      ++i;
      continue;
    }
    std::size_t run_end = i;
    while (run_end < s.size() &&
           (s[run_end] == '.' || s[run_end] == '!' || s[run_end] == '?')) {
      ++run_end;
    }
    std::size_t after = run_end;
    while (after < s.size() && s[after] == ')') ++after;
    const bool boundary = after == s.size() || IsSpace(s[after]);
    bool abbreviation = false;
    if (boundary && run_end - i == 1 && c == '.') {
      const std::string w = WordBefore(s, i);
      abbreviation = Abbreviations().count(w) > 0 ||
                     (w.size() == 1 && i >= 1 && IsAlpha(s[i - 1]) &&
                      (i < 2 || !IsAlpha(s[i - 2])) && after < s.size());
    }
    if (boundary && !abbreviation) {
      pieces.emplace_back(s.substr(start, after - start));
      start = after;
    }
    i = after;
  }
  if (start < s.size()) pieces.emplace_back(s.substr(start));

  std::vector<Sentence> out;
  for (const std::string& p : pieces) {
    std::string t = text::Trim(p);
    if (t.empty()) continue;
    Sentence sent;
    sent.ordinal = static_cast<int>(out.size());
    sent.sentence_id = std::string(review_id) + ":" + std::to_string(sent.ordinal);
    sent.text = std::move(t);
    out.push_back(std::move(sent));
  }
  return out;
}

std::string ReviewIdFor(const RawRecord& record) {
  std::string key = SourceName(record.source);
  key += '\x1f';
  key += record.product_id;
  key += '\x1f';
  key += record.review_headline;
  key += '\x1f';
  key += record.review_body;
  auto it = record.extra.find("review_id");
  if (it != record.extra.end()) {
    key += '\x1f';
    key += it->second;
  }
  return text::HexFingerprint(key);
}

std::vector<ProductCorpus> BuildCorpora(const std::vector<RawRecord>& records,
                                        const CorpusOptions& options,
                                        BuildReport* report) {
  BuildReport local;
  BuildReport& r = report ? *report : local;
  r = BuildReport{};

  struct Pending {
    Review review;
    std::string category;
  };
  std::map<std::string, std::vector<Pending>> by_product;
  for (const RawRecord& rec : records) {
    const std::string merged = rec.review_headline.empty()
                                   ? rec.review_body
                                   : rec.review_headline + " " + rec.review_body;
    std::string cleaned = CleanText(merged);
    if (cleaned.size() < options.min_chars) {
      ++r.length_filtered;
      continue;
    }
    Pending p;
    p.review.review_id = ReviewIdFor(rec);
    p.review.product_id = rec.product_id;
    p.review.text = std::move(cleaned);
    p.category = CategoryOf(rec);
    by_product[rec.product_id].push_back(std::move(p));
  }

  std::vector<ProductCorpus> out;
  for (auto& [product_id, pending] : by_product) {
    std::sort(pending.begin(), pending.end(), [](const Pending& a, const Pending& b) {
      if (a.review.review_id != b.review.review_id) {
        return a.review.review_id < b.review.review_id;
      }
      return a.review.text < b.review.text;
    });
    ProductCorpus corpus;
    corpus.product_id = product_id;
    corpus.category = pending.front().category;
    std::set<std::string> seen;
    for (Pending& p : pending) {
      if (!seen.insert(p.review.text).second) {
        ++r.duplicates;
        continue;
      }
      p.review.sentences = SegmentSentences(p.review.text, p.review.review_id);
      corpus.reviews.push_back(std::move(p.review));
    }
    if (corpus.reviews.size() < options.min_reviews) {
      r.sparse_product_reviews += corpus.reviews.size();
      ++r.sparse_products;
      continue;
    }
    r.emitted_reviews += corpus.reviews.size();
    out.push_back(std::move(corpus));
  }
  return out;
}

std::string CorpusToJsonLine(const ProductCorpus& corpus) {
  json reviews = json::array();
  for (const Review& rv : corpus.reviews) {
    json sentences = json::array();
    for (const Sentence& s : rv.sentences) {
      sentences.push_back(
          {{"sentence_id", s.sentence_id}, {"ordinal", s.ordinal}, {"text", s.text}});
    }
    reviews.push_back(
        {{"review_id", rv.review_id}, {"text", rv.text}, {"sentences", sentences}});
  }
  json j = {{"product_id", corpus.product_id},
            {"category", corpus.category},
            {"reviews", reviews}};
  return j.dump() + "\n";
}

ProductCorpus CorpusFromJsonLine(std::string_view line) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw IoError("corpus line is not JSON");
  try {
    ProductCorpus c;
    c.product_id = j.at("product_id").get<std::string>();
    c.category = j.at("category").get<std::string>();
    for (const json& rv : j.at("reviews")) {
      Review review;
      review.review_id = rv.at("review_id").get<std::string>();
      review.product_id = c.product_id;
      review.text = rv.at("text").get<std::string>();
      for (const json& s : rv.at("sentences")) {
        review.sentences.push_back(Sentence{s.at("sentence_id").get<std::string>(),
                                            s.at("ordinal").get<int>(),
                                            s.at("text").get<std::string>()});
      }
      c.reviews.push_back(std::move(review));
    }
    return c;
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed corpus record: ") + e.what());
  }
}

void WriteCorpora(const std::filesystem::path& dir,
                  const std::vector<ProductCorpus>& corpora) {
  std::filesystem::create_directories(dir);
  for (const ProductCorpus& c : corpora) {
    text::WriteFileAtomic(dir / (text::FileStem(c.product_id) + ".jsonl"),
                          CorpusToJsonLine(c));
  }
}

std::vector<ProductCorpus> ReadCorpora(const std::filesystem::path& dir) {
  std::vector<ProductCorpus> out;
  for (const auto& path : text::ListFiles(dir, ".jsonl")) {
    for (const std::string& line : text::ReadLines(path)) {
      out.push_back(CorpusFromJsonLine(line));
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.product_id < b.product_id;
  });
  return out;
}

}  // namespace kgsumm
