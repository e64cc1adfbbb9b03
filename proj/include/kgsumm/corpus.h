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

#ifndef KGSUMM_CORPUS_H_
#define KGSUMM_CORPUS_H_

// Review ingestion: dataset loaders, text cleaning, sentence segmentation and
// per-product corpus assembly.

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace kgsumm {

enum class Source { kAmazon, kSpace, kYelp };

Source ParseSource(std::string_view name);  // throws ConfigError
std::string SourceName(Source source);

struct RawRecord {
  Source source = Source::kAmazon;
  std::string product_id;
  std::string review_headline;
  std::string review_body;
  // Remaining fields of the native row, kept only for provenance.
  std::map<std::string, std::string> extra;
};

struct Sentence {
  std::string sentence_id;  // "<review_id>:<ordinal>"
  int ordinal = 0;
  std::string text;

  friend bool operator==(const Sentence&, const Sentence&) = default;
};

struct Review {
  std::string review_id;
  std::string product_id;
  std::string text;
  std::vector<Sentence> sentences;

  friend bool operator==(const Review&, const Review&) = default;
};

struct ProductCorpus {
  std::string product_id;
  std::string category;
  std::vector<Review> reviews;

  friend bool operator==(const ProductCorpus&, const ProductCorpus&) = default;
};

struct LoadStats {
  std::size_t rows = 0;       // review rows/objects seen
  std::size_t malformed = 0;  // rows skipped as unparseable
};

// Streams one RawRecord per review row/object of `path` into `sink`.
// Throws IoError when the file cannot be read.
LoadStats LoadDataset(const std::filesystem::path& path, Source source,
                      const std::function<void(RawRecord)>& sink);

struct LoadedRecords {
  std::vector<RawRecord> records;
  LoadStats stats;
};

// Loads every file (in the given order); files are parsed in parallel and
// concatenated in input order.
LoadedRecords LoadDatasets(const std::vector<std::filesystem::path>& paths,
                           Source source);

// Removes URLs, markup tags, entities and control characters, replaces the
// stripped punctuation set  " # $ % & * + / < = > @ [ \ ] ^ _ ` { | } ~  with
// spaces and collapses whitespace. Sentence terminators, commas, apostrophes,
// hyphens, colons, semicolons and parentheses survive. Idempotent.
std::string CleanText(std::string_view raw);

// Splits cleaned text after runs of . ! ? that are followed by whitespace,
// except after known abbreviations and single-letter initials.
std::vector<Sentence> SegmentSentences(std::string_view review_text,
                                       std::string_view review_id = "");

struct CorpusOptions {
  // Minimum length in bytes of the cleaned headline + body, whitespace
  // included.
  std::size_t min_chars = 100;
  std::size_t min_reviews = 6;
};

struct BuildReport {
  std::size_t length_filtered = 0;
  std::size_t duplicates = 0;
  std::size_t sparse_product_reviews = 0;  // reviews of products below quota
  std::size_t sparse_products = 0;
  std::size_t emitted_reviews = 0;
};

std::string ReviewIdFor(const RawRecord& record);

// Cleans, filters, de-duplicates and groups records. Output is ordered by
// product_id, reviews by review_id.
std::vector<ProductCorpus> BuildCorpora(const std::vector<RawRecord>& records,
                                        const CorpusOptions& options = {},
                                        BuildReport* report = nullptr);

std::string CorpusToJsonLine(const ProductCorpus& corpus);
ProductCorpus CorpusFromJsonLine(std::string_view line);

void WriteCorpora(const std::filesystem::path& dir,
                  const std::vector<ProductCorpus>& corpora);
std::vector<ProductCorpus> ReadCorpora(const std::filesystem::path& dir);

}  // namespace kgsumm

#endif  // KGSUMM_CORPUS_H_
