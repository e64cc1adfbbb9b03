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

#include <fstream>
#include <map>
#include <set>

#include "fixtures.h"
#include "gtest/gtest.h"
#include "kgsumm/errors.h"
#include "kgsumm/text.h"

namespace kgsumm {
namespace {

using testing::TempDir;

RawRecord Rec(const std::string& product, const std::string& body,
              const std::string& tag = "") {
  RawRecord r;
  r.product_id = product;
  r.review_body = body;
  if (!tag.empty()) r.extra["review_id"] = tag;
  return r;
}

std::string Filler(std::size_t n, char c = 'x') { return std::string(n, c); }

void WriteText(const std::filesystem::path& p, const std::string& s) {
  std::ofstream(p) << s;
}

TEST(CleanTextTest, StripsMarkupAndUrls) {
  EXPECT_EQ(CleanText("Great phone!! <br/> see http://a.b/c"), "Great phone!! see");
  EXPECT_EQ(CleanText(""), "");
  EXPECT_EQ(CleanText("www.example.com is   fine\t\tnow"), "is fine now");
  EXPECT_EQ(CleanText("tab\x01" "bed"), "tab bed");
}

TEST(CleanTextTest, Idempotent) {
  const std::vector<std::string> inputs = {
      "Great phone!! <br/> see http://a.b/c",
      "h<b>ttp://nested.example</b> ok",
      "  spaces   and   <i>tags</i> & ~symbols~ #here ",
      "The room was clean. The staff, however, were rude!",
      "already clean text",
  };
  for (const std::string& s : inputs) {
    const std::string once = CleanText(s);
    EXPECT_EQ(CleanText(once), once) << s;
  }
  EXPECT_EQ(CleanText("already clean text"), "already clean text");
}

TEST(SegmentTest, SplitsOnTerminators) {
  auto s = SegmentSentences("Good room. Bad food.", "r");
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].text, "Good room.");
  EXPECT_EQ(s[1].text, "Bad food.");
  EXPECT_EQ(s[1].sentence_id, "r:1");
  EXPECT_EQ(s[1].ordinal, 1);
  EXPECT_EQ(SegmentSentences("single clause no terminator").size(), 1u);
  EXPECT_TRUE(SegmentSentences("").empty());
}

TEST(SegmentTest, KeepsAbbreviationsTogether) {
  auto s = SegmentSentences("We met Dr. Smith at the desk. Dr. Smith arrived. It was late!");
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[0].text, "We met Dr. Smith at the desk.");
  EXPECT_EQ(s[1].text, "Dr. Smith arrived.");
  EXPECT_EQ(s[2].text, "It was late!");
}

TEST(SegmentTest, CoversTheWholeText) {
  const std::string t = "One. Two!! Three? four five";
  std::string joined;
  for (const Sentence& s : SegmentSentences(t)) {
    EXPECT_FALSE(s.text.empty());
    joined += (joined.empty() ? "" : " ") + s.text;
  }
  EXPECT_EQ(joined, t);
}

TEST(BuildCorporaTest, LengthThresholdIsInclusiveAtHundred) {
  std::vector<RawRecord> recs;
  for (int i = 0; i < 6; ++i) recs.push_back(Rec("p", Filler(100, 'a' + i)));
  recs.push_back(Rec("p", Filler(99, 'z')));
  BuildReport report;
  auto out = BuildCorpora(recs, {}, &report);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].reviews.size(), 6u);
  EXPECT_EQ(report.length_filtered, 1u);
  for (const Review& r : out[0].reviews) EXPECT_EQ(r.text.size(), 100u);
}

TEST(BuildCorporaTest, ProductNeedsMoreThanFiveReviews) {
  std::vector<RawRecord> recs;
  for (int i = 0; i < 5; ++i) recs.push_back(Rec("five", Filler(120, 'a' + i)));
  for (int i = 0; i < 6; ++i) recs.push_back(Rec("six", Filler(120, 'a' + i)));
  BuildReport report;
  auto out = BuildCorpora(recs, {}, &report);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].product_id, "six");
  EXPECT_EQ(report.sparse_products, 1u);
  EXPECT_EQ(report.sparse_product_reviews, 5u);
}

TEST(BuildCorporaTest, GroupsByProductAgainstBruteForce) {
  auto recs = testing::SyntheticRecords(3, 10, 5);
  std::map<std::string, std::set<std::string>> expected;
  for (const RawRecord& r : recs) {
    const std::string cleaned = CleanText(r.review_body);
    if (cleaned.size() >= 100) expected[r.product_id].insert(ReviewIdFor(r));
  }
  auto out = BuildCorpora(recs);
  ASSERT_EQ(out.size(), 3u);
  for (const ProductCorpus& c : out) {
    ASSERT_TRUE(expected.count(c.product_id));
    EXPECT_EQ(c.reviews.size(), 10u);
    std::set<std::string> ids;
    for (const Review& r : c.reviews) {
      EXPECT_EQ(r.product_id, c.product_id);
      ids.insert(r.review_id);
    }
    EXPECT_EQ(ids, expected[c.product_id]);
    EXPECT_TRUE(std::is_sorted(c.reviews.begin(), c.reviews.end(),
                               [](const Review& a, const Review& b) {
                                 return a.review_id < b.review_id;
                               }));
  }
  EXPECT_TRUE(std::is_sorted(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.product_id < b.product_id;
  }));
}

TEST(BuildCorporaTest, DropsExactDuplicatesWithinProduct) {
  std::vector<RawRecord> recs;
  for (int i = 0; i < 6; ++i) recs.push_back(Rec("p", Filler(120, 'a' + i), "r" + std::to_string(i)));
  recs.push_back(Rec("p", Filler(120, 'a'), "copy"));
  BuildReport report;
  auto out = BuildCorpora(recs, {}, &report);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].reviews.size(), 6u);
  EXPECT_EQ(report.duplicates, 1u);
}

TEST(BuildCorporaTest, IndependentOfInputOrder) {
  auto recs = testing::SyntheticRecords(4, 8, 21);
  auto a = BuildCorpora(recs);
  std::reverse(recs.begin(), recs.end());
  auto b = BuildCorpora(recs);
  EXPECT_EQ(a, b);
}

TEST(LoaderTest, AmazonKeepsEssentialColumns) {
  TempDir dir("corpus");
  const std::string header =
      "marketplace\tcustomer_id\treview_id\tproduct_id\tproduct_parent\tproduct_title\t"
      "product_category\tstar_rating\thelpful_votes\ttotal_votes\tvine\tverified_purchase\t"
      "review_headline\treview_body\treview_date\n";
  const std::string row =
      "US\t1\tR1\tB00X\t9\tPhone\tWireless\t5\t0\t0\tN\tY\tGreat\tWorks well.\t2015-08-31\n";
  const std::string short_row = "US\t2\tR2\tB00X\n";
  WriteText(dir.path() / "a.tsv", header + row + short_row);
  std::vector<RawRecord> got;
  LoadStats stats = LoadDataset(dir.path() / "a.tsv", Source::kAmazon,
                                [&](RawRecord r) { got.push_back(std::move(r)); });
  EXPECT_EQ(stats.rows, 2u);
  EXPECT_EQ(stats.malformed, 1u);
  ASSERT_EQ(got.size(), 1u);
  EXPECT_EQ(got[0].product_id, "B00X");
  EXPECT_EQ(got[0].review_headline, "Great");
  EXPECT_EQ(got[0].review_body, "Works well.");
  EXPECT_EQ(got[0].extra.at("product_category"), "Wireless");
}

TEST(LoaderTest, AmazonRowWithoutBodyColumnIsCounted) {
  TempDir dir("corpus");
  WriteText(dir.path() / "a.tsv", "product_id\treview_body\nB1\tfine text\nB2\n");
  auto loaded = LoadDatasets({dir.path() / "a.tsv"}, Source::kAmazon);
  EXPECT_EQ(loaded.records.size(), 1u);
  EXPECT_EQ(loaded.stats.malformed, 1u);
  WriteText(dir.path() / "bad.tsv", "foo\tbar\n1\t2\n");
  EXPECT_THROW(LoadDatasets({dir.path() / "bad.tsv"}, Source::kAmazon), ConfigError);
}

TEST(LoaderTest, EmptyFileYieldsNothing) {
  TempDir dir("corpus");
  WriteText(dir.path() / "e.tsv", "");
  for (Source s : {Source::kAmazon, Source::kSpace, Source::kYelp}) {
    auto loaded = LoadDatasets({dir.path() / "e.tsv"}, s);
    EXPECT_TRUE(loaded.records.empty());
    EXPECT_EQ(loaded.stats.rows, 0u);
    EXPECT_EQ(loaded.stats.malformed, 0u);
  }
}

TEST(LoaderTest, SpaceAndYelpMapToRecords) {
  TempDir dir("corpus");
  WriteText(dir.path() / "s.jsonl",
            R"({"entity_id":"h1","reviews":[{"review_id":"a","title":"Nice","sentences":["Room ok.","Staff kind."]},{"text":"Pool warm."},3]})"
            "\n{not json\n");
  WriteText(dir.path() / "y.jsonl",
            R"({"business_id":"b1","text":"Tasty food.","stars":4})"
            "\n" R"({"business_id":"b2"})" "\n");
  auto space = LoadDatasets({dir.path() / "s.jsonl"}, Source::kSpace);
  ASSERT_EQ(space.records.size(), 2u);
  EXPECT_EQ(space.stats.rows, 4u);
  EXPECT_EQ(space.stats.malformed, 2u);
  EXPECT_EQ(space.records[0].product_id, "h1");
  EXPECT_EQ(space.records[0].review_body, "Room ok. Staff kind.");
  EXPECT_EQ(space.records[0].review_headline, "Nice");
  auto yelp = LoadDatasets({dir.path() / "y.jsonl"}, Source::kYelp);
  ASSERT_EQ(yelp.records.size(), 1u);
  EXPECT_EQ(yelp.stats.malformed, 1u);
  EXPECT_EQ(yelp.records[0].extra.at("stars"), "4");
}

TEST(LoaderTest, ErrorsAreTyped) {
  EXPECT_THROW(ParseSource("imdb"), ConfigError);
  EXPECT_EQ(ParseSource("SPACE"), Source::kSpace);
  EXPECT_THROW(LoadDatasets({"/nonexistent/file.tsv"}, Source::kAmazon), IoError);
}

TEST(ConservationTest, EveryRowIsAccountedFor) {
  auto recs = testing::SyntheticRecords(5, 9, 3);
  recs.push_back(Rec("hotel_0", "too short"));
  recs.push_back(recs.front());
  for (int i = 0; i < 3; ++i) recs.push_back(Rec("lonely", Filler(150, 'a' + i)));
  BuildReport report;
  auto out = BuildCorpora(recs, {}, &report);
  std::size_t emitted = 0;
  for (const auto& c : out) emitted += c.reviews.size();
  EXPECT_EQ(emitted, report.emitted_reviews);
  EXPECT_EQ(recs.size(), report.emitted_reviews + report.length_filtered +
                             report.duplicates + report.sparse_product_reviews);
}

TEST(PersistenceTest, RoundTripAndByteIdentical) {
  auto corpora = BuildCorpora(testing::SyntheticRecords(3, 7, 11));
  TempDir a("corpus");
  TempDir b("corpus");
  WriteCorpora(a.path(), corpora);
  WriteCorpora(b.path(), BuildCorpora(testing::SyntheticRecords(3, 7, 11)));
  EXPECT_EQ(ReadCorpora(a.path()), corpora);
  for (const auto& p : text::ListFiles(a.path(), ".jsonl")) {
    EXPECT_EQ(text::ReadFile(p), text::ReadFile(b.path() / p.filename()));
  }
  EXPECT_THROW(CorpusFromJsonLine("{\"product_id\":1}"), IoError);
}

}  // namespace
}  // namespace kgsumm
