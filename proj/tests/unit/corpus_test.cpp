// Copyright 2026 The revsum Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>

#include "revsum/corpus.hpp"
#include "revsum/error.hpp"
#include "revsum/io.hpp"
#include "support.hpp"

namespace revsum::corpus {
namespace {

using revsum::testing::data_path;
using revsum::testing::TempDir;

Review make(std::string id, std::string category, std::string body) {
  return {std::move(id), std::move(category), std::move(body), std::nullopt};
}

TEST(LoadReviews, EmptyBodyIsDroppedAndCounted) {
  const auto r = load_reviews(data_path("reviews_3.tsv"), io::Format::Tsv);
  EXPECT_EQ(r.reviews.size(), 2u);
  ASSERT_EQ(r.rejects.size(), 1u);
  EXPECT_EQ(r.rejects[0].row_number, 2u);
  EXPECT_EQ(r.rejects[0].reason, "empty body");
  EXPECT_EQ(r.reviews.size() + r.rejects.size(), r.data_rows);
  EXPECT_EQ(r.reviews[0].rating, 4);
  EXPECT_FALSE(r.reviews[1].rating);
}

TEST(LoadReviews, MissingColumnNamesTheColumn) {
  try {
    load_reviews(data_path("no_category.csv"), io::Format::Csv);
    FAIL() << "expected a schema error";
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.column(), "category");
  }
}

TEST(LoadReviews, MissingFileIsIoError) {
  EXPECT_THROW(load_reviews(data_path("does_not_exist.tsv"), io::Format::Tsv), IoError);
}

TEST(LoadReviews, ConfigurableColumnsOnCsvFixture) {
  ColumnMap cols{"review_id", "product_category", "text", "stars"};
  const auto r = load_reviews(data_path("reviews_10.csv"), io::Format::Csv, cols);
  ASSERT_EQ(r.reviews.size(), 10u);
  EXPECT_TRUE(r.rejects.empty());
  for (const auto& rev : r.reviews) EXPECT_EQ(rev.category, "electronics");
  EXPECT_EQ(r.reviews[6].body, "Speaker is loud, \"room filling\" sound, weak bass.");
}

TEST(LoadReviews, RejectReasons) {
  const std::string content =
      "id\tcategory\tbody\trating\n"
      "a\tx\tok body\t3\n"
      "a\tx\tduplicate id\t3\n"
      "b\tx\tbad rating\t9\n"
      "c\t\tno category\t1\n"
      "\tx\tno id\t1\n"
      "d\tx\tbad \xC3 utf8\t1\n"
      "e\tx\ttoo\tmany\tfields\n";
  const auto r = parse_reviews(content, io::Format::Tsv);
  EXPECT_EQ(r.data_rows, 7u);
  ASSERT_EQ(r.reviews.size(), 1u);
  ASSERT_EQ(r.rejects.size(), 6u);
  EXPECT_EQ(r.rejects[0].reason, "duplicate id a");
  EXPECT_EQ(r.rejects[1].reason, "rating out of range: 9");
  EXPECT_EQ(r.rejects[2].reason, "empty category");
  EXPECT_EQ(r.rejects[3].reason, "empty id");
  EXPECT_EQ(r.rejects[4].reason, "invalid UTF-8");
  EXPECT_EQ(r.rejects[5].reason.rfind("malformed row", 0), 0u);
}

TEST(FilterByLength, BoundaryUsesGreaterOrEqual) {
  const std::vector<Review> in = {make("a", "c", std::string(119, 'x')), make("b", "c", std::string(120, 'x'))};
  const auto out = filter_by_length(in, 120);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].id, "b");
}

TEST(FilterByLength, CountsScalarsNotBytes) {
  std::string body;
  for (int i = 0; i < 120; ++i) body += "\xC3\xA9";  // 240 bytes, 120 characters
  const std::vector<Review> in = {make("a", "c", body), make("b", "c", body.substr(2))};
  const auto out = filter_by_length(in, 120);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].id, "a");
}

TEST(FilterByLength, FixtureOfFiveLengths) {
  std::vector<Review> in;
  for (const int n : {50, 120, 121, 119, 300}) in.push_back(make(std::to_string(n), "c", std::string(n, 'y')));
  const auto out = filter_by_length(in);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[0].id, "120");
  EXPECT_EQ(out[1].id, "121");
  EXPECT_EQ(out[2].id, "300");
}

TEST(FilterByLength, EmptyAndBadArgument) {
  EXPECT_TRUE(filter_by_length({}).empty());
  EXPECT_THROW(filter_by_length({}, 0), ArgumentError);
}

TEST(FilterByLength, IdempotentOnRandomInputs) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Review> in;
    for (int i = 0; i < 20; ++i) in.push_back(make(std::to_string(i), "c", std::string(rng() % 250 + 1, 'z')));
    const auto min_len = rng() % 200 + 1;
    const auto once = filter_by_length(in, min_len);
    EXPECT_EQ(filter_by_length(once, min_len), once);
  }
}

TEST(Partition, Examples) {
  EXPECT_TRUE(partition_by_category({}).empty());
  const auto one = partition_by_category({make("1", "a", "x"), make("2", "a", "y")});
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one.at("a").reviews.size(), 2u);
  const auto two = partition_by_category({make("1", "A", "x"), make("2", "B", "y"), make("3", "A", "z")});
  ASSERT_EQ(two.size(), 2u);
  EXPECT_EQ(two.at("A").reviews.size(), 2u);
  EXPECT_EQ(two.at("A").reviews[1].id, "3");
  EXPECT_EQ(two.at("B").reviews.size(), 1u);
}

TEST(Partition, UnionDisjointAndOrdered) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Review> in;
    for (int i = 0; i < 40; ++i) in.push_back(make(std::to_string(i), std::string(1, static_cast<char>('a' + rng() % 4)), "b"));
    const auto parts = partition_by_category(in);
    std::size_t total = 0;
    for (const auto& [cat, part] : parts) {
      total += part.reviews.size();
      EXPECT_EQ(part.category, cat);
      for (std::size_t i = 0; i < part.reviews.size(); ++i) {
        EXPECT_EQ(part.reviews[i].category, cat);
        if (i) {
          EXPECT_LT(std::stoi(part.reviews[i - 1].id), std::stoi(part.reviews[i].id));
        }
      }
    }
    EXPECT_EQ(total, in.size());
  }
}

TEST(CategoryFiles, RoundTripAndStem) {
  TempDir dir;
  CategoryCorpus c{"Home & Kitchen", {make("1", "Home & Kitchen", "line\nbreak\tand tab")}};
  c.reviews[0].rating = 5;
  EXPECT_EQ(category_file_stem(c.category), "Home___Kitchen");
  EXPECT_EQ(category_file_stem(".."), "_..");
  const auto p = dir / (category_file_stem(c.category) + ".tsv");
  write_category_file(p, c);
  const auto back = read_category_file(p);
  EXPECT_EQ(back.category, c.category);
  EXPECT_EQ(back.reviews, c.reviews);
}

TEST(LoadReviews, DeterministicForIdenticalBytes) {
  const auto a = load_reviews(data_path("reviews_60.tsv"), io::Format::Tsv);
  const auto b = load_reviews(data_path("reviews_60.tsv"), io::Format::Tsv);
  EXPECT_EQ(a.reviews, b.reviews);
  EXPECT_EQ(a.data_rows, 60u);
}

}  // namespace
}  // namespace revsum::corpus
