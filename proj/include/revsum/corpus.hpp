// Copyright 2026 The revsum Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "revsum/io.hpp"

namespace revsum::corpus {

struct Review {
  std::string id;
  std::string category;
  std::string body;
  std::optional<int> rating;

  bool operator==(const Review&) const = default;
};

struct CategoryCorpus {
  std::string category;
  std::vector<Review> reviews;
};

struct ColumnMap {
  std::string id = "id";
  std::string category = "category";
  std::string body = "body";
  // Empty means "no rating column".
  std::string rating = "rating";
};

struct Reject {
  std::size_t row_number = 0;
  std::string reason;
};

struct LoadResult {
  std::vector<Review> reviews;
  std::vector<Reject> rejects;
  std::size_t data_rows = 0;
};

/// Loads one review dump. Every data row ends up either in `reviews` or in
/// `rejects` (empty body, malformed row, bad UTF-8, bad rating, duplicate
/// id). Throws IoError if the file is missing and SchemaError naming the
/// first required column absent from the header.
LoadResult load_reviews(const std::filesystem::path& path, io::Format format,
                        const ColumnMap& columns = {});
LoadResult parse_reviews(std::string_view content, io::Format format,
                         const ColumnMap& columns = {});

inline constexpr std::size_t kDefaultMinLength = 120;

/// Keeps reviews whose body has at least `min_len` Unicode scalar values.
std::vector<Review> filter_by_length(const std::vector<Review>& reviews,
                                     std::size_t min_len = kDefaultMinLength);

std::map<std::string, CategoryCorpus> partition_by_category(
    const std::vector<Review>& reviews);

/// File-name-safe form of a category: bytes outside [A-Za-z0-9._-] become '_'.
std::string category_file_stem(const std::string& category);

/// Column layout of the per-category files written by the ingest stage.
const std::vector<std::string>& category_file_header();

void write_category_file(const std::filesystem::path& path, const CategoryCorpus& corpus);
CategoryCorpus read_category_file(const std::filesystem::path& path);

void write_rejects(const std::filesystem::path& path, const std::vector<Reject>& rejects);

}  // namespace revsum::corpus
