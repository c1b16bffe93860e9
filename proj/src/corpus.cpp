// Copyright 2026 The revsum Authors
// SPDX-License-Identifier: Apache-2.0

#include "revsum/corpus.hpp"

#include <unordered_set>

#include "revsum/error.hpp"
#include "revsum/text.hpp"

namespace revsum::corpus {

LoadResult parse_reviews(std::string_view content, io::Format format,
                         const ColumnMap& columns) {
  const auto file = io::parse_delimited(content, format);
  const auto require = [&file](const std::string& name) {
    const auto idx = file.column(name);
    if (!idx) throw SchemaError(name, "missing required column '" + name + "'");
    return *idx;
  };
  const auto id_col = require(columns.id);
  const auto category_col = require(columns.category);
  const auto body_col = require(columns.body);
  const auto rating_col =
      columns.rating.empty() ? std::nullopt : file.column(columns.rating);

  LoadResult result;
  result.data_rows = file.rows.size();
  std::unordered_set<std::string> seen;
  for (const auto& row : file.rows) {
    const auto reject = [&](std::string reason) {
      result.rejects.push_back({row.row_number, std::move(reason)});
    };
    if (row.error) {
      reject("malformed row: " + *row.error);
      continue;
    }
    const bool utf8_ok = text::is_valid_utf8(row.fields[id_col]) &&
                         text::is_valid_utf8(row.fields[category_col]) &&
                         text::is_valid_utf8(row.fields[body_col]);
    if (!utf8_ok) {
      reject("invalid UTF-8");
      continue;
    }
    Review review;
    review.id = std::string(text::trim(row.fields[id_col]));
    review.category = std::string(text::trim(row.fields[category_col]));
    review.body = row.fields[body_col];
    if (text::trim(review.body).empty()) {
      reject("empty body");
      continue;
    }
    if (review.id.empty()) {
      reject("empty id");
      continue;
    }
    if (review.category.empty()) {
      reject("empty category");
      continue;
    }
    if (rating_col) {
      const auto raw = text::trim(row.fields[*rating_col]);
      if (!raw.empty()) {
        const auto v = text::parse_int(raw);
        if (!v || *v < 1 || *v > 5) {
          reject("rating out of range: " + std::string(raw));
          continue;
        }
        review.rating = static_cast<int>(*v);
      }
    }
    if (!seen.insert(review.id).second) {
      reject("duplicate id " + review.id);
      continue;
    }
    result.reviews.push_back(std::move(review));
  }
  return result;
}

LoadResult load_reviews(const std::filesystem::path& path, io::Format format,
                        const ColumnMap& columns) {
  if (!std::filesystem::exists(path)) throw IoError("no such file: " + path.string());
  return parse_reviews(io::read_file(path), format, columns);
}

std::vector<Review> filter_by_length(const std::vector<Review>& reviews, std::size_t min_len) {
  if (min_len < 1) throw ArgumentError("min_len must be >= 1");
  std::vector<Review> out;
  for (const auto& r : reviews) {
    if (text::utf8_length(r.body) >= min_len) out.push_back(r);
  }
  return out;
}

std::map<std::string, CategoryCorpus> partition_by_category(const std::vector<Review>& reviews) {
  std::map<std::string, CategoryCorpus> out;
  for (const auto& r : reviews) {
    auto& bucket = out[r.category];
    bucket.category = r.category;
    bucket.reviews.push_back(r);
  }
  return out;
}

std::string category_file_stem(const std::string& category) {
  std::string out = category;
  for (auto& c : out) {
    const auto u = static_cast<unsigned char>(c);
    const bool ok = (u >= 'a' && u <= 'z') || (u >= 'A' && u <= 'Z') ||
                    (u >= '0' && u <= '9') || u == '.' || u == '_' || u == '-';
    if (!ok) c = '_';
  }
  if (out.empty() || out == "." || out == "..") out = "_" + out;
  return out;
}

const std::vector<std::string>& category_file_header() {
  static const std::vector<std::string> header = {"id", "category", "body", "rating"};
  return header;
}

void write_category_file(const std::filesystem::path& path, const CategoryCorpus& corpus) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(corpus.reviews.size());
  for (const auto& r : corpus.reviews) {
    rows.push_back({r.id, r.category, r.body, r.rating ? std::to_string(*r.rating) : ""});
  }
  io::write_file(path, io::format_tsv(category_file_header(), rows));
}

CategoryCorpus read_category_file(const std::filesystem::path& path) {
  auto loaded = load_reviews(path, io::Format::Tsv);
  if (!loaded.rejects.empty()) {
    throw ValidationError(path.string() + ": row " +
                          std::to_string(loaded.rejects.front().row_number) + ": " +
                          loaded.rejects.front().reason);
  }
  CategoryCorpus corpus;
  if (!loaded.reviews.empty()) corpus.category = loaded.reviews.front().category;
  for (const auto& r : loaded.reviews) {
    if (r.category != corpus.category) {
      throw ValidationError(path.string() + ": mixed categories '" + corpus.category +
                            "' and '" + r.category + "'");
    }
  }
  corpus.reviews = std::move(loaded.reviews);
  return corpus;
}

void write_rejects(const std::filesystem::path& path, const std::vector<Reject>& rejects) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : rejects) rows.push_back({std::to_string(r.row_number), r.reason});
  io::write_file(path, io::format_tsv({"row", "reason"}, rows));
}

}  // namespace revsum::corpus
