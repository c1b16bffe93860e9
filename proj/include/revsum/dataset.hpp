// Copyright 2026 The revsum Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace revsum {

inline constexpr std::size_t kDefaultGroupSize = 15;

/// A group of same-cluster reviews treated as one product's review set.
struct ProductRow {
  std::string row_id;
  std::string category;
  int cluster_id = 0;
  std::vector<std::string> reviews;

  bool operator==(const ProductRow&) const = default;
};

struct AssembleResult {
  std::vector<ProductRow> rows;
  std::size_t discarded = 0;
};

namespace cluster {

/// Chunks each cluster's reviews, in corpus order, into consecutive groups
/// of exactly `group_size`; leftovers are discarded and counted. Clusters
/// are visited in ascending id. Row ids are "<category stem>-<cluster>-<chunk>".
AssembleResult assemble_rows(const std::vector<int>& assignments,
                             const std::vector<std::string>& bodies,
                             const std::string& category,
                             std::size_t group_size = kDefaultGroupSize);

}  // namespace cluster

namespace dataset {

/// row_id, cluster_id, category, review_1 .. review_<group_size>
std::vector<std::string> header(std::size_t group_size);

void write_rows(const std::filesystem::path& path, const std::vector<ProductRow>& rows,
                std::size_t group_size);
std::string format_rows(const std::vector<ProductRow>& rows, std::size_t group_size);

/// Reads a row file; the group size is inferred from the header. Throws
/// SchemaError on an unexpected header, ValidationError on bad rows.
std::vector<ProductRow> read_rows(const std::filesystem::path& path,
                                  std::size_t* group_size = nullptr);

/// Concatenates row files in the given order into `out`. All parts must
/// share the header for `group_size`; a mismatch names the offending file.
/// Returns the number of rows written.
std::size_t concat_datasets(const std::vector<std::filesystem::path>& parts,
                            const std::filesystem::path& out, std::size_t group_size);

}  // namespace dataset
}  // namespace revsum
