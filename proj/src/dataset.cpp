// Copyright 2026 The revsum Authors
// SPDX-License-Identifier: Apache-2.0

#include "revsum/dataset.hpp"

#include <map>

#include "revsum/corpus.hpp"
#include "revsum/error.hpp"
#include "revsum/io.hpp"
#include "revsum/text.hpp"

namespace revsum {
namespace cluster {

AssembleResult assemble_rows(const std::vector<int>& assignments,
                             const std::vector<std::string>& bodies,
                             const std::string& category, std::size_t group_size) {
  if (assignments.size() != bodies.size()) {
    throw ArgumentError("assignments and reviews differ in length");
  }
  if (group_size < 1) throw ArgumentError("group_size must be >= 1");
  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < assignments.size(); ++i) members[assignments[i]].push_back(i);

  const auto stem = corpus::category_file_stem(category);
  AssembleResult out;
  for (const auto& [cluster_id, idx] : members) {
    const std::size_t full = idx.size() / group_size;
    for (std::size_t chunk = 0; chunk < full; ++chunk) {
      ProductRow row;
      row.row_id = stem + "-" + std::to_string(cluster_id) + "-" + std::to_string(chunk);
      row.category = category;
      row.cluster_id = cluster_id;
      for (std::size_t i = 0; i < group_size; ++i) {
        row.reviews.push_back(bodies[idx[chunk * group_size + i]]);
      }
      out.rows.push_back(std::move(row));
    }
    out.discarded += idx.size() - full * group_size;
  }
  return out;
}

}  // namespace cluster

namespace dataset {

std::vector<std::string> header(std::size_t group_size) {
  std::vector<std::string> h = {"row_id", "cluster_id", "category"};
  for (std::size_t i = 1; i <= group_size; ++i) h.push_back("review_" + std::to_string(i));
  return h;
}

std::string format_rows(const std::vector<ProductRow>& rows, std::size_t group_size) {
  std::vector<std::vector<std::string>> table;
  table.reserve(rows.size());
  for (const auto& r : rows) {
    if (r.reviews.size() != group_size) {
      throw ValidationError("row " + r.row_id + " has " + std::to_string(r.reviews.size()) +
                            " reviews, expected " + std::to_string(group_size));
    }
    std::vector<std::string> fields = {r.row_id, std::to_string(r.cluster_id), r.category};
    fields.insert(fields.end(), r.reviews.begin(), r.reviews.end());
    table.push_back(std::move(fields));
  }
  return io::format_tsv(header(group_size), table);
}

void write_rows(const std::filesystem::path& path, const std::vector<ProductRow>& rows,
                std::size_t group_size) {
  io::write_file(path, format_rows(rows, group_size));
}

std::vector<ProductRow> read_rows(const std::filesystem::path& path, std::size_t* group_size) {
  const auto file = io::read_delimited(path, io::Format::Tsv);
  if (file.header.size() < 4) {
    throw SchemaError("review_1", path.string() + ": header has no review columns");
  }
  const std::size_t g = file.header.size() - 3;
  if (file.header != header(g)) {
    throw SchemaError("header", path.string() + ": unexpected header");
  }
  if (group_size) *group_size = g;
  std::vector<ProductRow> rows;
  rows.reserve(file.rows.size());
  for (const auto& raw : file.rows) {
    if (raw.error) {
      throw ValidationError(path.string() + ": row " + std::to_string(raw.row_number) + ": " +
                            *raw.error);
    }
    const auto cid = text::parse_int(raw.fields[1]);
    if (!cid) {
      throw ValidationError(path.string() + ": row " + std::to_string(raw.row_number) +
                            ": bad cluster_id");
    }
    ProductRow row;
    row.row_id = raw.fields[0];
    row.cluster_id = static_cast<int>(*cid);
    row.category = raw.fields[2];
    row.reviews.assign(raw.fields.begin() + 3, raw.fields.end());
    rows.push_back(std::move(row));
  }
  return rows;
}

std::size_t concat_datasets(const std::vector<std::filesystem::path>& parts,
                            const std::filesystem::path& out, std::size_t group_size) {
  std::vector<ProductRow> all;
  for (const auto& part : parts) {
    std::size_t g = 0;
    std::vector<ProductRow> rows;
    try {
      rows = read_rows(part, &g);
    } catch (const SchemaError& e) {
      throw SchemaError(part.string(), "schema mismatch in " + part.string() + ": " + e.what());
    }
    if (g != group_size) {
      throw SchemaError(part.string(), "schema mismatch in " + part.string() + ": group size " +
                                           std::to_string(g) + ", expected " +
                                           std::to_string(group_size));
    }
    all.insert(all.end(), std::make_move_iterator(rows.begin()),
               std::make_move_iterator(rows.end()));
  }
  write_rows(out, all, group_size);
  return all.size();
}

}  // namespace dataset
}  // namespace revsum
