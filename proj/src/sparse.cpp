// Copyright 2026 The revsum Authors
// SPDX-License-Identifier: Apache-2.0

#include "revsum/sparse.hpp"

#include "revsum/error.hpp"

namespace revsum {

SparseMatrix SparseMatrix::from_dense(const std::vector<std::vector<double>>& rows) {
  SparseMatrix m(rows.empty() ? 0 : rows.front().size());
  std::vector<std::uint32_t> idx;
  std::vector<double> val;
  for (const auto& row : rows) {
    if (row.size() != m.cols_) throw ArgumentError("ragged dense matrix");
    idx.clear();
    val.clear();
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (row[j] != 0.0) {
        idx.push_back(static_cast<std::uint32_t>(j));
        val.push_back(row[j]);
      }
    }
    m.push_row(idx, val);
  }
  return m;
}

void SparseMatrix::push_row(std::span<const std::uint32_t> index, std::span<const double> value) {
  if (index.size() != value.size()) throw ArgumentError("index/value length mismatch");
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= cols_ || (i > 0 && index[i] <= index[i - 1])) {
      throw ArgumentError("sparse row indices must be increasing and in range");
    }
  }
  index_.insert(index_.end(), index.begin(), index.end());
  value_.insert(value_.end(), value.begin(), value.end());
  row_ptr_.push_back(index_.size());
}

double SparseMatrix::row_squared_norm(std::size_t r) const {
  double s = 0.0;
  for (const double v : row_value(r)) s += v * v;
  return s;
}

std::vector<double> SparseMatrix::dense_row(std::size_t r) const {
  std::vector<double> out(cols_, 0.0);
  const auto idx = row_index(r);
  const auto val = row_value(r);
  for (std::size_t i = 0; i < idx.size(); ++i) out[idx[i]] = val[i];
  return out;
}

}  // namespace revsum
