// Copyright 2026 The revsum Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace revsum {

/// Compressed sparse rows with column indices sorted within each row.
class SparseMatrix {
 public:
  SparseMatrix() : row_ptr_{0} {}
  explicit SparseMatrix(std::size_t cols) : cols_(cols), row_ptr_{0} {}

  static SparseMatrix from_dense(const std::vector<std::vector<double>>& rows);

  /// Appends a row. `index` must be strictly increasing and < cols().
  void push_row(std::span<const std::uint32_t> index, std::span<const double> value);

  std::size_t rows() const { return row_ptr_.size() - 1; }
  std::size_t cols() const { return cols_; }
  std::size_t nnz() const { return index_.size(); }

  std::span<const std::uint32_t> row_index(std::size_t r) const {
    return {index_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
  }
  std::span<const double> row_value(std::size_t r) const {
    return {value_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
  }

  double row_squared_norm(std::size_t r) const;
  std::vector<double> dense_row(std::size_t r) const;

  bool operator==(const SparseMatrix&) const = default;

 private:
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_ptr_;
  std::vector<std::uint32_t> index_;
  std::vector<double> value_;
};

}  // namespace revsum
