// Copyright 2026 The revsum Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "revsum/sparse.hpp"

namespace revsum::cluster {

struct TfidfMatrix {
  /// Sorted, duplicate-free vocabulary; column j of `values` is vocab[j].
  std::vector<std::string> vocab;
  std::vector<double> idf;
  SparseMatrix values;

  std::size_t rows() const { return values.rows(); }
};

/// TF-IDF with smoothed idf, ln((1 + N) / (1 + df)) + 1, raw term counts as
/// tf, and L2-normalized rows. Documents without tokens get all-zero rows.
/// Throws VectorizationError when no document has any token.
TfidfMatrix vectorize_tfidf(const std::vector<std::string>& texts);

}  // namespace revsum::cluster
