// Copyright 2026 The revsum Authors
// SPDX-License-Identifier: Apache-2.0

// Data-parallel inner loops. Each kernel has a serial reference and an
// OpenMP variant; the two must agree bit for bit, since every output
// element is computed independently of the others.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "revsum/sparse.hpp"

namespace revsum::kernels {

enum class Exec { Serial, Parallel };

/// Dense row-major k x dim centroid block plus cached squared norms.
struct CentroidBlock {
  std::size_t k = 0;
  std::size_t dim = 0;
  std::vector<double> values;
  std::vector<double> sq_norms;

  std::span<const double> row(std::size_t j) const { return {values.data() + j * dim, dim}; }
  std::span<double> row(std::size_t j) { return {values.data() + j * dim, dim}; }
  void refresh_norms();
};

/// Squared Euclidean distance from sparse row `r` to centroid `j`, clamped at 0.
double squared_distance(const SparseMatrix& x, std::size_t r, double row_sq_norm,
                        const CentroidBlock& c, std::size_t j);

/// For each row: index of the nearest centroid (lowest index on ties) and
/// the squared distance to it.
void assign_nearest_serial(const SparseMatrix& x, std::span<const double> row_sq_norms,
                           const CentroidBlock& c, std::span<int> labels,
                           std::span<double> dist2);
void assign_nearest_parallel(const SparseMatrix& x, std::span<const double> row_sq_norms,
                             const CentroidBlock& c, std::span<int> labels,
                             std::span<double> dist2);

inline void assign_nearest(Exec exec, const SparseMatrix& x,
                           std::span<const double> row_sq_norms, const CentroidBlock& c,
                           std::span<int> labels, std::span<double> dist2) {
  if (exec == Exec::Parallel) {
    assign_nearest_parallel(x, row_sq_norms, c, labels, dist2);
  } else {
    assign_nearest_serial(x, row_sq_norms, c, labels, dist2);
  }
}

/// Greedy matching: for an a x b similarity table, the per-row maxima
/// (length a) and per-column maxima (length b). Empty sides give empty output.
struct GreedyMaxima {
  std::vector<double> row_max;
  std::vector<double> col_max;
};

/// Cosine table between two sets of vectors of equal dimension, followed by
/// row/column maxima. Zero vectors have cosine 0 with everything.
GreedyMaxima greedy_cosine_maxima(std::span<const std::vector<double>> a,
                                  std::span<const std::vector<double>> b);

double cosine(std::span<const double> a, std::span<const double> b);

}  // namespace revsum::kernels
