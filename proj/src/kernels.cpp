// Copyright 2026 The revsum Authors
// SPDX-License-Identifier: Apache-2.0

#include "revsum/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace revsum::kernels {

void CentroidBlock::refresh_norms() {
  sq_norms.assign(k, 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    double s = 0.0;
    for (const double v : row(j)) s += v * v;
    sq_norms[j] = s;
  }
}

double squared_distance(const SparseMatrix& x, std::size_t r, double row_sq_norm,
                        const CentroidBlock& c, std::size_t j) {
  const auto idx = x.row_index(r);
  const auto val = x.row_value(r);
  const double* cj = c.values.data() + j * c.dim;
  double dot = 0.0;
  for (std::size_t i = 0; i < idx.size(); ++i) dot += val[i] * cj[idx[i]];
  return std::max(0.0, row_sq_norm + c.sq_norms[j] - 2.0 * dot);
}

namespace {

inline void assign_row(const SparseMatrix& x, std::size_t r, double row_sq_norm,
                       const CentroidBlock& c, int& label, double& dist2) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < c.k; ++j) {
    const double d = squared_distance(x, r, row_sq_norm, c, j);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(j);
    }
  }
  label = best;
  dist2 = best_d;
}

}  // namespace

void assign_nearest_serial(const SparseMatrix& x, std::span<const double> row_sq_norms,
                           const CentroidBlock& c, std::span<int> labels,
                           std::span<double> dist2) {
  for (std::size_t r = 0; r < x.rows(); ++r) {
    assign_row(x, r, row_sq_norms[r], c, labels[r], dist2[r]);
  }
}

void assign_nearest_parallel(const SparseMatrix& x, std::span<const double> row_sq_norms,
                             const CentroidBlock& c, std::span<int> labels,
                             std::span<double> dist2) {
  const auto n = static_cast<std::ptrdiff_t>(x.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < n; ++r) {
    const auto ur = static_cast<std::size_t>(r);
    assign_row(x, ur, row_sq_norms[ur], c, labels[ur], dist2[ur]);
  }
}

double cosine(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}

GreedyMaxima greedy_cosine_maxima(std::span<const std::vector<double>> a,
                                  std::span<const std::vector<double>> b) {
  GreedyMaxima out;
  out.row_max.assign(a.size(), -std::numeric_limits<double>::infinity());
  out.col_max.assign(b.size(), -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double s = cosine(a[i], b[j]);
      out.row_max[i] = std::max(out.row_max[i], s);
      out.col_max[j] = std::max(out.col_max[j], s);
    }
  }
  return out;
}

}  // namespace revsum::kernels
