// Copyright 2026 The revsum Authors
// SPDX-License-Identifier: Apache-2.0

#include "revsum/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "revsum/error.hpp"

namespace revsum::cluster {

std::uint64_t restart_seed(std::uint64_t base, int attempt) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(attempt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

// Uniform double in [0, 1) from the top 53 bits; std distributions are
// implementation-defined and would make seeds non-portable.
double unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

void set_centroid_to_row(kernels::CentroidBlock& c, std::size_t j, const SparseMatrix& x,
                         std::size_t r) {
  auto dst = c.row(j);
  std::fill(dst.begin(), dst.end(), 0.0);
  const auto idx = x.row_index(r);
  const auto val = x.row_value(r);
  for (std::size_t i = 0; i < idx.size(); ++i) dst[idx[i]] = val[i];
  double s = 0.0;
  for (const double v : dst) s += v * v;
  c.sq_norms[j] = s;
}

kernels::CentroidBlock kmeanspp_init(const SparseMatrix& x, std::span<const double> sq_norms,
                                     std::size_t k, std::mt19937_64& rng) {
  const std::size_t n = x.rows();
  kernels::CentroidBlock c{k, x.cols(), std::vector<double>(k * x.cols(), 0.0),
                           std::vector<double>(k, 0.0)};
  std::vector<bool> chosen(n, false);
  auto first = static_cast<std::size_t>(unit(rng) * static_cast<double>(n));
  first = std::min(first, n - 1);
  set_centroid_to_row(c, 0, x, first);
  chosen[first] = true;

  std::vector<double> d2(n);
  for (std::size_t r = 0; r < n; ++r) d2[r] = kernels::squared_distance(x, r, sq_norms[r], c, 0);

  for (std::size_t j = 1; j < k; ++j) {
    double total = 0.0;
    for (std::size_t r = 0; r < n; ++r) total += chosen[r] ? 0.0 : d2[r];
    std::size_t pick = n;
    if (total > 0.0) {
      const double target = unit(rng) * total;
      double acc = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        if (chosen[r]) continue;
        acc += d2[r];
        if (d2[r] > 0.0 && acc > target) {
          pick = r;
          break;
        }
      }
      if (pick == n) {
        // rounding pushed target past the last positive weight
        for (std::size_t r = n; r-- > 0;) {
          if (!chosen[r] && d2[r] > 0.0) {
            pick = r;
            break;
          }
        }
      }
    } else {
      // every remaining point coincides with a chosen centre
      for (std::size_t r = 0; r < n; ++r) {
        if (!chosen[r]) {
          pick = r;
          break;
        }
      }
    }
    set_centroid_to_row(c, j, x, pick);
    chosen[pick] = true;
    for (std::size_t r = 0; r < n; ++r) {
      d2[r] = std::min(d2[r], kernels::squared_distance(x, r, sq_norms[r], c, j));
    }
  }
  return c;
}

// Moves the farthest points into empty clusters. Returns true if any moved.
bool reseed_empty(const SparseMatrix& x, kernels::CentroidBlock& c, std::vector<int>& labels,
                  std::vector<double>& dist2) {
  std::vector<std::size_t> sizes(c.k, 0);
  for (const int l : labels) ++sizes[static_cast<std::size_t>(l)];
  bool moved = false;
  std::vector<bool> taken(labels.size(), false);
  for (std::size_t j = 0; j < c.k; ++j) {
    if (sizes[j] != 0) continue;
    std::size_t far = labels.size();
    double far_d = -1.0;
    for (std::size_t r = 0; r < labels.size(); ++r) {
      if (taken[r] || sizes[static_cast<std::size_t>(labels[r])] <= 1) continue;
      if (dist2[r] > far_d) {
        far_d = dist2[r];
        far = r;
      }
    }
    if (far == labels.size()) break;
    --sizes[static_cast<std::size_t>(labels[far])];
    ++sizes[j];
    labels[far] = static_cast<int>(j);
    dist2[far] = 0.0;
    taken[far] = true;
    set_centroid_to_row(c, j, x, far);
    moved = true;
  }
  return moved;
}

// Recomputes centroids as cluster means; returns the largest centroid shift.
double update_centroids(const SparseMatrix& x, kernels::CentroidBlock& c,
                        const std::vector<int>& labels) {
  std::vector<double> sums(c.k * c.dim, 0.0);
  std::vector<std::size_t> sizes(c.k, 0);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto j = static_cast<std::size_t>(labels[r]);
    ++sizes[j];
    const auto idx = x.row_index(r);
    const auto val = x.row_value(r);
    double* dst = sums.data() + j * c.dim;
    for (std::size_t i = 0; i < idx.size(); ++i) dst[idx[i]] += val[i];
  }
  double max_shift = 0.0;
  for (std::size_t j = 0; j < c.k; ++j) {
    if (sizes[j] == 0) continue;
    const double inv = 1.0 / static_cast<double>(sizes[j]);
    auto cur = c.row(j);
    double shift2 = 0.0;
    for (std::size_t d = 0; d < c.dim; ++d) {
      const double next = sums[j * c.dim + d] * inv;
      const double delta = next - cur[d];
      shift2 += delta * delta;
      cur[d] = next;
    }
    max_shift = std::max(max_shift, std::sqrt(shift2));
  }
  c.refresh_norms();
  return max_shift;
}

double total(const std::vector<double>& v) {
  double s = 0.0;
  for (const double d : v) s += d;
  return s;
}

double inertia_of(const SparseMatrix& x, std::span<const double> sq_norms,
                  const kernels::CentroidBlock& c, const std::vector<int>& labels) {
  double s = 0.0;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    s += kernels::squared_distance(x, r, sq_norms[r], c, static_cast<std::size_t>(labels[r]));
  }
  return s;
}

// Single-point transfers (Hartigan's rule) from a Lloyd fixed point. A point
// leaves cluster a for j when n_j/(n_j+1) d_j < n_a/(n_a-1) d_a, which
// strictly lowers the inertia. Returns the number of transfers made.
std::size_t transfer_refine(const SparseMatrix& x, std::span<const double> sq_norms,
                            kernels::CentroidBlock& c, std::vector<int>& labels, int max_passes) {
  std::vector<std::size_t> sizes(c.k, 0);
  for (const int l : labels) ++sizes[static_cast<std::size_t>(l)];
  std::size_t moves = 0;
  auto shift_point = [&](std::size_t r, std::size_t j, double sign) {
    const auto idx = x.row_index(r);
    const auto val = x.row_value(r);
    auto cj = c.row(j);
    const double old_n = static_cast<double>(sizes[j]);
    const double new_n = old_n + sign;
    for (double& v : cj) v *= old_n / new_n;
    for (std::size_t i = 0; i < idx.size(); ++i) cj[idx[i]] += sign * val[i] / new_n;
    double s = 0.0;
    for (const double v : cj) s += v * v;
    c.sq_norms[j] = s;
  };
  for (int pass = 0; pass < max_passes; ++pass) {
    bool moved = false;
    for (std::size_t r = 0; r < x.rows(); ++r) {
      const auto a = static_cast<std::size_t>(labels[r]);
      if (sizes[a] <= 1) continue;
      const double na = static_cast<double>(sizes[a]);
      const double cost_out = na / (na - 1.0) * kernels::squared_distance(x, r, sq_norms[r], c, a);
      std::size_t best = a;
      double best_cost = cost_out;
      for (std::size_t j = 0; j < c.k; ++j) {
        if (j == a) continue;
        const double nj = static_cast<double>(sizes[j]);
        const double cost_in = nj / (nj + 1.0) * kernels::squared_distance(x, r, sq_norms[r], c, j);
        if (cost_in < best_cost) {
          best_cost = cost_in;
          best = j;
        }
      }
      if (best == a || cost_out - best_cost <= 1e-12 * (1.0 + cost_out)) continue;
      shift_point(r, a, -1.0);
      shift_point(r, best, 1.0);
      --sizes[a];
      ++sizes[best];
      labels[r] = static_cast<int>(best);
      moved = true;
      ++moves;
    }
    if (!moved) break;
  }
  return moves;
}

ClusterModel fit_once(const SparseMatrix& x, std::span<const double> sq_norms,
                      const KMeansOptions& opts, std::uint64_t seed) {
  const std::size_t n = x.rows();
  std::mt19937_64 rng(seed);
  ClusterModel m;
  m.k = opts.k;
  m.seed = seed;
  m.centroids = kmeanspp_init(x, sq_norms, opts.k, rng);

  std::vector<int> labels(n, -1);
  std::vector<int> next(n, 0);
  std::vector<double> dist2(n, 0.0);
  for (int it = 0; it < opts.max_iter; ++it) {
    kernels::assign_nearest(opts.exec, x, sq_norms, m.centroids, next, dist2);
    reseed_empty(x, m.centroids, next, dist2);
    ++m.iterations;
    if (next == labels) {
      m.converged = true;
      break;
    }
    labels = next;
    const double shift = update_centroids(x, m.centroids, labels);
    m.inertia_history.push_back(inertia_of(x, sq_norms, m.centroids, labels));
    if (shift < opts.tol) {
      m.converged = true;
      break;
    }
  }
  if (!labels.empty() && labels.front() >= 0 &&
      transfer_refine(x, sq_norms, m.centroids, labels, opts.max_iter) > 0) {
    update_centroids(x, m.centroids, labels);
    m.inertia_history.push_back(inertia_of(x, sq_norms, m.centroids, labels));
  }
  kernels::assign_nearest(opts.exec, x, sq_norms, m.centroids, next, dist2);
  m.assignments = std::move(next);
  m.inertia = total(dist2);
  m.inertia_history.push_back(m.inertia);
  return m;
}

}  // namespace

ClusterModel kmeans_fit(const SparseMatrix& x, const KMeansOptions& opts) {
  if (opts.k < 1) throw ArgumentError("k must be >= 1");
  if (opts.k > x.rows()) {
    throw ArgumentError("k = " + std::to_string(opts.k) + " exceeds document count " +
                        std::to_string(x.rows()));
  }
  if (opts.max_iter < 1) throw ArgumentError("max_iter must be >= 1");
  if (opts.n_init < 1) throw ArgumentError("n_init must be >= 1");

  std::vector<double> sq_norms(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) sq_norms[r] = x.row_squared_norm(r);

  ClusterModel best;
  for (int attempt = 0; attempt < opts.n_init; ++attempt) {
    const auto seed = attempt == 0 ? opts.seed : restart_seed(opts.seed, attempt);
    auto m = fit_once(x, sq_norms, opts, seed);
    if (attempt == 0 || m.inertia < best.inertia) best = std::move(m);
  }
  return best;
}

}  // namespace revsum::cluster
