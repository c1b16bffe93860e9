// Copyright 2026 The revsum Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "revsum/kernels.hpp"
#include "revsum/sparse.hpp"

namespace revsum::cluster {

inline constexpr std::size_t kDefaultK = 90;

struct KMeansOptions {
  std::size_t k = kDefaultK;
  std::uint64_t seed = 0;
  int max_iter = 300;
  // Stop once no centroid moves by tol or more (Euclidean).
  double tol = 1e-4;
  // Independent k-means++ restarts; the lowest-inertia run wins.
  int n_init = 1;
  kernels::Exec exec = kernels::Exec::Parallel;
};

struct ClusterModel {
  std::size_t k = 0;
  kernels::CentroidBlock centroids;
  std::vector<int> assignments;
  double inertia = 0.0;
  // Seed of the winning restart.
  std::uint64_t seed = 0;
  int iterations = 0;
  bool converged = false;
  // Inertia after every centroid update, then the final assignment pass.
  std::vector<double> inertia_history;
};

/// Lloyd's algorithm with k-means++ seeding, followed by single-point
/// transfer passes until no move lowers the inertia.
///
/// Empty clusters are re-seeded with the point farthest from its current
/// centroid. After the last update every point is reassigned once more,
/// so `assignments` always names the nearest centroid (lowest index on
/// ties). Throws ArgumentError unless 1 <= k <= rows.
ClusterModel kmeans_fit(const SparseMatrix& x, const KMeansOptions& opts);

/// Seed for restart `attempt` derived from a base seed (splitmix64).
std::uint64_t restart_seed(std::uint64_t base, int attempt);

}  // namespace revsum::cluster
