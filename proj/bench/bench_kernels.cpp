// Copyright 2026 The revsum Authors
// SPDX-License-Identifier: Apache-2.0

// Serial vs OpenMP kernels: nearest-centroid assignment over a TF-IDF-like
// sparse matrix, and batch pair scoring. Run with OMP_NUM_THREADS set to
// compare scaling.

#include <benchmark/benchmark.h>

#include <map>
#include <random>
#include <string>
#include <vector>

#include "revsum/evaluation.hpp"
#include "revsum/kernels.hpp"
#include "revsum/sparse.hpp"

namespace {

using namespace revsum;

struct AssignFixture {
  SparseMatrix x;
  std::vector<double> norms;
  kernels::CentroidBlock c;

  AssignFixture(std::size_t rows, std::size_t vocab, std::size_t k) : x(vocab) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t r = 0; r < rows; ++r) {
      std::map<std::uint32_t, double> row;
      for (int t = 0; t < 40; ++t) row[static_cast<std::uint32_t>(rng() % vocab)] = u(rng);
      std::vector<std::uint32_t> idx;
      std::vector<double> val;
      for (const auto& [i, v] : row) {
        idx.push_back(i);
        val.push_back(v);
      }
      x.push_row(idx, val);
      norms.push_back(x.row_squared_norm(r));
    }
    c = kernels::CentroidBlock{k, vocab, std::vector<double>(k * vocab), {}};
    for (auto& v : c.values) v = u(rng) * 0.05;
    c.refresh_norms();
  }
};

void run_assign(benchmark::State& state, kernels::Exec exec) {
  const AssignFixture f(static_cast<std::size_t>(state.range(0)), 5000, 90);
  std::vector<int> labels(f.x.rows());
  std::vector<double> dist(f.x.rows());
  for (auto _ : state) {
    kernels::assign_nearest(exec, f.x, f.norms, f.c, labels, dist);
    benchmark::DoNotOptimize(labels.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_AssignSerial(benchmark::State& state) { run_assign(state, kernels::Exec::Serial); }
void BM_AssignParallel(benchmark::State& state) { run_assign(state, kernels::Exec::Parallel); }
BENCHMARK(BM_AssignSerial)->Arg(1000)->Arg(8000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AssignParallel)->Arg(1000)->Arg(8000)->Unit(benchmark::kMillisecond);

struct ScoreFixture {
  std::vector<eval::Pair> pairs;
  eval::StaticEmbedder embedder;

  explicit ScoreFixture(std::size_t n) {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g(0.0, 1.0);
    std::map<std::string, std::vector<double>> table;
    for (int w = 0; w < 2000; ++w) {
      std::vector<double> v(64);
      for (auto& x : v) x = g(rng);
      table["w" + std::to_string(w)] = v;
    }
    embedder = eval::StaticEmbedder(table);
    for (std::size_t i = 0; i < n; ++i) {
      std::string a, b;
      for (int t = 0; t < 40; ++t) a += "w" + std::to_string(rng() % 2000) + " ";
      for (int t = 0; t < 40; ++t) b += "w" + std::to_string(rng() % 2000) + " ";
      pairs.push_back({a, b});
    }
  }
};

void run_score(benchmark::State& state, kernels::Exec exec) {
  const ScoreFixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    auto s = eval::score_pairs(f.pairs, f.embedder, nullptr, exec);
    benchmark::DoNotOptimize(s.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ScoreSerial(benchmark::State& state) { run_score(state, kernels::Exec::Serial); }
void BM_ScoreParallel(benchmark::State& state) { run_score(state, kernels::Exec::Parallel); }
BENCHMARK(BM_ScoreSerial)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ScoreParallel)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
