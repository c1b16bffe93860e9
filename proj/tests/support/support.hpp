// Copyright 2026 The revsum Authors
// SPDX-License-Identifier: Apache-2.0

// Helpers shared by the unit and acceptance tests: scratch directories,
// random generators and brute-force oracles written independently of the
// library code they check.

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

#include "revsum/prompting.hpp"

namespace revsum::testing {

#ifndef REVSUM_TEST_DATA_DIR
#define REVSUM_TEST_DATA_DIR "tests/data"
#endif

inline std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(REVSUM_TEST_DATA_DIR) / name;
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("revsum-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// --- tokenization oracle: lowercase ASCII, split on anything that is not
// an ASCII letter or digit (bytes >= 0x80 stay inside words).
inline std::vector<std::string> oracle_tokens(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (const char ch : s) {
    const auto u = static_cast<unsigned char>(ch);
    const bool word = (u >= '0' && u <= '9') || (u >= 'a' && u <= 'z') || (u >= 'A' && u <= 'Z') || u >= 0x80;
    if (word) {
      cur += (u >= 'A' && u <= 'Z') ? static_cast<char>(u - 'A' + 'a') : ch;
    } else if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

struct OracleTriple {
  double p = 0.0;
  double r = 0.0;
  double f = 0.0;
};

inline OracleTriple oracle_f1(double p, double r) { return {p, r, p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0}; }

// Clipped unigram overlap by explicit counting over the vocabulary union.
inline OracleTriple oracle_rouge1(const std::string& cand, const std::string& ref) {
  const auto c = oracle_tokens(cand);
  const auto r = oracle_tokens(ref);
  if (c.empty() && r.empty()) return {1.0, 1.0, 1.0};
  if (c.empty() || r.empty()) return {0.0, 0.0, 0.0};
  std::vector<std::string> vocab = c;
  vocab.insert(vocab.end(), r.begin(), r.end());
  std::sort(vocab.begin(), vocab.end());
  vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
  long overlap = 0;
  for (const auto& t : vocab) {
    const auto nc = std::count(c.begin(), c.end(), t);
    const auto nr = std::count(r.begin(), r.end(), t);
    overlap += std::min(nc, nr);
  }
  return oracle_f1(static_cast<double>(overlap) / static_cast<double>(c.size()),
                   static_cast<double>(overlap) / static_cast<double>(r.size()));
}

// Greedy matching by the full cosine table: normalize every vector first,
// take dot products, then row and column maxima.
inline OracleTriple oracle_embed(const std::vector<std::string>& cand, const std::vector<std::string>& ref,
                                 const std::map<std::string, std::vector<double>>& table, std::size_t dim,
                                 const std::map<std::string, double>* idf = nullptr, double idf_default = 1.0) {
  if (cand.empty() && ref.empty()) return {1.0, 1.0, 1.0};
  if (cand.empty() || ref.empty()) return {0.0, 0.0, 0.0};
  const auto unit = [&](const std::string& t) {
    std::vector<double> v(dim, 0.0);
    if (const auto it = table.find(t); it != table.end()) v = it->second;
    double n = 0.0;
    for (const double x : v) n += x * x;
    n = std::sqrt(n);
    if (n > 0.0) {
      for (auto& x : v) x /= n;
    }
    return v;
  };
  std::vector<std::vector<double>> sim(cand.size(), std::vector<double>(ref.size(), 0.0));
  for (std::size_t i = 0; i < cand.size(); ++i) {
    const auto a = unit(cand[i]);
    for (std::size_t j = 0; j < ref.size(); ++j) {
      const auto b = unit(ref[j]);
      double d = 0.0;
      for (std::size_t k = 0; k < dim; ++k) d += a[k] * b[k];
      sim[i][j] = d;
    }
  }
  const auto w = [&](const std::string& t) {
    if (!idf) return 1.0;
    const auto it = idf->find(t);
    return it == idf->end() ? idf_default : it->second;
  };
  double pn = 0.0, pd = 0.0, rn = 0.0, rd = 0.0;
  for (std::size_t i = 0; i < cand.size(); ++i) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < ref.size(); ++j) best = std::max(best, sim[i][j]);
    best = std::clamp(best, 0.0, 1.0);
    pn += w(cand[i]) * best;
    pd += w(cand[i]);
  }
  for (std::size_t j = 0; j < ref.size(); ++j) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cand.size(); ++i) best = std::max(best, sim[i][j]);
    best = std::clamp(best, 0.0, 1.0);
    rn += w(ref[j]) * best;
    rd += w(ref[j]);
  }
  return oracle_f1(pd > 0 ? pn / pd : 0.0, rd > 0 ? rn / rd : 0.0);
}

// Minimum inertia over every assignment of n points to at most k
// non-empty groups (centroid = group mean).
inline double oracle_min_inertia(const std::vector<std::vector<double>>& pts, std::size_t k) {
  const std::size_t n = pts.size();
  const std::size_t dim = pts.empty() ? 0 : pts[0].size();
  std::vector<std::size_t> label(n, 0);
  double best = std::numeric_limits<double>::infinity();
  // enumerate k^n labelings; n <= 8, k <= 3 keeps this at 6561
  std::size_t total = 1;
  for (std::size_t i = 0; i < n; ++i) total *= k;
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t c = code;
    for (std::size_t i = 0; i < n; ++i) {
      label[i] = c % k;
      c /= k;
    }
    std::vector<std::vector<double>> sum(k, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> count(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++count[label[i]];
      for (std::size_t d = 0; d < dim; ++d) sum[label[i]][d] += pts[i][d];
    }
    if (std::count(count.begin(), count.end(), 0u) > 0) continue;
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t d = 0; d < dim; ++d) {
        const double m = sum[label[i]][d] / static_cast<double>(count[label[i]]);
        inertia += (pts[i][d] - m) * (pts[i][d] - m);
      }
    }
    best = std::min(best, inertia);
  }
  return best;
}

inline std::string random_word(std::mt19937_64& rng, std::size_t vocab) {
  static const char* words[] = {"the", "cat", "sat", "on", "mat", "good", "bad", "battery", "screen", "price",
                                "fast", "slow", "light", "heavy", "sound", "bass", "fit", "cheap", "solid", "ok"};
  return words[std::uniform_int_distribution<std::size_t>(0, std::min<std::size_t>(vocab, 20) - 1)(rng)];
}

// Short item text: no line breaks, no '|' (the annotation file item
// delimiter), leading/trailing spaces trimmed, never a bare section head.
inline std::string random_item(std::mt19937_64& rng) {
  static const std::string alphabet =
      "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789 .,;!?'\"()-*#:/\\\t";
  std::uniform_int_distribution<std::size_t> len(1, 24);
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  for (;;) {
    std::string s;
    const auto n = len(rng);
    for (std::size_t i = 0; i < n; ++i) s += alphabet[pick(rng)];
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    s = s.substr(b, s.find_last_not_of(" \t") - b + 1);
    return s;
  }
}

inline prompting::Annotation random_annotation(std::mt19937_64& rng) {
  prompting::Annotation a;
  std::uniform_int_distribution<int> count(0, 4);
  for (int i = count(rng); i > 0; --i) a.pros.push_back(random_item(rng));
  for (int i = count(rng); i > 0; --i) a.cons.push_back(random_item(rng));
  a.verdict = random_item(rng);
  return a;
}

}  // namespace revsum::testing
