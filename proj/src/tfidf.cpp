// Copyright 2026 The revsum Authors
// SPDX-License-Identifier: Apache-2.0

#include "revsum/tfidf.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "revsum/error.hpp"
#include "revsum/text.hpp"

namespace revsum::cluster {

TfidfMatrix vectorize_tfidf(const std::vector<std::string>& texts) {
  const std::size_t n_docs = texts.size();
  std::vector<std::map<std::string, std::size_t>> counts(n_docs);

#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t d = 0; d < static_cast<std::ptrdiff_t>(n_docs); ++d) {
    for (auto& tok : text::tokenize(texts[static_cast<std::size_t>(d)])) {
      ++counts[static_cast<std::size_t>(d)][std::move(tok)];
    }
  }

  std::map<std::string, std::size_t> df;
  for (const auto& doc : counts) {
    for (const auto& [term, _] : doc) ++df[term];
  }
  if (df.empty()) throw VectorizationError("no tokens in any document");

  TfidfMatrix m;
  m.vocab.reserve(df.size());
  m.idf.reserve(df.size());
  std::unordered_map<std::string, std::uint32_t> column;
  column.reserve(df.size());
  const double n_plus_one = static_cast<double>(n_docs) + 1.0;
  for (const auto& [term, freq] : df) {
    column.emplace(term, static_cast<std::uint32_t>(m.vocab.size()));
    m.vocab.push_back(term);
    m.idf.push_back(std::log(n_plus_one / (static_cast<double>(freq) + 1.0)) + 1.0);
  }

  m.values = SparseMatrix(m.vocab.size());
  std::vector<std::uint32_t> idx;
  std::vector<double> val;
  for (const auto& doc : counts) {
    idx.clear();
    val.clear();
    // std::map iterates terms in vocab order, so indices come out sorted
    for (const auto& [term, tf] : doc) {
      const auto j = column.at(term);
      idx.push_back(j);
      val.push_back(static_cast<double>(tf) * m.idf[j]);
    }
    double norm2 = 0.0;
    for (const double v : val) norm2 += v * v;
    if (norm2 > 0.0) {
      const double inv = 1.0 / std::sqrt(norm2);
      for (auto& v : val) v *= inv;
    }
    m.values.push_row(idx, val);
  }
  return m;
}

}  // namespace revsum::cluster
