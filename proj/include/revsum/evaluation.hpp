// Copyright 2026 The revsum Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "revsum/http.hpp"
#include "revsum/kernels.hpp"

namespace revsum::eval {

struct ScoreTriple {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  /// f1 = 2PR / (P + R), or 0 when P + R = 0.
  static ScoreTriple from_pr(double precision, double recall);
  bool operator==(const ScoreTriple&) const = default;
};

/// Lowercase, split on non-alphanumeric runs, drop empties.
std::vector<std::string> tokenize(std::string_view text);

/// Clipped unigram overlap. Both sides empty scores 1; one side empty, 0.
ScoreTriple rouge1(std::string_view candidate, std::string_view reference);
ScoreTriple rouge1_tokens(const std::vector<std::string>& candidate,
                          const std::vector<std::string>& reference);

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::size_t dim() const = 0;
  /// One vector of length dim() per token.
  virtual std::vector<std::vector<double>> embed(const std::vector<std::string>& tokens) const = 0;
};

/// Word vectors from a text file: "token v1 v2 ... vd" per line. A leading
/// "<count> <dim>" header line is skipped. Unknown tokens embed to zeros.
class StaticEmbedder final : public Embedder {
 public:
  StaticEmbedder() = default;
  explicit StaticEmbedder(std::map<std::string, std::vector<double>> table);
  static StaticEmbedder load(const std::filesystem::path& path);
  static StaticEmbedder parse(std::string_view content);

  std::size_t dim() const override { return dim_; }
  std::vector<std::vector<double>> embed(const std::vector<std::string>& tokens) const override;
  std::size_t size() const { return table_.size(); }

 private:
  std::size_t dim_ = 0;
  std::unordered_map<std::string, std::vector<double>> table_;
};

/// POST /embeddings {"input": [tokens], "model"}; caches vectors per token.
class RemoteEmbedder final : public Embedder {
 public:
  RemoteEmbedder(http::ApiClient& client, std::string model = "text-embedding",
                 std::string path = "/embeddings");
  std::size_t dim() const override;
  std::vector<std::vector<double>> embed(const std::vector<std::string>& tokens) const override;

 private:
  http::ApiClient& client_;
  std::string model_;
  std::string path_;
  mutable std::mutex mu_;
  mutable std::size_t dim_ = 0;
  mutable std::unordered_map<std::string, std::vector<double>> cache_;
};

/// Per-token importance weights for the embedding score.
struct IdfWeights {
  std::unordered_map<std::string, double> weights;
  double default_weight = 1.0;

  double weight(const std::string& token) const;
  /// idf(t) = ln((M + 1) / (df(t) + 1)) over M reference texts; unseen
  /// tokens get ln(M + 1).
  static IdfWeights from_references(const std::vector<std::string>& references);
};

struct EmbedScore {
  ScoreTriple score;
  // Set when either side has no tokens.
  bool empty = false;
};

/// Greedy matching: recall averages, over reference tokens, the best
/// cosine against any candidate token; precision is the mirror image.
/// Best-match similarities are clamped to [0, 1]. With `idf`, averages are
/// weighted. An empty side gives 0, or 1 when both are empty.
EmbedScore embed_score(std::string_view candidate, std::string_view reference,
                       const Embedder& embedder, const IdfWeights* idf = nullptr);

struct Pair {
  std::string candidate;
  std::string reference;
};

struct PairScore {
  ScoreTriple rouge;
  EmbedScore embed;
};

/// Scores many pairs. Token vectors are fetched once up front, then the
/// pairs are scored with the chosen execution policy; results are in input
/// order and identical under either policy.
std::vector<PairScore> score_pairs(const std::vector<Pair>& pairs, const Embedder& embedder,
                                   const IdfWeights* idf = nullptr,
                                   kernels::Exec exec = kernels::Exec::Parallel);

/// Component-wise mean (f1 is the mean of per-pair f1).
ScoreTriple mean(const std::vector<ScoreTriple>& scores);

struct SweepRow {
  std::size_t train_size = 0;
  std::string model;
  ScoreTriple rouge1;
  ScoreTriple embed;
  std::size_t n_eval = 0;
  std::size_t n_failed = 0;
};

struct SweepReport {
  std::vector<SweepRow> rows;
  std::vector<std::string> warnings;

  /// Delimited table of every row.
  std::string table() const;
  /// Whitespace-separated "train_size rouge1_f1 embed_f1" lines for plotting.
  std::string plot_data() const;
  void write(const std::filesystem::path& table_path,
             const std::filesystem::path& plot_path) const;
};

inline const std::vector<std::size_t> kDefaultSweepSizes = {50, 100, 200, 350, 485};
inline constexpr std::size_t kMandatorySweepSize = 485;

}  // namespace revsum::eval
