// Copyright 2026 The revsum Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "revsum/dataset.hpp"
#include "revsum/http.hpp"

namespace revsum::moderation {

/// Reject when ln P(unsafe) >= this.
inline constexpr double kDefaultThreshold = -0.355;

/// Natural-log probabilities of labels 0 (safe), 1 (sensitive), 2 (unsafe).
struct LabelLogProbs {
  double lp0 = 0.0;
  double lp1 = 0.0;
  double lp2 = 0.0;

  /// Each entry <= 0 and the probabilities sum to 1 within `tol`.
  bool valid(double tol = 1e-6) const;
  /// Normalizes unnormalized log scores with log-sum-exp.
  static LabelLogProbs from_scores(double s0, double s1, double s2);
};

enum class Action { Reject, Keep };

struct ModerationResult {
  LabelLogProbs logprobs;
  Action action = Action::Keep;
  // 2 on Reject; otherwise the likelier of 0 and 1 (1 on a tie).
  int final_label = 0;
  double thresh = kDefaultThreshold;
};

/// Reject iff lp2 >= thresh. Throws ValidationError on invalid log-probs.
ModerationResult decide(const LabelLogProbs& logprobs, double thresh = kDefaultThreshold);

class SafetyClassifier {
 public:
  virtual ~SafetyClassifier() = default;
  /// Must be safe to call concurrently.
  virtual LabelLogProbs classify(std::string_view text) const = 0;
};

/// Weighted single-token term lists, one per label.
struct Lexicon {
  std::array<std::map<std::string, double>, 3> terms;

  /// TSV with header label, term, weight. Terms are lowercased and must
  /// tokenize to exactly one token; every label needs at least one term.
  static Lexicon parse(std::string_view tsv);
  static Lexicon load(const std::filesystem::path& path);
};

/// Multinomial naive-Bayes-style scoring with add-one smoothing over the
/// union vocabulary and a uniform prior. Text with no lexicon tokens gets
/// the uniform distribution ln(1/3).
LabelLogProbs classify_local(std::string_view text, const Lexicon& lexicon);

class LexiconClassifier final : public SafetyClassifier {
 public:
  explicit LexiconClassifier(Lexicon lexicon);
  LabelLogProbs classify(std::string_view text) const override;

 private:
  Lexicon lexicon_;
};

/// POSTs {"input": text} to `<prefix><path>` and expects
/// {"logprobs": [lp0, lp1, lp2]}.
class RemoteClassifier final : public SafetyClassifier {
 public:
  RemoteClassifier(http::ApiClient& client, std::string path = "/classify");
  LabelLogProbs classify(std::string_view text) const override;

 private:
  http::ApiClient& client_;
  std::string path_;
};

struct AuditEntry {
  std::string row_id;
  std::size_t review_index = 0;  // 1-based
  std::optional<LabelLogProbs> logprobs;
  std::string action;  // "Reject" or "Quarantine"
  std::string detail;
};

struct FilterResult {
  std::vector<ProductRow> kept;
  std::vector<ProductRow> dropped;
  std::vector<ProductRow> quarantined;
  std::vector<AuditEntry> audit;
};

/// Classifies every review; a row with any rejected review is dropped
/// whole, otherwise a row with any classifier failure is quarantined.
/// Classification runs on up to `max_in_flight` threads; output order
/// follows input order.
FilterResult filter_rows(const std::vector<ProductRow>& rows, const SafetyClassifier& classifier,
                         double thresh = kDefaultThreshold, std::size_t max_in_flight = 4);

/// row_id, review_index, lp0, lp1, lp2, action
void write_audit(const std::filesystem::path& path, const std::vector<AuditEntry>& audit);

}  // namespace revsum::moderation
