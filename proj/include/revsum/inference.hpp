// Copyright 2026 The revsum Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "revsum/dataset.hpp"
#include "revsum/http.hpp"
#include "revsum/prompting.hpp"

namespace revsum::inference {

struct CompletionRequest {
  std::string model;
  std::string prompt;
  int max_tokens = 300;
  double temperature = 0.2;
  std::vector<std::string> stop = {std::string(prompting::kStop)};

  /// Throws ValidationError unless the prompt ends with the prompt-end
  /// marker and `stop` includes the completion stop sequence.
  void validate() const;
};

/// Cuts `text` at the earliest occurrence of any stop sequence.
std::string truncate_at_stop(std::string_view text, const std::vector<std::string>& stops);

struct SummaryResult {
  std::optional<prompting::Annotation> annotation;  // empty on failure
  std::string raw_text;
  std::string model;
  std::chrono::milliseconds latency{0};
  std::string error;  // parse or request failure description

  bool ok() const { return annotation.has_value(); }
};

struct SummarizeOptions {
  // Required review count; 0 accepts any non-empty list.
  std::size_t group_size = kDefaultGroupSize;
  int max_tokens = 300;
  double temperature = 0.2;
  std::string prompt_prefix;
};

class InferenceClient {
 public:
  explicit InferenceClient(http::ApiClient& client) : client_(client) {}

  /// POST /completions; returns the first choice cut at the stop sequence.
  std::string complete(const CompletionRequest& req);

  /// build_prompt -> complete -> parse_completion. A parse failure comes
  /// back as a result with `error` set and no annotation. Request errors
  /// and a wrong review count throw.
  SummaryResult summarize_reviews(const std::string& model,
                                  const std::vector<std::string>& reviews,
                                  const SummarizeOptions& opts = {});

  /// One result per row, in input order, with up to the client's in-flight
  /// limit running at once. Request failures become failure results.
  std::vector<SummaryResult> summarize_batch(const std::string& model,
                                             const std::vector<ProductRow>& rows,
                                             const SummarizeOptions& opts = {});

 private:
  http::ApiClient& client_;
};

/// JSON line per result:
/// {"row_id", "model", "ok", "pros", "cons", "verdict", "raw_text", "error"}.
void write_results(const std::filesystem::path& path, const std::vector<ProductRow>& rows,
                   const std::vector<SummaryResult>& results);

struct StoredResult {
  std::string row_id;
  SummaryResult result;
};
std::vector<StoredResult> read_results(const std::filesystem::path& path);

}  // namespace revsum::inference
