// Copyright 2026 The revsum Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "revsum/dataset.hpp"

namespace revsum::prompting {

/// Joins reviews inside a prompt.
inline constexpr std::string_view kSeparator = "\n\n*******\n\n";
/// Terminates every prompt.
inline constexpr std::string_view kPromptEnd = "\n\n###\n\n";
/// Terminates every completion; also sent as the stop sequence.
inline constexpr std::string_view kStop = "\nEND";

struct Annotation {
  std::vector<std::string> pros;
  std::vector<std::string> cons;
  std::string verdict;

  bool operator==(const Annotation&) const = default;
};

/// Throws ValidationError unless every entry (verdict included) is
/// non-empty, has no surrounding whitespace and no line break. The last
/// rule also keeps the stop sequence out.
void validate(const Annotation& ann);

struct TrainingExample {
  std::string prompt;
  std::string completion;

  bool operator==(const TrainingExample&) const = default;
};

/// prefix + review_1 + SEP + ... + SEP + review_n + PROMPT_END.
///
/// Throws ArgumentError when `expected_count` is non-zero and differs from
/// the number of reviews, and ContentCollisionError when any review (or the
/// prefix) would make the separators ambiguous.
std::string build_prompt(std::span<const std::string> reviews,
                         std::size_t expected_count = kDefaultGroupSize,
                         std::string_view prefix = {});
std::string build_prompt(const ProductRow& row, std::size_t expected_count = kDefaultGroupSize,
                         std::string_view prefix = {});

/// " Pros:\n- a\n...Cons:\n- b\n...Verdict: v" + STOP.
std::string build_completion(const Annotation& ann);

/// Tolerant inverse of build_completion. Section heads are matched
/// case-insensitively at line start; "-" and "*" bullets are stripped;
/// a trailing stop sequence is ignored. Throws ParseError (carrying the
/// raw text) when no non-empty Verdict section is present.
Annotation parse_completion(std::string_view text);

/// Text used for scoring: items and verdict, one per line, no headings.
std::string content_text(const Annotation& ann);

// --- JSONL -----------------------------------------------------------------

/// {"prompt": "...", "completion": "..."}
std::string to_jsonl_line(const TrainingExample& ex);
std::string to_jsonl(std::span<const TrainingExample> examples);
void write_jsonl(const std::filesystem::path& path, std::span<const TrainingExample> examples);

std::vector<TrainingExample> from_jsonl(std::string_view content);
std::vector<TrainingExample> read_jsonl(const std::filesystem::path& path);

struct Issue {
  std::size_t line = 0;  // 1-based
  std::string kind;
  std::string message;
};

struct ValidationReport {
  std::size_t lines = 0;
  std::size_t valid_examples = 0;
  std::vector<Issue> errors;
  std::vector<Issue> warnings;

  bool ok() const { return errors.empty(); }
  std::string summary() const;
};

ValidationReport validate_jsonl_content(std::string_view content);
ValidationReport validate_jsonl(const std::filesystem::path& path);

// --- Annotation files ------------------------------------------------------

inline constexpr std::string_view kItemDelimiter = "||";

struct AnnotatedRow {
  std::string row_id;
  Annotation annotation;
};

/// TSV with columns row_id, pros, cons, verdict; list items joined by "||".
std::vector<AnnotatedRow> read_annotations(const std::filesystem::path& path);
void write_annotations(const std::filesystem::path& path, const std::vector<AnnotatedRow>& rows);

}  // namespace revsum::prompting
