// Copyright 2026 The revsum Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "revsum/corpus.hpp"
#include "revsum/finetune.hpp"
#include "revsum/http.hpp"
#include "revsum/io.hpp"

namespace revsum::pipeline {

// Every field has a default; a key=value config file overrides the
// defaults and command-line flags override the file.
struct PipelineConfig {
  std::filesystem::path work_dir = "work";

  // ingest
  std::filesystem::path input;
  io::Format format = io::Format::Tsv;
  corpus::ColumnMap columns;
  std::size_t min_len = 120;

  // cluster
  std::size_t k = 90;
  std::size_t group_size = 15;
  std::uint64_t seed = 0;
  int max_iter = 300;
  double tol = 1e-4;
  int n_init = 1;

  // moderate
  double thresh = -0.355;
  std::string classifier = "local";  // local | remote
  std::filesystem::path lexicon;
  std::string classify_path = "/classify";

  // prompt
  std::filesystem::path annotations;
  std::string prompt_prefix;

  // finetune
  finetune::Hyperparams hyperparams;
  std::chrono::milliseconds poll_interval{1000};
  std::chrono::milliseconds poll_timeout{3600 * 1000};

  // infer
  std::string model;  // empty: the model produced by the finetune stage
  std::filesystem::path infer_rows;  // empty: the moderated rows
  int max_tokens = 300;
  double temperature = 0.2;

  // eval
  std::filesystem::path references;  // empty: the annotations file
  std::filesystem::path embeddings;  // empty: remote embedding endpoint
  std::string embedding_model = "text-embedding";
  bool idf = false;
  std::vector<std::size_t> sweep_sizes = {50, 100, 200, 350, 485};

  // endpoint; the token only ever comes from the environment
  http::Endpoint endpoint;

  /// Applies one key=value setting. Throws ArgumentError for unknown keys
  /// or bad values.
  void set(std::string_view key, std::string_view value);
  /// Parses "key = value" lines. A line starting with '#', or " #" after a
  /// value, starts a comment; double quotes keep a value verbatim. Relative
  /// paths are resolved against `base_dir`.
  void merge_file_content(std::string_view content, const std::filesystem::path& base_dir = {});
  void merge_file(const std::filesystem::path& path);

  /// All keys with their current values, in a stable order.
  std::vector<std::pair<std::string, std::string>> entries() const;
  static const std::vector<std::string>& keys();
};

enum class Stage { Ingest, Cluster, Moderate, Prompt, Upload, Finetune, Infer, Eval };

inline constexpr std::size_t kStageCount = 8;
const std::vector<Stage>& all_stages();
std::string_view stage_name(Stage s);
Stage parse_stage(std::string_view name);
/// "all", or a comma list of stage names in pipeline order.
std::vector<Stage> parse_stages(std::string_view list);

inline constexpr std::string_view kStatusOk = "ok";
inline constexpr std::string_view kStatusUpToDate = "skipped (up-to-date)";
inline constexpr std::string_view kStatusUpstreamFailed = "skipped (upstream failed)";
inline constexpr std::string_view kStatusFailed = "failed";
inline constexpr std::string_view kStatusDryRun = "dry-run";

struct StageReport {
  std::string stage;
  std::string status;
  std::map<std::string, long long> counts;
  long long duration_ms = 0;
  std::string input_hash;
  std::map<std::string, std::string> outputs;  // path relative to the stage dir -> sha256
  std::string error;
  std::vector<std::string> warnings;

  http::Json to_json() const;
  static StageReport from_json(const http::Json& j);
};

struct RunOptions {
  bool dry_run = false;
  bool force = false;  // ignore the hash guard
  std::ostream* log = nullptr;
};

struct RunResult {
  int exit_code = 0;  // 0 ok, 1 stage failure, 2 dependency or config error
  std::vector<StageReport> reports;
  std::string error;
};

class Pipeline {
 public:
  explicit Pipeline(PipelineConfig config);

  /// Checks that every requested stage can find its upstream artifacts,
  /// either on disk or from an earlier requested stage. Returns a
  /// description of the first violation.
  std::optional<std::string> check_dependencies(const std::vector<Stage>& stages) const;

  RunResult run(const std::vector<Stage>& stages, const RunOptions& opts = {});

  std::filesystem::path stage_dir(Stage s) const;
  std::filesystem::path report_path(Stage s) const;
  std::optional<StageReport> load_report(Stage s) const;

  const PipelineConfig& config() const { return config_; }

 private:
  struct Plan;

  Plan plan(Stage s) const;

  PipelineConfig config_;
};

// Artifact names inside each stage directory.
namespace artifacts {
inline constexpr std::string_view kCategoriesDir = "categories";
inline constexpr std::string_view kRejects = "rejects.tsv";
inline constexpr std::string_view kDataset = "dataset.tsv";
inline constexpr std::string_view kKept = "kept.tsv";
inline constexpr std::string_view kAudit = "audit.tsv";
inline constexpr std::string_view kJsonl = "dataset.jsonl";
inline constexpr std::string_view kUpload = "upload.json";
inline constexpr std::string_view kJob = "job.json";
inline constexpr std::string_view kResults = "results.jsonl";
inline constexpr std::string_view kScores = "scores.tsv";
inline constexpr std::string_view kSummary = "summary.json";
inline constexpr std::string_view kReport = "report.json";
}  // namespace artifacts

}  // namespace revsum::pipeline
