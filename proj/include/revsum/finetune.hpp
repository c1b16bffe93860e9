// Copyright 2026 The revsum Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "revsum/http.hpp"

namespace revsum::finetune {

/// Training settings sent with a fine-tune request.
struct Hyperparams {
  std::string engine = "curie";
  int batch_size = 49;
  int n_epochs = 5;
  // Passed through as the service's learning-rate multiplier.
  double learning_rate = 0.1;
  // Extension field; services without padding support ignore it.
  bool use_padding = true;

  /// Throws ValidationError on batch_size < 1, n_epochs < 1, learning_rate <= 0.
  void validate() const;
  http::Json request_body(const std::string& file_id) const;
};

enum class JobStatus { Pending, Running, Succeeded, Failed, Cancelled };

std::string to_string(JobStatus s);
JobStatus parse_status(const std::string& s);
bool is_terminal(JobStatus s);

struct JobEvent {
  std::string ts;  // ISO-8601 UTC
  JobStatus status = JobStatus::Pending;
  std::string detail;
};

struct FineTuneJob {
  std::string file_id;
  std::string job_id;
  JobStatus status = JobStatus::Pending;
  std::optional<std::string> fine_tuned_model;
  std::optional<std::string> failure_reason;
  Hyperparams hyperparams;
  std::vector<JobEvent> events;
  bool timed_out = false;
};

/// Append-only JSON-lines record of job status transitions,
/// {"ts", "job_id", "status", "detail"}. Appends take an advisory lock.
class Ledger {
 public:
  struct Entry {
    std::string ts;
    std::string job_id;
    std::string status;
    std::string detail;
  };

  explicit Ledger(std::filesystem::path path);
  void append(const Entry& e) const;
  std::vector<Entry> entries() const;
  std::vector<Entry> history(const std::string& job_id) const;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Current UTC time, ISO-8601 with milliseconds.
std::string utc_now();

class FineTuneClient {
 public:
  /// `ledger` may be empty to disable persistence. The upload cache lives
  /// next to the ledger as uploads.jsonl.
  explicit FineTuneClient(http::ApiClient& client, std::filesystem::path ledger = {});

  /// Validates the JSONL locally first (ValidationError, no request on
  /// failure). Identical bytes reuse a cached file id.
  std::string upload_file(const std::filesystem::path& path);

  /// Creates a job. An empty `idempotency_key` gets a random one; retries
  /// of this call reuse it so at most one job is created server-side.
  FineTuneJob create_finetune(const std::string& file_id, const Hyperparams& hp,
                              std::string idempotency_key = {});

  /// Single status fetch.
  FineTuneJob get_job(const std::string& job_id);

  /// Polls until the job is terminal or `timeout` elapses; on timeout the
  /// last snapshot is returned with timed_out set. Every observed status
  /// change is appended to the job's events and the ledger.
  FineTuneJob poll_job(const std::string& job_id, std::chrono::milliseconds interval,
                       std::chrono::milliseconds timeout);

 private:
  FineTuneJob job_from_json(const http::Json& j) const;
  void record(FineTuneJob& job, JobStatus status, const std::string& detail);

  http::ApiClient& client_;
  std::optional<Ledger> ledger_;
  std::filesystem::path upload_cache_;
  std::mutex mu_;
  std::map<std::string, std::string> uploads_;  // sha256 -> file id
};

}  // namespace revsum::finetune
