// Copyright 2026 The revsum Authors
// SPDX-License-Identifier: Apache-2.0

#include "revsum/finetune.hpp"

#include <ctime>
#include <random>
#include <thread>

#include "revsum/error.hpp"
#include "revsum/io.hpp"
#include "revsum/prompting.hpp"
#include "revsum/text.hpp"

namespace revsum::finetune {

using http::Json;

void Hyperparams::validate() const {
  if (engine.empty()) throw ValidationError("engine must not be empty");
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (n_epochs < 1) throw ValidationError("n_epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be > 0");
}

Json Hyperparams::request_body(const std::string& file_id) const {
  return {{"training_file", file_id},       {"model", engine},
          {"batch_size", batch_size},       {"n_epochs", n_epochs},
          {"learning_rate_multiplier", learning_rate}, {"use_padding", use_padding}};
}

std::string to_string(JobStatus s) {
  switch (s) {
    case JobStatus::Pending: return "pending";
    case JobStatus::Running: return "running";
    case JobStatus::Succeeded: return "succeeded";
    case JobStatus::Failed: return "failed";
    case JobStatus::Cancelled: return "cancelled";
  }
  return "unknown";
}

JobStatus parse_status(const std::string& s) {
  if (s == "pending" || s == "queued" || s == "validating_files") return JobStatus::Pending;
  if (s == "running") return JobStatus::Running;
  if (s == "succeeded") return JobStatus::Succeeded;
  if (s == "failed") return JobStatus::Failed;
  if (s == "cancelled") return JobStatus::Cancelled;
  throw ValidationError("unknown job status '" + s + "'");
}

bool is_terminal(JobStatus s) {
  return s == JobStatus::Succeeded || s == JobStatus::Failed || s == JobStatus::Cancelled;
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const auto secs = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()) % 1000;
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[40];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms.count()));
  return out;
}

Ledger::Ledger(std::filesystem::path path) : path_(std::move(path)) {}

void Ledger::append(const Entry& e) const {
  io::append_line_locked(
      path_, Json{{"ts", e.ts}, {"job_id", e.job_id}, {"status", e.status}, {"detail", e.detail}}
                 .dump());
}

std::vector<Ledger::Entry> Ledger::entries() const {
  std::vector<Entry> out;
  if (!std::filesystem::exists(path_)) return out;
  for (const auto& line : text::split(io::read_file(path_), "\n")) {
    if (text::trim(line).empty()) continue;
    try {
      const auto j = Json::parse(line);
      out.push_back({j.value("ts", ""), j.value("job_id", ""), j.value("status", ""),
                     j.value("detail", "")});
    } catch (const Json::exception&) {
      // a torn trailing line from an interrupted writer
    }
  }
  return out;
}

std::vector<Ledger::Entry> Ledger::history(const std::string& job_id) const {
  std::vector<Entry> out;
  for (auto& e : entries()) {
    if (e.job_id == job_id) out.push_back(std::move(e));
  }
  return out;
}

FineTuneClient::FineTuneClient(http::ApiClient& client, std::filesystem::path ledger)
    : client_(client) {
  if (!ledger.empty()) {
    upload_cache_ = ledger.parent_path() / "uploads.jsonl";
    ledger_.emplace(std::move(ledger));
    if (std::filesystem::exists(upload_cache_)) {
      for (const auto& line : text::split(io::read_file(upload_cache_), "\n")) {
        if (text::trim(line).empty()) continue;
        try {
          const auto j = Json::parse(line);
          uploads_[j.at("sha256").get<std::string>()] = j.at("file_id").get<std::string>();
        } catch (const Json::exception&) {
        }
      }
    }
  }
}

std::string FineTuneClient::upload_file(const std::filesystem::path& path) {
  const auto content = io::read_file(path);
  const auto report = prompting::validate_jsonl_content(content);
  if (!report.ok()) {
    const auto& first = report.errors.front();
    throw ValidationError(path.string() + " failed validation (" + report.summary() +
                          "); first error at line " + std::to_string(first.line) + ": " +
                          first.message);
  }
  const auto digest = io::sha256_hex(content);
  {
    std::lock_guard lock(mu_);
    if (const auto it = uploads_.find(digest); it != uploads_.end()) return it->second;
  }
  const auto reply = client_.post_multipart(
      "/files",
      {{"purpose", "fine-tune", "", ""},
       {"file", content, path.filename().string(), "application/jsonl"}},
      {{"Idempotency-Key", "upload-" + digest}});
  if (!reply.contains("id") || !reply["id"].is_string()) {
    throw HttpError(200, true, "upload reply has no file id");
  }
  const auto id = reply["id"].get<std::string>();
  std::lock_guard lock(mu_);
  uploads_[digest] = id;
  if (!upload_cache_.empty()) {
    io::append_line_locked(upload_cache_,
                           Json{{"ts", utc_now()}, {"sha256", digest}, {"file_id", id}}.dump());
  }
  return id;
}

FineTuneJob FineTuneClient::job_from_json(const Json& j) const {
  FineTuneJob job;
  job.job_id = j.at("id").get<std::string>();
  job.file_id = j.value("training_file", "");
  job.status = parse_status(j.at("status").get<std::string>());
  if (j.contains("fine_tuned_model") && j["fine_tuned_model"].is_string()) {
    job.fine_tuned_model = j["fine_tuned_model"].get<std::string>();
  }
  if (j.contains("failure_reason") && j["failure_reason"].is_string()) {
    job.failure_reason = j["failure_reason"].get<std::string>();
  }
  if (j.contains("model") && j["model"].is_string()) job.hyperparams.engine = j["model"];
  if (j.contains("hyperparams") && j["hyperparams"].is_object()) {
    const auto& hp = j["hyperparams"];
    job.hyperparams.batch_size = hp.value("batch_size", job.hyperparams.batch_size);
    job.hyperparams.n_epochs = hp.value("n_epochs", job.hyperparams.n_epochs);
    job.hyperparams.learning_rate =
        hp.value("learning_rate_multiplier", job.hyperparams.learning_rate);
    job.hyperparams.use_padding = hp.value("use_padding", job.hyperparams.use_padding);
  }
  if ((job.status == JobStatus::Succeeded) != job.fine_tuned_model.has_value()) {
    throw HttpError(200, true,
                    "job " + job.job_id + " reports status " + to_string(job.status) +
                        (job.fine_tuned_model ? " with" : " without") + " a fine-tuned model");
  }
  return job;
}

void FineTuneClient::record(FineTuneJob& job, JobStatus status, const std::string& detail) {
  auto ts = utc_now();
  // keep event times non-decreasing even if the wall clock steps back
  if (!job.events.empty() && ts < job.events.back().ts) ts = job.events.back().ts;
  job.events.push_back({ts, status, detail});
  if (ledger_) ledger_->append({ts, job.job_id, to_string(status), detail});
}

FineTuneJob FineTuneClient::create_finetune(const std::string& file_id, const Hyperparams& hp,
                                            std::string idempotency_key) {
  hp.validate();
  if (file_id.empty()) throw ArgumentError("file_id must not be empty");
  if (idempotency_key.empty()) {
    std::random_device rd;
    std::mt19937_64 rng((static_cast<std::uint64_t>(rd()) << 32) ^ rd());
    char buf[40];
    std::snprintf(buf, sizeof buf, "ft-%016llx%016llx",
                  static_cast<unsigned long long>(rng()), static_cast<unsigned long long>(rng()));
    idempotency_key = buf;
  }
  const auto reply =
      client_.post_json("/fine-tunes", hp.request_body(file_id), {{"Idempotency-Key", idempotency_key}});
  auto job = job_from_json(reply);
  job.file_id = file_id;
  job.hyperparams = hp;
  record(job, job.status, "created from " + file_id);
  return job;
}

FineTuneJob FineTuneClient::get_job(const std::string& job_id) {
  return job_from_json(client_.get_json("/fine-tunes/" + job_id));
}

FineTuneJob FineTuneClient::poll_job(const std::string& job_id,
                                     std::chrono::milliseconds interval,
                                     std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  std::optional<JobStatus> last;
  if (ledger_) {
    const auto past = ledger_->history(job_id);
    if (!past.empty()) last = parse_status(past.back().status);
  }
  std::vector<JobEvent> events;
  while (true) {
    auto job = get_job(job_id);
    job.events = std::move(events);
    if (!last || *last != job.status) {
      std::string detail = "observed";
      if (job.fine_tuned_model) detail = "model " + *job.fine_tuned_model;
      if (job.failure_reason) detail = "failed: " + *job.failure_reason;
      record(job, job.status, detail);
      last = job.status;
    }
    if (is_terminal(job.status)) return job;
    if (std::chrono::steady_clock::now() >= deadline) {
      job.timed_out = true;
      return job;
    }
    events = std::move(job.events);
    std::this_thread::sleep_for(interval);
  }
}

}  // namespace revsum::finetune
