// Copyright 2026 The revsum Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace revsum::mock {

using Json = nlohmann::json;

/// One scripted reply. When `process` is true the request takes effect
/// (ids assigned, jobs created) even if `status` reports a failure, which
/// simulates a response lost after the server committed the work.
struct ResponseSpec {
  int status = 200;
  std::optional<Json> body;
  int delay_ms = 0;
  bool process = true;
};

struct CompletionRule {
  std::string match;  // substring of the prompt
  std::string text;
};

struct ClassifyRule {
  std::string match;  // substring of the input
  std::array<double, 3> logprobs{};
};

/// Declarative server behaviour; see docs/mock-script.md for the file form.
struct Script {
  std::string prefix = "/v1";
  // Keyed by route, e.g. "POST /fine-tunes" or "GET /fine-tunes/{id}".
  std::map<std::string, std::deque<ResponseSpec>> responses;
  std::vector<std::string> job_statuses = {"pending", "running", "succeeded"};
  std::string failure_reason = "scripted failure";
  std::vector<CompletionRule> completions;
  std::string default_completion = " Pros:\n- mock pro\nCons:\n- mock con\nVerdict: Mock verdict.\nEND";
  std::vector<std::string> models;
  bool accept_any_model = false;
  std::vector<ClassifyRule> classify;
  std::array<double, 3> default_logprobs = {-0.35667494393873245, -1.6094379124341003,
                                            -2.3025850929940455};
  std::size_t embedding_dim = 16;

  static Script from_json(const Json& j);
  static Script load(const std::filesystem::path& path);
};

struct CapturedPart {
  std::string name;
  std::string filename;
  std::string content_type;
  std::string content;
};

struct CapturedRequest {
  std::size_t seq = 0;
  std::string method;
  std::string path;
  std::map<std::string, std::string> headers;
  std::string body;
  std::vector<CapturedPart> parts;
  int status = 0;

  Json to_json() const;
};

/// OpenAI-compatible fake: files, fine-tunes, completions, plus a
/// classifier and an embeddings route. Ids are sequential (file-0001,
/// ft-0001, ...); a job advances one scripted status per poll. Requests
/// are captured in arrival order, including injected faults.
class MockServer {
 public:
  explicit MockServer(Script script = {});
  ~MockServer();
  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  /// Binds and starts serving on a background thread. Port 0 picks a free
  /// port. Throws IoError if the port cannot be bound. Returns the port.
  int start(int port = 0, const std::string& host = "127.0.0.1");
  void stop();
  /// Blocks until stop() is called from elsewhere.
  void wait();

  int port() const;
  std::string url() const;

  std::vector<CapturedRequest> capture() const;
  Json capture_json() const;
  /// Appends every captured request to `path` as JSON lines.
  void set_capture_file(std::filesystem::path path);

  std::size_t job_count() const;
  std::size_t file_count() const;

 private:
  struct State;
  std::unique_ptr<State> state_;
};

}  // namespace revsum::mock
