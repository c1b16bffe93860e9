// Copyright 2026 The revsum Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <semaphore>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace revsum::http {

using Json = nlohmann::json;

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds base_delay{250};
  double multiplier = 2.0;
  std::chrono::milliseconds max_delay{8000};

  /// Delay before retry number `retry` (1-based).
  std::chrono::milliseconds delay(int retry) const;
};

/// Where and how to reach an OpenAI-compatible service.
struct Endpoint {
  std::string base_url = "http://127.0.0.1:8080";
  std::string prefix = "/v1";
  std::string token;
  std::chrono::milliseconds timeout{30000};
  RetryPolicy retry;
  std::size_t max_in_flight = 4;
};

inline constexpr const char* kTokenEnvVar = "REVSUM_API_KEY";

/// Reads the bearer token from the environment; empty when unset.
std::string token_from_env(const char* var = kTokenEnvVar);

struct AttemptRecord {
  std::string method;
  std::string path;
  int attempt = 0;
  int status = 0;  // 0: transport error
  std::string error;
};

struct FilePart {
  std::string name;
  std::string content;
  std::string filename;
  std::string content_type;
};

using Headers = std::multimap<std::string, std::string>;

/// JSON-over-HTTP client with bounded in-flight requests and retries.
///
/// 5xx, 429 and transport failures are retried with exponential backoff up
/// to RetryPolicy::max_attempts; other 4xx are permanent. Both surface as
/// HttpError once retries are exhausted. Safe to share across threads.
class ApiClient {
 public:
  explicit ApiClient(Endpoint endpoint);
  ~ApiClient();
  ApiClient(const ApiClient&) = delete;
  ApiClient& operator=(const ApiClient&) = delete;

  /// `path` is relative to the endpoint prefix, e.g. "/files".
  Json get_json(const std::string& path, const Headers& headers = {});
  Json post_json(const std::string& path, const Json& body, const Headers& headers = {});
  Json post_multipart(const std::string& path, const std::vector<FilePart>& parts,
                      const Headers& headers = {});

  const Endpoint& endpoint() const { return endpoint_; }
  std::vector<AttemptRecord> attempts() const;

 private:
  struct Reply {
    int status = 0;
    std::string body;
    std::string error;
  };
  template <class Send>
  Json with_retry(const std::string& method, const std::string& path, Send&& send);

  Endpoint endpoint_;
  std::counting_semaphore<1024> in_flight_;
  mutable std::mutex mu_;
  std::vector<AttemptRecord> attempts_;
};

}  // namespace revsum::http
