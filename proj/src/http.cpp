// Copyright 2026 The revsum Authors
// SPDX-License-Identifier: Apache-2.0

#include "revsum/http.hpp"

#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "revsum/error.hpp"

namespace revsum::http {

std::chrono::milliseconds RetryPolicy::delay(int retry) const {
  const double ms = static_cast<double>(base_delay.count()) * std::pow(multiplier, retry - 1);
  return std::chrono::milliseconds(
      static_cast<long long>(std::min(ms, static_cast<double>(max_delay.count()))));
}

std::string token_from_env(const char* var) {
  const char* v = std::getenv(var);
  return v ? std::string(v) : std::string();
}

ApiClient::ApiClient(Endpoint endpoint)
    : endpoint_(std::move(endpoint)),
      in_flight_(static_cast<std::ptrdiff_t>(
          std::clamp<std::size_t>(endpoint_.max_in_flight, 1, 1024))) {}

ApiClient::~ApiClient() = default;

std::vector<AttemptRecord> ApiClient::attempts() const {
  std::lock_guard lock(mu_);
  return attempts_;
}

namespace {

std::unique_ptr<httplib::Client> make_client(const Endpoint& ep) {
  auto cli = std::make_unique<httplib::Client>(ep.base_url);
  if (!cli->is_valid()) throw ArgumentError("invalid base URL " + ep.base_url);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(ep.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(ep.timeout - secs);
  cli->set_connection_timeout(secs.count(), usecs.count());
  cli->set_read_timeout(secs.count(), usecs.count());
  cli->set_write_timeout(secs.count(), usecs.count());
  if (!ep.token.empty()) cli->set_bearer_token_auth(ep.token);
  return cli;
}

httplib::Headers to_httplib(const Headers& h) {
  return httplib::Headers(h.begin(), h.end());
}

std::string error_message(const std::string& body) {
  try {
    const auto j = Json::parse(body);
    if (j.contains("error")) {
      const auto& e = j["error"];
      if (e.is_object() && e.contains("message")) return e["message"].get<std::string>();
      if (e.is_string()) return e.get<std::string>();
    }
  } catch (const Json::exception&) {
  }
  return body.substr(0, 200);
}

}  // namespace

template <class Send>
Json ApiClient::with_retry(const std::string& method, const std::string& path, Send&& send) {
  const auto full = endpoint_.prefix + path;
  const int max_attempts = std::max(1, endpoint_.retry.max_attempts);
  for (int attempt = 1;; ++attempt) {
    Reply reply;
    {
      in_flight_.acquire();
      try {
        auto cli = make_client(endpoint_);
        auto res = send(*cli, full);
        if (res) {
          reply.status = res->status;
          reply.body = std::move(res->body);
        } else {
          reply.error = httplib::to_string(res.error());
        }
      } catch (...) {
        in_flight_.release();
        throw;
      }
      in_flight_.release();
    }
    {
      std::lock_guard lock(mu_);
      attempts_.push_back({method, full, attempt, reply.status, reply.error});
    }
    if (reply.status >= 200 && reply.status < 300) {
      try {
        return Json::parse(reply.body);
      } catch (const Json::exception& e) {
        throw HttpError(reply.status, true,
                        method + " " + full + ": response is not JSON: " + e.what());
      }
    }
    const bool transient = reply.status == 0 || reply.status == 429 || reply.status >= 500;
    if (!transient) {
      throw HttpError(reply.status, true,
                      method + " " + full + " -> " + std::to_string(reply.status) + ": " +
                          error_message(reply.body));
    }
    if (attempt >= max_attempts) {
      throw HttpError(reply.status, false,
                      method + " " + full + " failed after " + std::to_string(attempt) +
                          " attempts: " +
                          (reply.status ? std::to_string(reply.status) : reply.error));
    }
    std::this_thread::sleep_for(endpoint_.retry.delay(attempt));
  }
}

Json ApiClient::get_json(const std::string& path, const Headers& headers) {
  return with_retry("GET", path, [&](httplib::Client& cli, const std::string& full) {
    return cli.Get(full, to_httplib(headers));
  });
}

Json ApiClient::post_json(const std::string& path, const Json& body, const Headers& headers) {
  const auto payload = body.dump();
  return with_retry("POST", path, [&](httplib::Client& cli, const std::string& full) {
    return cli.Post(full, to_httplib(headers), payload, "application/json");
  });
}

Json ApiClient::post_multipart(const std::string& path, const std::vector<FilePart>& parts,
                               const Headers& headers) {
  httplib::MultipartFormDataItems items;
  for (const auto& p : parts) items.push_back({p.name, p.content, p.filename, p.content_type});
  return with_retry("POST", path, [&](httplib::Client& cli, const std::string& full) {
    return cli.Post(full, to_httplib(headers), items);
  });
}

}  // namespace revsum::http
