// Copyright 2026 The revsum Authors
// SPDX-License-Identifier: Apache-2.0

#include "revsum/mock_server.hpp"

#include <httplib.h>

#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <functional>
#include <mutex>
#include <random>
#include <set>
#include <thread>

#include "revsum/error.hpp"
#include "revsum/io.hpp"

namespace revsum::mock {

namespace {

std::string seq_id(const char* prefix, std::size_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s-%04zu", prefix, n);
  return buf;
}

ResponseSpec parse_spec(const Json& j) {
  ResponseSpec s;
  if (j.is_number_integer()) {
    s.status = j.get<int>();
  } else {
    s.status = j.value("status", 200);
    if (j.contains("body")) s.body = j["body"];
    s.delay_ms = j.value("delay_ms", 0);
  }
  s.process = j.is_object() && j.contains("process") ? j["process"].get<bool>() : s.status < 400;
  return s;
}

std::string regex_escape(const std::string& s) {
  std::string out;
  for (const char c : s) {
    if (std::string_view(".^$|()[]{}*+?\\").find(c) != std::string_view::npos) out += '\\';
    out += c;
  }
  return out;
}

}  // namespace

Script Script::from_json(const Json& j) {
  Script s;
  s.prefix = j.value("prefix", s.prefix);
  if (j.contains("responses")) {
    for (const auto& [route, list] : j["responses"].items()) {
      auto& q = s.responses[route];
      for (const auto& spec : list) q.push_back(parse_spec(spec));
    }
  }
  if (j.contains("job_statuses")) {
    s.job_statuses = j["job_statuses"].get<std::vector<std::string>>();
    if (s.job_statuses.empty()) throw ValidationError("job_statuses must not be empty");
  }
  s.failure_reason = j.value("failure_reason", s.failure_reason);
  if (j.contains("completions")) {
    for (const auto& c : j["completions"]) {
      s.completions.push_back({c.value("match", ""), c.at("text").get<std::string>()});
    }
  }
  s.default_completion = j.value("default_completion", s.default_completion);
  if (j.contains("models")) s.models = j["models"].get<std::vector<std::string>>();
  s.accept_any_model = j.value("accept_any_model", s.accept_any_model);
  if (j.contains("classify")) {
    for (const auto& c : j["classify"]) {
      s.classify.push_back({c.value("match", ""), c.at("logprobs").get<std::array<double, 3>>()});
    }
  }
  if (j.contains("default_logprobs")) {
    s.default_logprobs = j["default_logprobs"].get<std::array<double, 3>>();
  }
  s.embedding_dim = j.value("embedding_dim", s.embedding_dim);
  return s;
}

Script Script::load(const std::filesystem::path& path) {
  try {
    return from_json(Json::parse(io::read_file(path)));
  } catch (const Json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

Json CapturedRequest::to_json() const {
  Json j = {{"seq", seq}, {"method", method}, {"path", path}, {"headers", headers},
            {"body", body}, {"status", status}};
  j["parts"] = Json::array();
  for (const auto& p : parts) {
    j["parts"].push_back({{"name", p.name},
                          {"filename", p.filename},
                          {"content_type", p.content_type},
                          {"content", p.content}});
  }
  return j;
}

struct MockServer::State {
  struct File {
    std::string id;
    std::string filename;
    std::string content;
  };
  struct Job {
    std::string id;
    std::string training_file;
    std::string model;
    Json hyperparams;
    std::size_t polls = 0;
    std::size_t number = 0;
  };

  Script script;
  httplib::Server server;
  std::thread thread;
  int port = 0;
  std::string host;

  mutable std::mutex mu;
  std::condition_variable stopped_cv;
  bool running = false;
  std::vector<CapturedRequest> captured;
  std::optional<std::filesystem::path> capture_file;
  std::vector<File> files;
  std::map<std::string, std::size_t> file_by_key;
  std::vector<Job> jobs;
  std::map<std::string, std::size_t> job_by_key;
  std::set<std::string> models;
  std::size_t completion_count = 0;

  // Takes the next scripted reply for a route, if any. Caller holds `mu`.
  std::optional<ResponseSpec> next_spec(const std::string& route) {
    const auto it = script.responses.find(route);
    if (it == script.responses.end() || it->second.empty()) return std::nullopt;
    auto spec = it->second.front();
    it->second.pop_front();
    return spec;
  }

  CapturedRequest record(const httplib::Request& req) {
    CapturedRequest c;
    c.method = req.method;
    c.path = req.path;
    for (const char* h : {"Content-Type", "Idempotency-Key", "Authorization"}) {
      if (req.has_header(h)) {
        c.headers[h] = std::string(h) == "Authorization" ? "Bearer <redacted>"
                                                         : req.get_header_value(h);
      }
    }
    if (req.is_multipart_form_data()) {
      for (const auto& [name, f] : req.files) {
        c.parts.push_back({f.name, f.filename, f.content_type, f.content});
      }
    } else {
      c.body = req.body;
    }
    return c;
  }

  void finish(CapturedRequest c, int status) {
    c.status = status;
    c.seq = captured.size() + 1;
    if (capture_file) io::append_line_locked(*capture_file, c.to_json().dump());
    captured.push_back(std::move(c));
  }

  Json job_json(Job& job) {
    const auto& st = script.job_statuses;
    const auto& status = st[std::min(job.polls, st.size() - 1)];
    Json j = {{"id", job.id},
              {"object", "fine-tune"},
              {"model", job.model},
              {"training_file", job.training_file},
              {"hyperparams", job.hyperparams},
              {"status", status},
              {"fine_tuned_model", nullptr}};
    if (status == "succeeded") {
      const auto name = job.model + ":ft-mock-" + seq_id("", job.number).substr(1);
      j["fine_tuned_model"] = name;
      models.insert(name);
    } else if (status == "failed") {
      j["failure_reason"] = script.failure_reason;
    }
    return j;
  }

  using Handler = std::function<std::pair<int, Json>(const httplib::Request&)>;

  // Shared wrapper: capture, fault injection, default processing.
  void serve(const std::string& route, const httplib::Request& req, httplib::Response& res,
             const Handler& handler) {
    std::optional<ResponseSpec> spec;
    int delay = 0;
    {
      std::lock_guard lock(mu);
      spec = next_spec(route);
      if (spec) delay = spec->delay_ms;
    }
    if (delay > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delay));
    std::lock_guard lock(mu);
    auto cap = record(req);
    int status = 200;
    Json body;
    if (!spec || spec->process) {
      try {
        std::tie(status, body) = handler(req);
      } catch (const std::exception& e) {
        status = 400;
        body = {{"error", {{"message", e.what()}}}};
      }
    }
    if (spec) {
      if (spec->status != 200 || !spec->process) status = spec->status;
      if (spec->body) {
        body = *spec->body;
      } else if (status >= 400 && (body.is_null() || !body.contains("error"))) {
        body = {{"error", {{"message", "injected fault"}}}};
      }
    }
    res.status = status;
    res.set_content(body.is_string() ? body.get<std::string>() : body.dump(), "application/json");
    finish(std::move(cap), status);
  }
};

MockServer::MockServer(Script script) : state_(std::make_unique<State>()) {
  state_->script = std::move(script);
  for (const auto& m : state_->script.models) state_->models.insert(m);
  auto& st = *state_;
  // SO_REUSEPORT (the library default) would let a second server share the port
  st.server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  });
  const auto prefix = regex_escape(st.script.prefix);
  using Req = httplib::Request;
  using Res = httplib::Response;
  const auto error = [](int status, const std::string& msg) {
    return std::pair<int, Json>{status, Json{{"error", {{"message", msg}}}}};
  };

  st.server.Post(prefix + "/files", [&st, error](const Req& req, Res& res) {
    st.serve("POST /files", req, res, [&](const Req& r) -> std::pair<int, Json> {
      if (!r.has_file("file")) return error(400, "multipart field 'file' is required");
      const auto f = r.get_file_value("file");
      const auto key = r.get_header_value("Idempotency-Key");
      std::size_t idx = 0;
      if (!key.empty() && st.file_by_key.contains(key)) {
        idx = st.file_by_key[key];
      } else {
        idx = st.files.size();
        st.files.push_back({seq_id("file", idx + 1), f.filename, f.content});
        if (!key.empty()) st.file_by_key[key] = idx;
      }
      const auto& file = st.files[idx];
      const auto purpose = r.has_file("purpose") ? r.get_file_value("purpose").content : "";
      return {200, Json{{"id", file.id},
                        {"object", "file"},
                        {"bytes", file.content.size()},
                        {"filename", file.filename},
                        {"purpose", purpose}}};
    });
  });

  st.server.Post(prefix + "/fine-tunes", [&st, error](const Req& req, Res& res) {
    st.serve("POST /fine-tunes", req, res, [&](const Req& r) -> std::pair<int, Json> {
      const auto body = Json::parse(r.body);
      const auto file_id = body.at("training_file").get<std::string>();
      const bool known = std::any_of(st.files.begin(), st.files.end(),
                                     [&](const State::File& f) { return f.id == file_id; });
      if (!known) return error(404, "no such file: " + file_id);
      const auto key = r.get_header_value("Idempotency-Key");
      if (!key.empty() && st.job_by_key.contains(key)) {
        return {200, st.job_json(st.jobs[st.job_by_key[key]])};
      }
      State::Job job;
      job.number = st.jobs.size() + 1;
      job.id = seq_id("ft", job.number);
      job.training_file = file_id;
      job.model = body.value("model", "curie");
      job.hyperparams = body;
      job.hyperparams.erase("training_file");
      job.hyperparams.erase("model");
      st.jobs.push_back(job);
      if (!key.empty()) st.job_by_key[key] = st.jobs.size() - 1;
      return {200, st.job_json(st.jobs.back())};
    });
  });

  st.server.Get(prefix + R"(/fine-tunes/([^/]+))", [&st, error](const Req& req, Res& res) {
    st.serve("GET /fine-tunes/{id}", req, res, [&](const Req& r) -> std::pair<int, Json> {
      const auto id = r.matches[1].str();
      for (auto& job : st.jobs) {
        if (job.id == id) {
          ++job.polls;
          return {200, st.job_json(job)};
        }
      }
      return error(404, "no such fine-tune: " + id);
    });
  });

  st.server.Post(prefix + "/completions", [&st, error](const Req& req, Res& res) {
    st.serve("POST /completions", req, res, [&](const Req& r) -> std::pair<int, Json> {
      const auto body = Json::parse(r.body);
      const auto model = body.at("model").get<std::string>();
      if (!st.script.accept_any_model && !st.models.contains(model)) {
        return error(404, "model not found: " + model);
      }
      const auto prompt = body.at("prompt").get<std::string>();
      std::string text = st.script.default_completion;
      for (const auto& rule : st.script.completions) {
        if (prompt.find(rule.match) != std::string::npos) {
          text = rule.text;
          break;
        }
      }
      ++st.completion_count;
      return {200, Json{{"id", seq_id("cmpl", st.completion_count)},
                        {"object", "text_completion"},
                        {"model", model},
                        {"choices", Json::array({{{"text", text},
                                                  {"index", 0},
                                                  {"finish_reason", "stop"}}})}}};
    });
  });

  st.server.Post(prefix + "/classify", [&st](const Req& req, Res& res) {
    st.serve("POST /classify", req, res, [&](const Req& r) -> std::pair<int, Json> {
      const auto input = Json::parse(r.body).at("input").get<std::string>();
      auto lp = st.script.default_logprobs;
      for (const auto& rule : st.script.classify) {
        if (input.find(rule.match) != std::string::npos) {
          lp = rule.logprobs;
          break;
        }
      }
      return {200, Json{{"logprobs", lp}}};
    });
  });

  st.server.Post(prefix + "/embeddings", [&st](const Req& req, Res& res) {
    st.serve("POST /embeddings", req, res, [&](const Req& r) -> std::pair<int, Json> {
      const auto input = Json::parse(r.body).at("input").get<std::vector<std::string>>();
      Json data = Json::array();
      for (std::size_t i = 0; i < input.size(); ++i) {
        // FNV-1a of the token seeds a per-token generator
        std::uint64_t h = 1469598103934665603ULL;
        for (const char c : input[i]) {
          h ^= static_cast<unsigned char>(c);
          h *= 1099511628211ULL;
        }
        std::mt19937_64 rng(h);
        std::vector<double> v(st.script.embedding_dim);
        for (auto& x : v) x = static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0;
        data.push_back({{"index", i}, {"embedding", v}});
      }
      return {200, Json{{"object", "list"}, {"data", data}}};
    });
  });

  st.server.Get("/_mock/requests", [&st](const Req&, Res& res) {
    std::lock_guard lock(st.mu);
    Json arr = Json::array();
    for (const auto& c : st.captured) arr.push_back(c.to_json());
    res.set_content(arr.dump(), "application/json");
  });
}

MockServer::~MockServer() { stop(); }

int MockServer::start(int port, const std::string& host) {
  auto& st = *state_;
  if (port == 0) {
    st.port = st.server.bind_to_any_port(host);
    if (st.port < 0) throw IoError("cannot bind mock server on " + host);
  } else {
    if (!st.server.bind_to_port(host, port)) {
      throw IoError("cannot bind mock server to " + host + ":" + std::to_string(port) +
                    " (port in use?)");
    }
    st.port = port;
  }
  st.host = host;
  st.thread = std::thread([&st] { st.server.listen_after_bind(); });
  st.server.wait_until_ready();
  {
    std::lock_guard lock(st.mu);
    st.running = true;
  }
  return st.port;
}

void MockServer::stop() {
  auto& st = *state_;
  st.server.stop();
  if (st.thread.joinable()) st.thread.join();
  {
    std::lock_guard lock(st.mu);
    st.running = false;
  }
  st.stopped_cv.notify_all();
}

void MockServer::wait() {
  auto& st = *state_;
  std::unique_lock lock(st.mu);
  st.stopped_cv.wait(lock, [&st] { return !st.running; });
}

int MockServer::port() const { return state_->port; }

std::string MockServer::url() const {
  return "http://" + state_->host + ":" + std::to_string(state_->port);
}

std::vector<CapturedRequest> MockServer::capture() const {
  std::lock_guard lock(state_->mu);
  return state_->captured;
}

Json MockServer::capture_json() const {
  Json arr = Json::array();
  for (const auto& c : capture()) arr.push_back(c.to_json());
  return arr;
}

void MockServer::set_capture_file(std::filesystem::path path) {
  std::lock_guard lock(state_->mu);
  state_->capture_file = std::move(path);
}

std::size_t MockServer::job_count() const {
  std::lock_guard lock(state_->mu);
  return state_->jobs.size();
}

std::size_t MockServer::file_count() const {
  std::lock_guard lock(state_->mu);
  return state_->files.size();
}

}  // namespace revsum::mock
