// Copyright 2026 The revsum Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cstdlib>

#include "revsum/error.hpp"
#include "revsum/finetune.hpp"
#include "revsum/http.hpp"
#include "revsum/inference.hpp"
#include "revsum/io.hpp"
#include "revsum/mock_server.hpp"
#include "revsum/prompting.hpp"
#include "revsum/text.hpp"
#include "support.hpp"

namespace revsum {
namespace {

using Json = nlohmann::json;

http::Endpoint endpoint_for(const mock::MockServer& server) {
  http::Endpoint ep;
  ep.base_url = server.url();
  ep.timeout = std::chrono::milliseconds(5000);
  ep.retry.base_delay = std::chrono::milliseconds(1);
  ep.retry.max_delay = std::chrono::milliseconds(5);
  return ep;
}

mock::Script script_from(const std::string& json) { return mock::Script::from_json(Json::parse(json)); }

std::filesystem::path write_dataset(const std::filesystem::path& dir, std::size_t n) {
  std::vector<prompting::TrainingExample> xs;
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<std::string> r = {"first " + std::to_string(i), "second", "third"};
    xs.push_back({prompting::build_prompt(r, 3), prompting::build_completion({{"p"}, {"c"}, "v"})});
  }
  const auto path = dir / "train.jsonl";
  prompting::write_jsonl(path, xs);
  return path;
}

TEST(Retry, DelaysGrowAndCap) {
  http::RetryPolicy p;
  p.base_delay = std::chrono::milliseconds(100);
  p.multiplier = 2.0;
  p.max_delay = std::chrono::milliseconds(350);
  EXPECT_EQ(p.delay(1).count(), 100);
  EXPECT_EQ(p.delay(2).count(), 200);
  EXPECT_EQ(p.delay(3).count(), 350);
  EXPECT_EQ(p.delay(10).count(), 350);
}

TEST(Token, ComesFromEnvironment) {
  ::setenv("REVSUM_TEST_TOKEN_VAR", "secret", 1);
  EXPECT_EQ(http::token_from_env("REVSUM_TEST_TOKEN_VAR"), "secret");
  ::unsetenv("REVSUM_TEST_TOKEN_VAR");
  EXPECT_EQ(http::token_from_env("REVSUM_TEST_TOKEN_VAR"), "");
}

TEST(ApiClient, RetriesServerErrorsThenSucceeds) {
  mock::MockServer server(script_from(R"({"responses": {"POST /files": [500, 500]}})"));
  server.start();
  http::ApiClient client(endpoint_for(server));
  const auto j = client.post_multipart("/files", {{"file", "x", "a.jsonl", "application/jsonl"}});
  EXPECT_EQ(j.at("id"), "file-0001");
  const auto attempts = client.attempts();
  ASSERT_EQ(attempts.size(), 3u);
  EXPECT_EQ(attempts[0].status, 500);
  EXPECT_EQ(attempts[1].status, 500);
  EXPECT_EQ(attempts[2].status, 200);
  EXPECT_EQ(attempts[2].attempt, 3);
  EXPECT_EQ(server.capture().size(), 3u);
}

TEST(ApiClient, ClientErrorsAreNotRetried) {
  mock::MockServer server(script_from(R"({"responses": {"POST /completions": [404]}})"));
  server.start();
  http::ApiClient client(endpoint_for(server));
  try {
    client.post_json("/completions", {{"model", "m"}, {"prompt", "p"}});
    FAIL() << "expected HttpError";
  } catch (const HttpError& e) {
    EXPECT_EQ(e.status(), 404);
  }
  EXPECT_EQ(client.attempts().size(), 1u);
}

TEST(ApiClient, GivesUpAfterMaxAttempts) {
  mock::MockServer server(script_from(R"({"responses": {"POST /completions": [503, 503, 503, 503]}})"));
  server.start();
  auto ep = endpoint_for(server);
  ep.retry.max_attempts = 3;
  http::ApiClient client(ep);
  EXPECT_THROW(client.post_json("/completions", {{"model", "m"}, {"prompt", "p"}}), HttpError);
  EXPECT_EQ(client.attempts().size(), 3u);
}

TEST(ApiClient, TransportFailureIsRetried) {
  http::Endpoint ep;
  ep.base_url = "http://127.0.0.1:1";
  ep.timeout = std::chrono::milliseconds(500);
  ep.retry.max_attempts = 2;
  ep.retry.base_delay = std::chrono::milliseconds(1);
  http::ApiClient client(ep);
  EXPECT_THROW(client.get_json("/fine-tunes/x"), HttpError);
  const auto attempts = client.attempts();
  ASSERT_EQ(attempts.size(), 2u);
  EXPECT_EQ(attempts[0].status, 0);
  EXPECT_FALSE(attempts[0].error.empty());
}

TEST(ApiClient, SendsBearerTokenWithoutLoggingIt) {
  mock::MockServer server;
  server.start();
  auto ep = endpoint_for(server);
  ep.token = "tok-123";
  http::ApiClient client(ep);
  client.post_json("/classify", {{"input", "x"}});
  const auto cap = server.capture();
  ASSERT_EQ(cap.size(), 1u);
  EXPECT_EQ(cap[0].headers.at("Authorization"), "Bearer <redacted>");
  EXPECT_EQ(server.capture_json().dump().find("tok-123"), std::string::npos);
}

TEST(MockServer, NoTrafficMeansEmptyCapture) {
  mock::MockServer server;
  server.start();
  EXPECT_TRUE(server.capture().empty());
}

TEST(MockServer, PortInUseIsAnError) {
  mock::MockServer a;
  const int port = a.start();
  mock::MockServer b;
  EXPECT_THROW(b.start(port), IoError);
}

TEST(MockServer, ScriptFileAndCaptureFile) {
  testing::TempDir dir;
  const auto script = mock::Script::load(testing::data_path("mock_e2e.json"));
  EXPECT_EQ(script.job_statuses.size(), 3u);
  ASSERT_EQ(script.completions.size(), 1u);
  EXPECT_EQ(script.completions[0].match, "keyboard");
  io::write_file(dir.path() / "bad.json", "{not json");
  EXPECT_THROW(mock::Script::load(dir.path() / "bad.json"), ValidationError);

  mock::MockServer server(script);
  server.set_capture_file(dir.path() / "cap.jsonl");
  server.start();
  http::ApiClient client(endpoint_for(server));
  client.post_json("/classify", {{"input", "a"}});
  client.post_json("/classify", {{"input", "b"}});
  const auto lines = text::split(io::read_file(dir.path() / "cap.jsonl"), "\n");
  ASSERT_GE(lines.size(), 2u);
  EXPECT_EQ(Json::parse(lines[0]).at("seq"), 1);
  EXPECT_EQ(Json::parse(lines[1]).at("body"), R"({"input":"b"})");
}

TEST(Finetune, HyperparamDefaultsAndValidation) {
  const finetune::Hyperparams hp;
  const auto body = hp.request_body("file-0001");
  EXPECT_EQ(body.at("training_file"), "file-0001");
  EXPECT_EQ(body.at("model"), "curie");
  EXPECT_EQ(body.at("batch_size"), 49);
  EXPECT_EQ(body.at("n_epochs"), 5);
  EXPECT_EQ(body.at("learning_rate_multiplier"), 0.1);
  EXPECT_EQ(body.at("use_padding"), true);
  auto bad = hp;
  bad.batch_size = 0;
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = hp;
  bad.n_epochs = 0;
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = hp;
  bad.learning_rate = 0.0;
  EXPECT_THROW(bad.validate(), ValidationError);
}

TEST(Finetune, StatusNames) {
  for (const auto s : {finetune::JobStatus::Pending, finetune::JobStatus::Running,
                       finetune::JobStatus::Succeeded, finetune::JobStatus::Failed,
                       finetune::JobStatus::Cancelled}) {
    EXPECT_EQ(finetune::parse_status(finetune::to_string(s)), s);
  }
  EXPECT_TRUE(finetune::is_terminal(finetune::JobStatus::Failed));
  EXPECT_FALSE(finetune::is_terminal(finetune::JobStatus::Running));
  EXPECT_THROW(finetune::parse_status("exploded"), Error);
}

TEST(Finetune, UploadCreatePollSucceeds) {
  testing::TempDir dir;
  mock::MockServer server;
  server.start();
  http::ApiClient client(endpoint_for(server));
  finetune::FineTuneClient ft(client, dir.path() / "ledger.jsonl");
  const auto path = write_dataset(dir.path(), 3);
  const auto file_id = ft.upload_file(path);
  EXPECT_EQ(file_id, "file-0001");
  EXPECT_EQ(ft.upload_file(path), "file-0001");
  EXPECT_EQ(server.file_count(), 1u);

  auto job = ft.create_finetune(file_id, {});
  EXPECT_EQ(job.job_id, "ft-0001");
  EXPECT_EQ(job.status, finetune::JobStatus::Pending);
  EXPECT_FALSE(job.fine_tuned_model.has_value());

  job = ft.poll_job(job.job_id, std::chrono::milliseconds(1), std::chrono::milliseconds(5000));
  EXPECT_EQ(job.status, finetune::JobStatus::Succeeded);
  EXPECT_EQ(job.fine_tuned_model, "curie:ft-mock-0001");
  EXPECT_FALSE(job.timed_out);
  for (std::size_t i = 1; i < job.events.size(); ++i) EXPECT_LE(job.events[i - 1].ts, job.events[i].ts);

  const finetune::Ledger ledger(dir.path() / "ledger.jsonl");
  const auto hist = ledger.history("ft-0001");
  ASSERT_GE(hist.size(), 2u);
  EXPECT_EQ(hist.front().status, "pending");
  EXPECT_EQ(hist.back().status, "succeeded");

  const auto cap = server.capture();
  std::size_t uploads = 0;
  for (const auto& c : cap) {
    if (c.path == "/v1/files") {
      ++uploads;
      ASSERT_FALSE(c.parts.empty());
    }
    if (c.path == "/v1/fine-tunes" && c.method == "POST") {
      const auto body = Json::parse(c.body);
      EXPECT_EQ(body.at("batch_size"), 49);
      EXPECT_FALSE(c.headers.at("Idempotency-Key").empty());
    }
  }
  EXPECT_EQ(uploads, 1u);
}

TEST(Finetune, InvalidFileIsNeverSent) {
  testing::TempDir dir;
  mock::MockServer server;
  server.start();
  http::ApiClient client(endpoint_for(server));
  finetune::FineTuneClient ft(client, dir.path() / "ledger.jsonl");
  io::write_file(dir.path() / "bad.jsonl", "{\"prompt\": \"no marker\", \"completion\": \"x\"}\n");
  EXPECT_THROW(ft.upload_file(dir.path() / "bad.jsonl"), ValidationError);
  finetune::Hyperparams hp;
  hp.batch_size = 0;
  EXPECT_THROW(ft.create_finetune("file-0001", hp), ValidationError);
  EXPECT_TRUE(server.capture().empty());
}

TEST(Finetune, UnknownFileIsPermanent) {
  mock::MockServer server;
  server.start();
  http::ApiClient client(endpoint_for(server));
  finetune::FineTuneClient ft(client);
  EXPECT_THROW(ft.create_finetune("file-9999", {}), HttpError);
  EXPECT_EQ(client.attempts().size(), 1u);
}

TEST(Finetune, ScriptedFailureKeepsReason) {
  testing::TempDir dir;
  mock::MockServer server(script_from(R"({"job_statuses": ["pending", "failed"], "failure_reason": "bad data"})"));
  server.start();
  http::ApiClient client(endpoint_for(server));
  finetune::FineTuneClient ft(client);
  const auto id = ft.upload_file(write_dataset(dir.path(), 2));
  const auto job = ft.poll_job(ft.create_finetune(id, {}).job_id, std::chrono::milliseconds(1),
                               std::chrono::milliseconds(5000));
  EXPECT_EQ(job.status, finetune::JobStatus::Failed);
  EXPECT_EQ(job.failure_reason, "bad data");
  EXPECT_FALSE(job.fine_tuned_model.has_value());
}

TEST(Finetune, TimeoutReturnsSnapshot) {
  testing::TempDir dir;
  mock::MockServer server(script_from(R"({"job_statuses": ["pending", "running", "running", "running", "running", "running", "running", "running", "running", "running", "running", "running", "succeeded"]})"));
  server.start();
  http::ApiClient client(endpoint_for(server));
  finetune::FineTuneClient ft(client);
  const auto id = ft.upload_file(write_dataset(dir.path(), 2));
  const auto job = ft.poll_job(ft.create_finetune(id, {}).job_id, std::chrono::milliseconds(20),
                               std::chrono::milliseconds(60));
  EXPECT_TRUE(job.timed_out);
  EXPECT_EQ(job.status, finetune::JobStatus::Running);
}

TEST(Finetune, IdempotentCreateUnderFaults) {
  testing::TempDir dir;
  for (const char* script : {R"({"responses": {"POST /fine-tunes": [500, 500]}})",
                             R"({"responses": {"POST /fine-tunes": [{"status": 500, "process": true}, {"status": 500, "process": true}]}})"}) {
    mock::MockServer server(script_from(script));
    server.start();
    http::ApiClient client(endpoint_for(server));
    finetune::FineTuneClient ft(client);
    const auto id = ft.upload_file(write_dataset(dir.path(), 2));
    const auto job = ft.create_finetune(id, {}, "key-1");
    EXPECT_EQ(job.job_id, "ft-0001") << script;
    EXPECT_EQ(server.job_count(), 1u) << script;
  }
}

TEST(Finetune, WithoutKeysLostResponsesDuplicate) {
  // control: the same lost response, retried without a key, creates two jobs
  testing::TempDir dir;
  mock::MockServer server(script_from(R"({"responses": {"POST /fine-tunes": [{"status": 500, "process": true}]}})"));
  server.start();
  http::ApiClient client(endpoint_for(server));
  finetune::FineTuneClient ft(client);
  const auto id = ft.upload_file(write_dataset(dir.path(), 2));
  const auto j = client.post_json("/fine-tunes", finetune::Hyperparams{}.request_body(id));
  EXPECT_EQ(j.at("id"), "ft-0002");
  EXPECT_EQ(server.job_count(), 2u);
}

TEST(Inference, TruncateAtStop) {
  const std::vector<std::string> stops = {"\nEND"};
  EXPECT_EQ(inference::truncate_at_stop("abc\nEND more", stops), "abc");
  EXPECT_EQ(inference::truncate_at_stop("abc", stops), "abc");
  EXPECT_EQ(inference::truncate_at_stop("a\nENDb\nEND", stops), "a");
  EXPECT_EQ(inference::truncate_at_stop("x##y", {"\nEND", "##"}), "x");
}

TEST(Inference, RequestValidation) {
  inference::CompletionRequest req;
  req.model = "m";
  req.prompt = "no marker";
  EXPECT_THROW(req.validate(), ValidationError);
  req.prompt = "a\n\n###\n\n";
  EXPECT_NO_THROW(req.validate());
  req.stop = {};
  EXPECT_THROW(req.validate(), ValidationError);
}

mock::Script inference_script() {
  return script_from(R"({
    "models": ["curie:ft-mock-0001"],
    "completions": [
      {"match": "truncate", "text": " Pros:\n- a\nCons:\nVerdict: fine\nEND trailing junk"},
      {"match": "ramble", "text": "I think it is nice."}
    ],
    "default_completion": " Pros:\n- sturdy\n- quiet\nCons:\n- heavy\nVerdict: Recommended.\nEND"
  })");
}

TEST(Inference, CompleteReturnsCannedTextDeterministically) {
  mock::MockServer server(inference_script());
  server.start();
  http::ApiClient client(endpoint_for(server));
  inference::InferenceClient ic(client);
  inference::CompletionRequest req;
  req.model = "curie:ft-mock-0001";
  req.prompt = "hello\n\n###\n\n";
  req.temperature = 0.0;
  const auto a = ic.complete(req);
  EXPECT_EQ(a, " Pros:\n- sturdy\n- quiet\nCons:\n- heavy\nVerdict: Recommended.");
  EXPECT_EQ(ic.complete(req), a);
  req.prompt = "please truncate\n\n###\n\n";
  EXPECT_EQ(ic.complete(req), " Pros:\n- a\nCons:\nVerdict: fine");
  req.model = "unknown-model";
  EXPECT_THROW(ic.complete(req), HttpError);
  const auto body = Json::parse(server.capture()[0].body);
  EXPECT_EQ(body.at("stop"), Json::array({"\nEND"}));
  EXPECT_EQ(body.at("max_tokens"), 300);
}

TEST(Inference, SummarizeReviews) {
  mock::MockServer server(inference_script());
  server.start();
  http::ApiClient client(endpoint_for(server));
  inference::InferenceClient ic(client);
  inference::SummarizeOptions opts;
  opts.group_size = 3;
  const auto r = ic.summarize_reviews("curie:ft-mock-0001", {"one", "two", "three"}, opts);
  ASSERT_TRUE(r.ok()) << r.error;
  EXPECT_EQ(r.annotation->pros.size(), 2u);
  EXPECT_EQ(r.annotation->cons.size(), 1u);
  EXPECT_EQ(r.model, "curie:ft-mock-0001");

  const auto bad = ic.summarize_reviews("curie:ft-mock-0001", {"ramble", "on", "on"}, opts);
  EXPECT_FALSE(bad.ok());
  EXPECT_EQ(bad.raw_text, "I think it is nice.");
  EXPECT_FALSE(bad.error.empty());

  EXPECT_THROW(ic.summarize_reviews("curie:ft-mock-0001", {"a", "b"}, opts), ArgumentError);

  const auto prompt = Json::parse(server.capture()[0].body).at("prompt").get<std::string>();
  EXPECT_EQ(prompt, "one\n\n*******\n\ntwo\n\n*******\n\nthree\n\n###\n\n");
}

TEST(Inference, FourteenReviewsInStrictMode) {
  mock::MockServer server(inference_script());
  server.start();
  http::ApiClient client(endpoint_for(server));
  inference::InferenceClient ic(client);
  EXPECT_THROW(ic.summarize_reviews("curie:ft-mock-0001", std::vector<std::string>(14, "r")), ArgumentError);
  EXPECT_TRUE(server.capture().empty());
}

TEST(Inference, BatchKeepsOrderAndRecordsFailures) {
  testing::TempDir dir;
  mock::MockServer server(inference_script());
  server.start();
  auto ep = endpoint_for(server);
  ep.max_in_flight = 3;
  http::ApiClient client(ep);
  inference::InferenceClient ic(client);
  std::vector<ProductRow> rows;
  for (int i = 0; i < 12; ++i) {
    rows.push_back({"r-" + std::to_string(i), "c", 0, {i % 4 == 0 ? "ramble" : "fine", "x", "y"}});
  }
  inference::SummarizeOptions opts;
  opts.group_size = 3;
  const auto results = ic.summarize_batch("curie:ft-mock-0001", rows, opts);
  ASSERT_EQ(results.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_EQ(results[i].ok(), i % 4 != 0) << i;

  const auto failed = ic.summarize_batch("nope", {rows[1]}, opts);
  ASSERT_EQ(failed.size(), 1u);
  EXPECT_FALSE(failed[0].ok());

  inference::write_results(dir.path() / "res.jsonl", rows, results);
  const auto back = inference::read_results(dir.path() / "res.jsonl");
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].row_id, rows[i].row_id);
    EXPECT_EQ(back[i].result.ok(), results[i].ok());
    EXPECT_EQ(back[i].result.annotation, results[i].annotation);
    EXPECT_EQ(back[i].result.raw_text, results[i].raw_text);
  }

  // every prompt on the wire has n-1 separators and one end marker
  for (const auto& c : server.capture()) {
    if (c.path != "/v1/completions") continue;
    const auto p = Json::parse(c.body).at("prompt").get<std::string>();
    std::size_t seps = 0;
    for (auto pos = p.find(prompting::kSeparator); pos != std::string::npos;
         pos = p.find(prompting::kSeparator, pos + 1)) {
      ++seps;
    }
    EXPECT_EQ(seps, 2u);
    EXPECT_TRUE(p.ends_with(prompting::kPromptEnd));
  }
}

}  // namespace
}  // namespace revsum
