// Copyright 2026 The revsum Authors
// SPDX-License-Identifier: Apache-2.0

#include "revsum/inference.hpp"

#include <algorithm>

#include "revsum/concurrency.hpp"
#include "revsum/error.hpp"
#include "revsum/io.hpp"
#include "revsum/text.hpp"

namespace revsum::inference {

using http::Json;

void CompletionRequest::validate() const {
  if (model.empty()) throw ValidationError("completion request has no model");
  if (!std::string_view(prompt).ends_with(prompting::kPromptEnd)) {
    throw ValidationError("prompt does not end with the prompt-end marker");
  }
  if (std::find(stop.begin(), stop.end(), prompting::kStop) == stop.end()) {
    throw ValidationError("stop list lacks the completion stop sequence");
  }
  if (max_tokens < 1) throw ValidationError("max_tokens must be >= 1");
}

std::string truncate_at_stop(std::string_view text, const std::vector<std::string>& stops) {
  auto cut = text.size();
  for (const auto& s : stops) {
    if (s.empty()) continue;
    cut = std::min(cut, text.find(s));
  }
  return std::string(text.substr(0, cut));
}

std::string InferenceClient::complete(const CompletionRequest& req) {
  req.validate();
  const Json body = {{"model", req.model},
                     {"prompt", req.prompt},
                     {"max_tokens", req.max_tokens},
                     {"temperature", req.temperature},
                     {"stop", req.stop}};
  const auto reply = client_.post_json("/completions", body);
  if (!reply.contains("choices") || !reply["choices"].is_array() || reply["choices"].empty() ||
      !reply["choices"][0].contains("text")) {
    throw HttpError(200, true, "completion reply has no choices[0].text");
  }
  return truncate_at_stop(reply["choices"][0]["text"].get<std::string>(), req.stop);
}

SummaryResult InferenceClient::summarize_reviews(const std::string& model,
                                                 const std::vector<std::string>& reviews,
                                                 const SummarizeOptions& opts) {
  CompletionRequest req;
  req.model = model;
  req.prompt = prompting::build_prompt(reviews, opts.group_size, opts.prompt_prefix);
  req.max_tokens = opts.max_tokens;
  req.temperature = opts.temperature;

  SummaryResult result;
  result.model = model;
  const auto t0 = std::chrono::steady_clock::now();
  result.raw_text = complete(req);
  result.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now() - t0);
  try {
    auto ann = prompting::parse_completion(result.raw_text);
    prompting::validate(ann);
    result.annotation = std::move(ann);
  } catch (const ParseError& e) {
    result.error = e.what();
  } catch (const ValidationError& e) {
    result.error = e.what();
  }
  return result;
}

std::vector<SummaryResult> InferenceClient::summarize_batch(const std::string& model,
                                                            const std::vector<ProductRow>& rows,
                                                            const SummarizeOptions& opts) {
  std::vector<SummaryResult> results(rows.size());
  bounded_for(rows.size(), client_.endpoint().max_in_flight, [&](std::size_t i) {
    try {
      results[i] = summarize_reviews(model, rows[i].reviews, opts);
    } catch (const std::exception& e) {
      results[i].model = model;
      results[i].error = e.what();
    }
  });
  return results;
}

void write_results(const std::filesystem::path& path, const std::vector<ProductRow>& rows,
                   const std::vector<SummaryResult>& results) {
  if (rows.size() != results.size()) throw ArgumentError("rows and results differ in length");
  std::string out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = results[i];
    Json j = {{"row_id", rows[i].row_id}, {"model", r.model}, {"ok", r.ok()}};
    if (r.annotation) {
      j["pros"] = r.annotation->pros;
      j["cons"] = r.annotation->cons;
      j["verdict"] = r.annotation->verdict;
    } else {
      j["pros"] = Json::array();
      j["cons"] = Json::array();
      j["verdict"] = nullptr;
    }
    j["raw_text"] = r.raw_text;
    j["error"] = r.error;
    out += j.dump();
    out += '\n';
  }
  io::write_file(path, out);
}

std::vector<StoredResult> read_results(const std::filesystem::path& path) {
  std::vector<StoredResult> out;
  std::size_t n = 0;
  for (const auto& line : text::split(io::read_file(path), "\n")) {
    ++n;
    if (text::trim(line).empty()) continue;
    try {
      const auto j = Json::parse(line);
      StoredResult s;
      s.row_id = j.at("row_id").get<std::string>();
      s.result.model = j.value("model", "");
      s.result.raw_text = j.value("raw_text", "");
      s.result.error = j.value("error", "");
      if (j.value("ok", false)) {
        prompting::Annotation a;
        a.pros = j.at("pros").get<std::vector<std::string>>();
        a.cons = j.at("cons").get<std::vector<std::string>>();
        a.verdict = j.at("verdict").get<std::string>();
        s.result.annotation = std::move(a);
      }
      out.push_back(std::move(s));
    } catch (const Json::exception& e) {
      throw ParseError(path.string() + ": line " + std::to_string(n) + ": " + e.what(), line);
    }
  }
  return out;
}

}  // namespace revsum::inference
