// Copyright 2026 The revsum Authors
// SPDX-License-Identifier: Apache-2.0

#include "revsum/prompting.hpp"

#include <set>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "revsum/error.hpp"
#include "revsum/io.hpp"
#include "revsum/text.hpp"

namespace revsum::prompting {

using Json = nlohmann::json;

void validate(const Annotation& ann) {
  if (text::trim(ann.verdict).empty()) throw ValidationError("annotation verdict is empty");
  const auto check = [](const std::string& s, const char* what) {
    if (s.find('\n') != std::string::npos || s.find('\r') != std::string::npos) {
      throw ValidationError(std::string(what) + " entry contains a line break: " + s);
    }
    if (s.empty() || text::trim(s).size() != s.size()) {
      throw ValidationError(std::string(what) + " entry is empty or has surrounding whitespace: '" + s + "'");
    }
  };
  for (const auto& p : ann.pros) check(p, "pros");
  for (const auto& c : ann.cons) check(c, "cons");
  check(ann.verdict, "verdict");
}

std::string build_prompt(std::span<const std::string> reviews, std::size_t expected_count,
                         std::string_view prefix) {
  if (expected_count != 0 && reviews.size() != expected_count) {
    throw ArgumentError("expected " + std::to_string(expected_count) + " reviews, got " +
                        std::to_string(reviews.size()));
  }
  if (reviews.empty()) throw ArgumentError("no reviews to build a prompt from");
  const auto collides = [](std::string_view s) {
    return s.find(kSeparator) != std::string_view::npos ||
           s.find(kPromptEnd) != std::string_view::npos;
  };
  if (collides(prefix)) throw ContentCollisionError("prompt prefix contains a reserved marker");
  std::string body;
  for (std::size_t i = 0; i < reviews.size(); ++i) {
    if (collides(reviews[i])) {
      throw ContentCollisionError("review " + std::to_string(i + 1) +
                                  " contains the separator or prompt-end marker");
    }
    if (i) body += kSeparator;
    body += reviews[i];
  }
  // Blank-line runs at review edges can still fuse with a neighbouring
  // marker, so check the assembled text splits back to the inputs.
  if (text::split(body, kSeparator) != std::vector<std::string>(reviews.begin(), reviews.end())) {
    throw ContentCollisionError("reviews fuse with the separator at their edges");
  }
  std::string prompt(prefix);
  prompt += body;
  prompt += kPromptEnd;
  if (text::count_occurrences(prompt, kPromptEnd) != 1) {
    throw ContentCollisionError("prompt-end marker would appear more than once");
  }
  return prompt;
}

std::string build_prompt(const ProductRow& row, std::size_t expected_count,
                         std::string_view prefix) {
  return build_prompt(std::span<const std::string>(row.reviews), expected_count, prefix);
}

std::string build_completion(const Annotation& ann) {
  validate(ann);
  std::string out = " Pros:\n";
  for (const auto& p : ann.pros) out += "- " + p + "\n";
  out += "Cons:\n";
  for (const auto& c : ann.cons) out += "- " + c + "\n";
  out += "Verdict: " + ann.verdict;
  out += kStop;
  return out;
}

Annotation parse_completion(std::string_view raw) {
  std::string_view s = text::trim(raw);
  constexpr std::string_view kStopWord = "END";
  if (s.ends_with(kStop)) {
    s.remove_suffix(kStop.size());
  } else if (s == kStopWord) {
    s = {};
  }
  s = text::trim(s);

  enum class Section { None, Pros, Cons, Verdict };
  Section section = Section::None;
  Annotation ann;
  bool saw_verdict = false;
  std::vector<std::string> verdict_lines;

  const auto add_item = [&](std::string_view line) {
    auto item = line;
    if (!item.empty() && (item.front() == '-' || item.front() == '*')) item.remove_prefix(1);
    item = text::trim(item);
    auto& list = section == Section::Pros ? ann.pros : ann.cons;
    list.emplace_back(item);
  };

  for (const auto& full : text::split(s, "\n")) {
    const auto line = text::trim(full);
    std::string_view rest;
    if (text::iequals_prefix(line, "pros:")) {
      section = Section::Pros;
      rest = text::trim(line.substr(5));
    } else if (text::iequals_prefix(line, "cons:")) {
      section = Section::Cons;
      rest = text::trim(line.substr(5));
    } else if (text::iequals_prefix(line, "verdict:")) {
      section = Section::Verdict;
      saw_verdict = true;
      rest = text::trim(line.substr(8));
      if (!rest.empty()) verdict_lines.emplace_back(rest);
      continue;
    } else {
      if (line.empty()) continue;
      if (section == Section::Pros || section == Section::Cons) {
        add_item(line);
      } else if (section == Section::Verdict) {
        verdict_lines.emplace_back(line);
      }
      continue;
    }
    if (!rest.empty()) add_item(rest);
  }
  if (!saw_verdict) throw ParseError("no Verdict section in completion", std::string(raw));
  ann.verdict = text::join(verdict_lines, "\n");
  if (ann.verdict.empty()) throw ParseError("empty Verdict section in completion", std::string(raw));
  return ann;
}

std::string content_text(const Annotation& ann) {
  std::vector<std::string> lines;
  lines.insert(lines.end(), ann.pros.begin(), ann.pros.end());
  lines.insert(lines.end(), ann.cons.begin(), ann.cons.end());
  lines.push_back(ann.verdict);
  return text::join(lines, "\n");
}

std::string to_jsonl_line(const TrainingExample& ex) {
  try {
    return "{\"prompt\": " + Json(ex.prompt).dump() + ", \"completion\": " +
           Json(ex.completion).dump() + "}";
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("example is not valid UTF-8: ") + e.what());
  }
}

std::string to_jsonl(std::span<const TrainingExample> examples) {
  std::string out;
  for (const auto& ex : examples) {
    out += to_jsonl_line(ex);
    out += '\n';
  }
  return out;
}

void write_jsonl(const std::filesystem::path& path, std::span<const TrainingExample> examples) {
  io::write_file(path, to_jsonl(examples));
}

std::vector<TrainingExample> from_jsonl(std::string_view content) {
  std::vector<TrainingExample> out;
  std::size_t line_no = 0;
  for (const auto& line : text::split(content, "\n")) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = Json::parse(line);
      out.push_back({j.at("prompt").get<std::string>(), j.at("completion").get<std::string>()});
    } catch (const Json::exception& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what(), line);
    }
  }
  return out;
}

std::vector<TrainingExample> read_jsonl(const std::filesystem::path& path) {
  return from_jsonl(io::read_file(path));
}

std::string ValidationReport::summary() const {
  return std::to_string(lines) + " lines, " + std::to_string(valid_examples) +
         " valid examples, " + std::to_string(errors.size()) + " errors, " +
         std::to_string(warnings.size()) + " warnings";
}

ValidationReport validate_jsonl_content(std::string_view content) {
  ValidationReport rep;
  std::unordered_set<std::string> prompts;
  auto lines = text::split(content, "\n");
  if (!content.empty() && content.back() == '\n') lines.pop_back();
  if (content.empty()) lines.clear();
  if (lines.empty()) rep.errors.push_back({0, "empty", "file contains no examples"});
  if (!content.empty() && content.back() != '\n') {
    rep.warnings.push_back({lines.size(), "no-trailing-newline", "file does not end with LF"});
  }
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t n = i + 1;
    ++rep.lines;
    const auto& line = lines[i];
    const auto err = [&](std::string kind, std::string msg) {
      rep.errors.push_back({n, std::move(kind), std::move(msg)});
    };
    if (!line.empty() && line.back() == '\r') {
      err("crlf", "line ends with CR");
      continue;
    }
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::exception& e) {
      err("bad-json", e.what());
      continue;
    }
    if (!j.is_object()) {
      err("bad-json", "line is not a JSON object");
      continue;
    }
    bool ok = true;
    for (const char* key : {"prompt", "completion"}) {
      if (!j.contains(key)) {
        err("missing-key", std::string("missing key '") + key + "'");
        ok = false;
      } else if (!j[key].is_string()) {
        err("bad-type", std::string("'") + key + "' is not a string");
        ok = false;
      }
    }
    if (!ok) continue;
    for (const auto& [key, _] : j.items()) {
      if (key != "prompt" && key != "completion") {
        rep.warnings.push_back({n, "extra-key", "unexpected key '" + key + "'"});
      }
    }
    const auto prompt = j["prompt"].get<std::string>();
    const auto completion = j["completion"].get<std::string>();
    if (!std::string_view(prompt).ends_with(kPromptEnd)) {
      err("prompt-end", "prompt does not end with the prompt-end marker");
      ok = false;
    }
    if (completion.empty() || completion.front() != ' ') {
      err("leading-space", "completion does not start with a single space");
      ok = false;
    } else if (completion.size() > 1 && completion[1] == ' ') {
      err("leading-space", "completion starts with more than one space");
      ok = false;
    }
    if (!std::string_view(completion).ends_with(kStop)) {
      err("stop-sequence", "completion does not end with the stop sequence");
      ok = false;
    }
    if (!prompts.insert(prompt).second) {
      rep.warnings.push_back({n, "duplicate-prompt", "prompt duplicates an earlier line"});
    }
    if (ok) ++rep.valid_examples;
  }
  return rep;
}

ValidationReport validate_jsonl(const std::filesystem::path& path) {
  return validate_jsonl_content(io::read_file(path));
}

namespace {

std::vector<std::string> split_items(std::string_view field) {
  std::vector<std::string> out;
  if (text::trim(field).empty()) return out;
  for (const auto& item : text::split(field, kItemDelimiter)) {
    out.emplace_back(text::trim(item));
  }
  return out;
}

}  // namespace

std::vector<AnnotatedRow> read_annotations(const std::filesystem::path& path) {
  const auto file = io::read_delimited(path, io::Format::Tsv);
  std::array<std::size_t, 4> col{};
  const std::array<const char*, 4> names = {"row_id", "pros", "cons", "verdict"};
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto c = file.column(names[i]);
    if (!c) throw SchemaError(names[i], path.string() + ": missing column '" + names[i] + "'");
    col[i] = *c;
  }
  std::vector<AnnotatedRow> out;
  std::set<std::string> seen;
  for (const auto& row : file.rows) {
    const auto where = path.string() + ": row " + std::to_string(row.row_number);
    if (row.error) throw ValidationError(where + ": " + *row.error);
    AnnotatedRow a;
    a.row_id = std::string(text::trim(row.fields[col[0]]));
    a.annotation.pros = split_items(row.fields[col[1]]);
    a.annotation.cons = split_items(row.fields[col[2]]);
    a.annotation.verdict = std::string(text::trim(row.fields[col[3]]));
    try {
      validate(a.annotation);
    } catch (const ValidationError& e) {
      throw ValidationError(where + ": " + e.what());
    }
    if (!seen.insert(a.row_id).second) throw ValidationError(where + ": duplicate row_id");
    out.push_back(std::move(a));
  }
  return out;
}

void write_annotations(const std::filesystem::path& path, const std::vector<AnnotatedRow>& rows) {
  std::vector<std::vector<std::string>> table;
  for (const auto& r : rows) {
    table.push_back({r.row_id, text::join(r.annotation.pros, kItemDelimiter),
                     text::join(r.annotation.cons, kItemDelimiter), r.annotation.verdict});
  }
  io::write_file(path, io::format_tsv({"row_id", "pros", "cons", "verdict"}, table));
}

}  // namespace revsum::prompting
