// Copyright 2026 The revsum Authors
// SPDX-License-Identifier: Apache-2.0

#include "revsum/moderation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "revsum/concurrency.hpp"
#include "revsum/error.hpp"
#include "revsum/io.hpp"
#include "revsum/text.hpp"

namespace revsum::moderation {

bool LabelLogProbs::valid(double tol) const {
  for (const double lp : {lp0, lp1, lp2}) {
    if (std::isnan(lp) || lp > 0.0) return false;
  }
  return std::abs(std::exp(lp0) + std::exp(lp1) + std::exp(lp2) - 1.0) <= tol;
}

LabelLogProbs LabelLogProbs::from_scores(double s0, double s1, double s2) {
  const double m = std::max({s0, s1, s2});
  const double lse = m + std::log(std::exp(s0 - m) + std::exp(s1 - m) + std::exp(s2 - m));
  return {std::min(0.0, s0 - lse), std::min(0.0, s1 - lse), std::min(0.0, s2 - lse)};
}

ModerationResult decide(const LabelLogProbs& logprobs, double thresh) {
  if (!logprobs.valid()) throw ValidationError("log-probabilities do not form a distribution");
  ModerationResult r;
  r.logprobs = logprobs;
  r.thresh = thresh;
  if (logprobs.lp2 >= thresh) {
    r.action = Action::Reject;
    r.final_label = 2;
  } else {
    r.action = Action::Keep;
    r.final_label = logprobs.lp0 > logprobs.lp1 ? 0 : 1;
  }
  return r;
}

Lexicon Lexicon::parse(std::string_view tsv) {
  const auto file = io::parse_delimited(tsv, io::Format::Tsv);
  const auto label_col = file.column("label");
  const auto term_col = file.column("term");
  const auto weight_col = file.column("weight");
  if (!label_col) throw SchemaError("label", "lexicon is missing column 'label'");
  if (!term_col) throw SchemaError("term", "lexicon is missing column 'term'");
  Lexicon lex;
  for (const auto& row : file.rows) {
    const auto where = "lexicon row " + std::to_string(row.row_number);
    if (row.error) throw ValidationError(where + ": " + *row.error);
    const auto label = text::parse_int(row.fields[*label_col]);
    if (!label || *label < 0 || *label > 2) throw ValidationError(where + ": label must be 0, 1 or 2");
    const auto tokens = text::tokenize(row.fields[*term_col]);
    if (tokens.size() != 1) throw ValidationError(where + ": term must be a single token");
    double weight = 1.0;
    if (weight_col && !text::trim(row.fields[*weight_col]).empty()) {
      const auto w = text::parse_double(row.fields[*weight_col]);
      if (!w || !(*w > 0.0)) throw ValidationError(where + ": weight must be positive");
      weight = *w;
    }
    lex.terms[static_cast<std::size_t>(*label)][tokens.front()] += weight;
  }
  for (std::size_t l = 0; l < 3; ++l) {
    if (lex.terms[l].empty()) {
      throw ValidationError("lexicon has no terms for label " + std::to_string(l));
    }
  }
  return lex;
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
  return parse(io::read_file(path));
}

LabelLogProbs classify_local(std::string_view input, const Lexicon& lexicon) {
  for (const auto& t : lexicon.terms) {
    if (t.empty()) throw ArgumentError("lexicon needs terms for every label");
  }
  std::unordered_map<std::string, bool> vocab;
  for (const auto& t : lexicon.terms) {
    for (const auto& [term, _] : t) vocab.emplace(term, true);
  }
  std::array<double, 3> mass{};
  for (std::size_t l = 0; l < 3; ++l) {
    for (const auto& [_, w] : lexicon.terms[l]) mass[l] += w;
  }
  const auto v = static_cast<double>(vocab.size());
  std::array<double, 3> score{};
  for (const auto& tok : text::tokenize(input)) {
    if (!vocab.contains(tok)) continue;
    for (std::size_t l = 0; l < 3; ++l) {
      const auto it = lexicon.terms[l].find(tok);
      const double w = it == lexicon.terms[l].end() ? 0.0 : it->second;
      score[l] += std::log((w + 1.0) / (mass[l] + v));
    }
  }
  return LabelLogProbs::from_scores(score[0], score[1], score[2]);
}

LexiconClassifier::LexiconClassifier(Lexicon lexicon) : lexicon_(std::move(lexicon)) {}

LabelLogProbs LexiconClassifier::classify(std::string_view text) const {
  return classify_local(text, lexicon_);
}

RemoteClassifier::RemoteClassifier(http::ApiClient& client, std::string path)
    : client_(client), path_(std::move(path)) {}

LabelLogProbs RemoteClassifier::classify(std::string_view text) const {
  const auto reply = client_.post_json(path_, {{"input", std::string(text)}});
  if (!reply.contains("logprobs") || !reply["logprobs"].is_array() ||
      reply["logprobs"].size() != 3) {
    throw ValidationError("classifier reply lacks a 3-element 'logprobs' array");
  }
  const auto& a = reply["logprobs"];
  const auto get = [](const http::Json& j) {
    // JSON cannot carry -inf; null stands for log(0)
    return j.is_null() ? -std::numeric_limits<double>::infinity() : j.get<double>();
  };
  LabelLogProbs lp{get(a[0]), get(a[1]), get(a[2])};
  if (!lp.valid()) throw ValidationError("classifier returned an invalid distribution");
  return lp;
}

FilterResult filter_rows(const std::vector<ProductRow>& rows, const SafetyClassifier& classifier,
                         double thresh, std::size_t max_in_flight) {
  struct Outcome {
    std::optional<ModerationResult> result;
    std::string error;
  };
  std::vector<std::size_t> offset(rows.size() + 1, 0);
  for (std::size_t i = 0; i < rows.size(); ++i) offset[i + 1] = offset[i] + rows[i].reviews.size();
  std::vector<Outcome> outcomes(offset.back());
  std::vector<std::pair<std::size_t, std::size_t>> where(offset.back());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].reviews.size(); ++j) where[offset[i] + j] = {i, j};
  }

  bounded_for(outcomes.size(), max_in_flight, [&](std::size_t k) {
    const auto [i, j] = where[k];
    try {
      const auto lp = classifier.classify(rows[i].reviews[j]);
      if (!lp.valid()) {
        outcomes[k].error = "classifier returned an invalid distribution";
        return;
      }
      outcomes[k].result = decide(lp, thresh);
    } catch (const std::exception& e) {
      outcomes[k].error = e.what();
    }
  });

  FilterResult out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    bool rejected = false;
    bool failed = false;
    for (std::size_t k = offset[i]; k < offset[i + 1]; ++k) {
      const auto& o = outcomes[k];
      const std::size_t index = k - offset[i] + 1;
      if (!o.result) {
        failed = true;
        out.audit.push_back({rows[i].row_id, index, std::nullopt, "Quarantine", o.error});
      } else if (o.result->action == Action::Reject) {
        rejected = true;
        out.audit.push_back({rows[i].row_id, index, o.result->logprobs, "Reject", ""});
      }
    }
    // a known rejection settles the row even if another review failed
    if (rejected) {
      out.dropped.push_back(rows[i]);
    } else if (failed) {
      out.quarantined.push_back(rows[i]);
    } else {
      out.kept.push_back(rows[i]);
    }
  }
  return out;
}

void write_audit(const std::filesystem::path& path, const std::vector<AuditEntry>& audit) {
  std::vector<std::vector<std::string>> table;
  for (const auto& a : audit) {
    std::vector<std::string> row = {a.row_id, std::to_string(a.review_index)};
    if (a.logprobs) {
      row.push_back(text::format_double(a.logprobs->lp0));
      row.push_back(text::format_double(a.logprobs->lp1));
      row.push_back(text::format_double(a.logprobs->lp2));
    } else {
      row.insert(row.end(), {"", "", ""});
    }
    row.push_back(a.action);
    table.push_back(std::move(row));
  }
  io::write_file(path,
                 io::format_tsv({"row_id", "review_index", "lp0", "lp1", "lp2", "action"}, table));
}

}  // namespace revsum::moderation
