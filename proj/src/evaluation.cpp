// Copyright 2026 The revsum Authors
// SPDX-License-Identifier: Apache-2.0

#include "revsum/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "revsum/error.hpp"
#include "revsum/io.hpp"
#include "revsum/text.hpp"

namespace revsum::eval {

ScoreTriple ScoreTriple::from_pr(double precision, double recall) {
  const double sum = precision + recall;
  return {precision, recall, sum > 0.0 ? 2.0 * precision * recall / sum : 0.0};
}

std::vector<std::string> tokenize(std::string_view text) { return text::tokenize(text); }

ScoreTriple rouge1_tokens(const std::vector<std::string>& candidate,
                          const std::vector<std::string>& reference) {
  if (candidate.empty() && reference.empty()) return {1.0, 1.0, 1.0};
  if (candidate.empty() || reference.empty()) return {0.0, 0.0, 0.0};
  std::unordered_map<std::string_view, std::size_t> ref_counts;
  for (const auto& t : reference) ++ref_counts[t];
  std::size_t overlap = 0;
  for (const auto& t : candidate) {
    const auto it = ref_counts.find(t);
    if (it != ref_counts.end() && it->second > 0) {
      --it->second;
      ++overlap;
    }
  }
  return ScoreTriple::from_pr(static_cast<double>(overlap) / static_cast<double>(candidate.size()),
                              static_cast<double>(overlap) / static_cast<double>(reference.size()));
}

ScoreTriple rouge1(std::string_view candidate, std::string_view reference) {
  return rouge1_tokens(tokenize(candidate), tokenize(reference));
}

StaticEmbedder::StaticEmbedder(std::map<std::string, std::vector<double>> table) {
  for (auto& [tok, vec] : table) {
    if (dim_ == 0) dim_ = vec.size();
    if (vec.size() != dim_) throw ValidationError("inconsistent vector length for '" + tok + "'");
    table_.emplace(tok, std::move(vec));
  }
}

StaticEmbedder StaticEmbedder::parse(std::string_view content) {
  std::map<std::string, std::vector<double>> table;
  std::size_t line_no = 0;
  for (const auto& line : text::split(content, "\n")) {
    ++line_no;
    const auto trimmed = text::trim(line);
    if (trimmed.empty()) continue;
    std::vector<std::string> fields;
    for (auto& f : text::split(trimmed, " ")) {
      if (!f.empty()) fields.push_back(std::move(f));
    }
    if (line_no == 1 && fields.size() == 2 && text::parse_int(fields[0]) &&
        text::parse_int(fields[1])) {
      continue;
    }
    if (fields.size() < 2) {
      throw ValidationError("embedding line " + std::to_string(line_no) + " has no vector");
    }
    std::vector<double> vec;
    for (std::size_t i = 1; i < fields.size(); ++i) {
      const auto v = text::parse_double(fields[i]);
      if (!v) {
        throw ValidationError("embedding line " + std::to_string(line_no) + ": bad number '" +
                              fields[i] + "'");
      }
      vec.push_back(*v);
    }
    table[text::to_lower_ascii(fields[0])] = std::move(vec);
  }
  return StaticEmbedder(std::move(table));
}

StaticEmbedder StaticEmbedder::load(const std::filesystem::path& path) {
  return parse(io::read_file(path));
}

std::vector<std::vector<double>> StaticEmbedder::embed(const std::vector<std::string>& tokens) const {
  std::vector<std::vector<double>> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    const auto it = table_.find(t);
    out.push_back(it == table_.end() ? std::vector<double>(dim_, 0.0) : it->second);
  }
  return out;
}

RemoteEmbedder::RemoteEmbedder(http::ApiClient& client, std::string model, std::string path)
    : client_(client), model_(std::move(model)), path_(std::move(path)) {}

std::size_t RemoteEmbedder::dim() const {
  std::lock_guard lock(mu_);
  return dim_;
}

std::vector<std::vector<double>> RemoteEmbedder::embed(const std::vector<std::string>& tokens) const {
  std::vector<std::string> missing;
  {
    std::lock_guard lock(mu_);
    std::set<std::string> seen;
    for (const auto& t : tokens) {
      if (!cache_.contains(t) && seen.insert(t).second) missing.push_back(t);
    }
  }
  if (!missing.empty()) {
    const auto reply = client_.post_json(path_, {{"input", missing}, {"model", model_}});
    const auto& data = reply.at("data");
    if (!data.is_array() || data.size() != missing.size()) {
      throw ValidationError("embedding reply has the wrong number of vectors");
    }
    std::lock_guard lock(mu_);
    for (std::size_t i = 0; i < missing.size(); ++i) {
      auto vec = data[i].at("embedding").get<std::vector<double>>();
      if (dim_ == 0) dim_ = vec.size();
      if (vec.size() != dim_) throw ValidationError("embedding dimension changed between calls");
      cache_[missing[i]] = std::move(vec);
    }
  }
  std::lock_guard lock(mu_);
  std::vector<std::vector<double>> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(cache_.at(t));
  return out;
}

double IdfWeights::weight(const std::string& token) const {
  const auto it = weights.find(token);
  return it == weights.end() ? default_weight : it->second;
}

IdfWeights IdfWeights::from_references(const std::vector<std::string>& references) {
  std::unordered_map<std::string, std::size_t> df;
  for (const auto& r : references) {
    auto toks = tokenize(r);
    std::sort(toks.begin(), toks.end());
    toks.erase(std::unique(toks.begin(), toks.end()), toks.end());
    for (auto& t : toks) ++df[std::move(t)];
  }
  const double m = static_cast<double>(references.size());
  IdfWeights w;
  w.default_weight = std::log(m + 1.0);
  for (const auto& [t, n] : df) w.weights[t] = std::log((m + 1.0) / (static_cast<double>(n) + 1.0));
  return w;
}

namespace {

double weighted_mean(const std::vector<double>& sims, const std::vector<std::string>& tokens,
                     const IdfWeights* idf) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < sims.size(); ++i) {
    const double s = std::clamp(sims[i], 0.0, 1.0);
    const double w = idf ? idf->weight(tokens[i]) : 1.0;
    num += w * s;
    den += w;
  }
  return den > 0.0 ? num / den : 0.0;
}

EmbedScore score_vectors(const std::vector<std::string>& cand_tokens,
                         const std::vector<std::string>& ref_tokens,
                         const std::vector<std::vector<double>>& cand,
                         const std::vector<std::vector<double>>& ref, const IdfWeights* idf) {
  EmbedScore out;
  if (cand_tokens.empty() || ref_tokens.empty()) {
    out.empty = true;
    const double v = cand_tokens.empty() && ref_tokens.empty() ? 1.0 : 0.0;
    out.score = {v, v, v};
    return out;
  }
  const auto maxima = kernels::greedy_cosine_maxima(cand, ref);
  out.score = ScoreTriple::from_pr(weighted_mean(maxima.row_max, cand_tokens, idf),
                                   weighted_mean(maxima.col_max, ref_tokens, idf));
  return out;
}

}  // namespace

EmbedScore embed_score(std::string_view candidate, std::string_view reference,
                       const Embedder& embedder, const IdfWeights* idf) {
  const auto ct = tokenize(candidate);
  const auto rt = tokenize(reference);
  const auto cv = embedder.embed(ct);
  const auto rv = embedder.embed(rt);
  for (const auto* vs : {&cv, &rv}) {
    for (const auto& v : *vs) {
      if (v.size() != embedder.dim()) throw ValidationError("embedder returned a wrong-size vector");
    }
  }
  return score_vectors(ct, rt, cv, rv, idf);
}

std::vector<PairScore> score_pairs(const std::vector<Pair>& pairs, const Embedder& embedder,
                                   const IdfWeights* idf, kernels::Exec exec) {
  const auto n = pairs.size();
  std::vector<std::vector<std::string>> cand_tokens(n);
  std::vector<std::vector<std::string>> ref_tokens(n);
  std::set<std::string> vocab_set;
  for (std::size_t i = 0; i < n; ++i) {
    cand_tokens[i] = tokenize(pairs[i].candidate);
    ref_tokens[i] = tokenize(pairs[i].reference);
    vocab_set.insert(cand_tokens[i].begin(), cand_tokens[i].end());
    vocab_set.insert(ref_tokens[i].begin(), ref_tokens[i].end());
  }
  const std::vector<std::string> vocab(vocab_set.begin(), vocab_set.end());
  const auto vectors = embedder.embed(vocab);
  std::unordered_map<std::string_view, std::size_t> index;
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    if (vectors[i].size() != embedder.dim()) {
      throw ValidationError("embedder returned a wrong-size vector");
    }
    index.emplace(vocab[i], i);
  }

  std::vector<PairScore> out(n);
  const auto score_one = [&](std::size_t i) {
    std::vector<std::vector<double>> cv;
    std::vector<std::vector<double>> rv;
    cv.reserve(cand_tokens[i].size());
    rv.reserve(ref_tokens[i].size());
    for (const auto& t : cand_tokens[i]) cv.push_back(vectors[index.at(t)]);
    for (const auto& t : ref_tokens[i]) rv.push_back(vectors[index.at(t)]);
    out[i].rouge = rouge1_tokens(cand_tokens[i], ref_tokens[i]);
    out[i].embed = score_vectors(cand_tokens[i], ref_tokens[i], cv, rv, idf);
  };
  if (exec == kernels::Exec::Parallel) {
#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
      score_one(static_cast<std::size_t>(i));
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) score_one(i);
  }
  return out;
}

ScoreTriple mean(const std::vector<ScoreTriple>& scores) {
  if (scores.empty()) return {};
  ScoreTriple m;
  for (const auto& s : scores) {
    m.precision += s.precision;
    m.recall += s.recall;
    m.f1 += s.f1;
  }
  const auto n = static_cast<double>(scores.size());
  m.precision /= n;
  m.recall /= n;
  m.f1 /= n;
  return m;
}

std::string SweepReport::table() const {
  std::vector<std::vector<std::string>> rows_out;
  for (const auto& r : rows) {
    rows_out.push_back({std::to_string(r.train_size), r.model,
                        text::format_double(r.rouge1.precision),
                        text::format_double(r.rouge1.recall), text::format_double(r.rouge1.f1),
                        text::format_double(r.embed.precision),
                        text::format_double(r.embed.recall), text::format_double(r.embed.f1),
                        std::to_string(r.n_eval), std::to_string(r.n_failed)});
  }
  return io::format_tsv({"train_size", "model", "rouge1_p", "rouge1_r", "rouge1_f1", "embed_p",
                         "embed_r", "embed_f1", "n_eval", "n_failed"},
                        rows_out);
}

std::string SweepReport::plot_data() const {
  std::string out = "# train_size rouge1_f1 embed_f1\n";
  for (const auto& r : rows) {
    out += std::to_string(r.train_size) + " " + text::format_double(r.rouge1.f1) + " " +
           text::format_double(r.embed.f1) + "\n";
  }
  return out;
}

void SweepReport::write(const std::filesystem::path& table_path,
                        const std::filesystem::path& plot_path) const {
  io::write_file(table_path, table());
  io::write_file(plot_path, plot_data());
}

}  // namespace revsum::eval
