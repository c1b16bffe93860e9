// Copyright 2026 The revsum Authors
// SPDX-License-Identifier: Apache-2.0

#include "revsum/sweep.hpp"

#include <algorithm>
#include <set>

#include "revsum/error.hpp"

namespace revsum::eval {

std::map<std::size_t, std::filesystem::path> prepare_size_datasets(
    const std::filesystem::path& jsonl, const std::vector<std::size_t>& sizes,
    const std::filesystem::path& out_dir) {
  const auto examples = prompting::read_jsonl(jsonl);
  std::map<std::size_t, std::filesystem::path> out;
  for (const auto n : sizes) {
    if (n == 0 || n > examples.size()) {
      throw ArgumentError("train size " + std::to_string(n) + " not in 1.." +
                          std::to_string(examples.size()));
    }
    const auto path = out_dir / ("train-" + std::to_string(n) + ".jsonl");
    prompting::write_jsonl(path, std::span(examples.data(), n));
    out.emplace(n, path);
  }
  return out;
}

SweepReport size_sweep(const std::vector<std::size_t>& sizes,
                       const std::map<std::size_t, std::string>& model_per_size,
                       const std::vector<EvalItem>& eval_set, inference::InferenceClient& client,
                       const Embedder& embedder, const SweepOptions& opts) {
  if (eval_set.empty()) throw ArgumentError("the evaluation set is empty");
  const std::set<std::size_t> ordered(sizes.begin(), sizes.end());
  if (ordered.contains(opts.mandatory_size) && !model_per_size.contains(opts.mandatory_size)) {
    throw ArgumentError("no model for the mandatory train size " + std::to_string(opts.mandatory_size));
  }

  std::vector<ProductRow> rows;
  rows.reserve(eval_set.size());
  for (const auto& item : eval_set) rows.push_back(item.row);

  SweepReport report;
  for (const auto n : ordered) {
    const auto it = model_per_size.find(n);
    if (it == model_per_size.end()) {
      report.warnings.push_back("no model for train size " + std::to_string(n) + "; row skipped");
      continue;
    }
    const auto results = client.summarize_batch(it->second, rows, opts.summarize);
    std::vector<Pair> pairs;
    SweepRow row;
    row.train_size = n;
    row.model = it->second;
    for (std::size_t i = 0; i < results.size(); ++i) {
      if (!results[i].ok()) {
        ++row.n_failed;
        continue;
      }
      pairs.push_back({prompting::content_text(*results[i].annotation),
                       prompting::content_text(eval_set[i].reference)});
    }
    row.n_eval = pairs.size();
    const auto scores = score_pairs(pairs, embedder, opts.idf);
    std::vector<ScoreTriple> rouge;
    std::vector<ScoreTriple> embed;
    for (const auto& s : scores) {
      rouge.push_back(s.rouge);
      embed.push_back(s.embed.score);
    }
    row.rouge1 = mean(rouge);
    row.embed = mean(embed);
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace revsum::eval
