// Copyright 2026 The revsum Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "revsum/dataset.hpp"
#include "revsum/evaluation.hpp"
#include "revsum/inference.hpp"
#include "revsum/prompting.hpp"

namespace revsum::eval {

/// Writes `<out_dir>/train-<n>.jsonl` holding the first n examples of
/// `jsonl` for each n. Sizes larger than the source are an ArgumentError.
std::map<std::size_t, std::filesystem::path> prepare_size_datasets(
    const std::filesystem::path& jsonl, const std::vector<std::size_t>& sizes,
    const std::filesystem::path& out_dir);

struct EvalItem {
  ProductRow row;
  prompting::Annotation reference;
};

struct SweepOptions {
  inference::SummarizeOptions summarize;
  const IdfWeights* idf = nullptr;
  std::size_t mandatory_size = kMandatorySweepSize;
};

/// Summarizes every eval row with the model trained at each size and
/// averages both metrics over the rows that produced a summary. A size
/// without a model is skipped with a warning, except the mandatory size,
/// which is an ArgumentError when it is requested but has no model.
SweepReport size_sweep(const std::vector<std::size_t>& sizes,
                       const std::map<std::size_t, std::string>& model_per_size,
                       const std::vector<EvalItem>& eval_set, inference::InferenceClient& client,
                       const Embedder& embedder, const SweepOptions& opts = {});

}  // namespace revsum::eval
