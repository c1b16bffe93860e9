// Copyright 2026 The revsum Authors
// SPDX-License-Identifier: Apache-2.0

#include "revsum/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <ostream>
#include <set>

#include "revsum/dataset.hpp"
#include "revsum/error.hpp"
#include "revsum/evaluation.hpp"
#include "revsum/inference.hpp"
#include "revsum/kmeans.hpp"
#include "revsum/moderation.hpp"
#include "revsum/prompting.hpp"
#include "revsum/text.hpp"
#include "revsum/tfidf.hpp"

namespace revsum::pipeline {

namespace fs = std::filesystem;
using http::Json;

namespace {

template <class T>
T parse_number(std::string_view key, std::string_view value) {
  if constexpr (std::is_floating_point_v<T>) {
    const auto v = text::parse_double(value);
    if (!v) throw ArgumentError("'" + std::string(key) + "' expects a number, got '" + std::string(value) + "'");
    return static_cast<T>(*v);
  } else {
    const auto v = text::parse_int(value);
    if (!v || (std::is_unsigned_v<T> && *v < 0)) {
      throw ArgumentError("'" + std::string(key) + "' expects an integer, got '" + std::string(value) + "'");
    }
    return static_cast<T>(*v);
  }
}

bool parse_bool(std::string_view key, std::string_view value) {
  const auto v = text::to_lower_ascii(value);
  if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
  if (v == "false" || v == "no" || v == "off" || v == "0") return false;
  throw ArgumentError("'" + std::string(key) + "' expects a boolean, got '" + std::string(value) + "'");
}

std::vector<std::size_t> parse_sizes(std::string_view value) {
  std::vector<std::size_t> out;
  for (const auto& part : text::split(value, ",")) {
    const auto t = text::trim(part);
    if (t.empty()) continue;
    out.push_back(parse_number<std::size_t>("sweep_sizes", t));
  }
  return out;
}

std::string join_sizes(const std::vector<std::size_t>& sizes) {
  std::string out;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(sizes[i]);
  }
  return out;
}

const std::set<std::string_view>& path_keys() {
  static const std::set<std::string_view> keys = {"work_dir",   "input",      "lexicon",
                                                  "annotations", "infer_rows", "references",
                                                  "embeddings"};
  return keys;
}

}  // namespace

const std::vector<std::string>& PipelineConfig::keys() {
  static const std::vector<std::string> k = [] {
    std::vector<std::string> out;
    for (const auto& [key, value] : PipelineConfig{}.entries()) out.push_back(key);
    return out;
  }();
  return k;
}

void PipelineConfig::set(std::string_view key, std::string_view value) {
  const std::string k(key);
  const std::string v(value);
  if (k == "work_dir") work_dir = v;
  else if (k == "input") input = v;
  else if (k == "format") format = io::parse_format(v);
  else if (k == "col_id") columns.id = v;
  else if (k == "col_category") columns.category = v;
  else if (k == "col_body") columns.body = v;
  else if (k == "col_rating") columns.rating = v;
  else if (k == "min_len") min_len = parse_number<std::size_t>(k, v);
  else if (k == "k") this->k = parse_number<std::size_t>(k, v);
  else if (k == "group_size") group_size = parse_number<std::size_t>(k, v);
  else if (k == "seed") seed = parse_number<std::uint64_t>(k, v);
  else if (k == "max_iter") max_iter = parse_number<int>(k, v);
  else if (k == "tol") tol = parse_number<double>(k, v);
  else if (k == "n_init") n_init = parse_number<int>(k, v);
  else if (k == "thresh") thresh = parse_number<double>(k, v);
  else if (k == "classifier") {
    if (v != "local" && v != "remote") throw ArgumentError("classifier must be 'local' or 'remote'");
    classifier = v;
  } else if (k == "lexicon") lexicon = v;
  else if (k == "classify_path") classify_path = v;
  else if (k == "annotations") annotations = v;
  else if (k == "prompt_prefix") prompt_prefix = io::unescape_tsv(v);
  else if (k == "engine") hyperparams.engine = v;
  else if (k == "batch_size") hyperparams.batch_size = parse_number<int>(k, v);
  else if (k == "n_epochs") hyperparams.n_epochs = parse_number<int>(k, v);
  else if (k == "learning_rate") hyperparams.learning_rate = parse_number<double>(k, v);
  else if (k == "use_padding") hyperparams.use_padding = parse_bool(k, v);
  else if (k == "poll_interval_ms") poll_interval = std::chrono::milliseconds(parse_number<long long>(k, v));
  else if (k == "poll_timeout_ms") poll_timeout = std::chrono::milliseconds(parse_number<long long>(k, v));
  else if (k == "model") model = v;
  else if (k == "infer_rows") infer_rows = v;
  else if (k == "max_tokens") max_tokens = parse_number<int>(k, v);
  else if (k == "temperature") temperature = parse_number<double>(k, v);
  else if (k == "references") references = v;
  else if (k == "embeddings") embeddings = v;
  else if (k == "embedding_model") embedding_model = v;
  else if (k == "idf") idf = parse_bool(k, v);
  else if (k == "sweep_sizes") sweep_sizes = parse_sizes(v);
  else if (k == "api_url") endpoint.base_url = v;
  else if (k == "api_prefix") endpoint.prefix = v;
  else if (k == "timeout_ms") endpoint.timeout = std::chrono::milliseconds(parse_number<long long>(k, v));
  else if (k == "max_attempts") endpoint.retry.max_attempts = parse_number<int>(k, v);
  else if (k == "retry_base_ms") endpoint.retry.base_delay = std::chrono::milliseconds(parse_number<long long>(k, v));
  else if (k == "retry_max_ms") endpoint.retry.max_delay = std::chrono::milliseconds(parse_number<long long>(k, v));
  else if (k == "max_in_flight") endpoint.max_in_flight = parse_number<std::size_t>(k, v);
  else throw ArgumentError("unknown config key '" + k + "'");
}

void PipelineConfig::merge_file_content(std::string_view content, const fs::path& base_dir) {
  std::size_t line_no = 0;
  for (const auto& raw : text::split(content, "\n")) {
    ++line_no;
    auto line = text::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ArgumentError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const auto key = text::trim(line.substr(0, eq));
    auto value = text::trim(line.substr(eq + 1));
    const auto bad = [&] {
      return ArgumentError("config line " + std::to_string(line_no) + ": malformed value");
    };
    if (!value.empty() && value.front() == '"') {
      const auto close = value.find('"', 1);
      if (close == std::string_view::npos) throw bad();
      const auto rest = text::trim(value.substr(close + 1));
      if (!rest.empty() && rest.front() != '#') throw bad();
      value = value.substr(1, close - 1);
    } else {
      // " # ..." ends the value; a '#' inside a word does not
      for (std::size_t i = 1; i < value.size(); ++i) {
        if (value[i] == '#' && (value[i - 1] == ' ' || value[i - 1] == '\t')) {
          value = text::trim(value.substr(0, i));
          break;
        }
      }
    }
    if (!base_dir.empty() && !value.empty() && path_keys().contains(key) &&
        fs::path(value).is_relative()) {
      set(key, (base_dir / fs::path(value)).lexically_normal().string());
    } else {
      set(key, value);
    }
  }
}

void PipelineConfig::merge_file(const fs::path& path) {
  merge_file_content(io::read_file(path), path.parent_path());
}

std::vector<std::pair<std::string, std::string>> PipelineConfig::entries() const {
  const auto d = [](double v) { return text::format_double(v); };
  return {
      {"work_dir", work_dir.string()},
      {"input", input.string()},
      {"format", format == io::Format::Tsv ? "tsv" : "csv"},
      {"col_id", columns.id},
      {"col_category", columns.category},
      {"col_body", columns.body},
      {"col_rating", columns.rating},
      {"min_len", std::to_string(min_len)},
      {"k", std::to_string(k)},
      {"group_size", std::to_string(group_size)},
      {"seed", std::to_string(seed)},
      {"max_iter", std::to_string(max_iter)},
      {"tol", d(tol)},
      {"n_init", std::to_string(n_init)},
      {"thresh", d(thresh)},
      {"classifier", classifier},
      {"lexicon", lexicon.string()},
      {"classify_path", classify_path},
      {"annotations", annotations.string()},
      {"prompt_prefix", io::escape_tsv(prompt_prefix)},
      {"engine", hyperparams.engine},
      {"batch_size", std::to_string(hyperparams.batch_size)},
      {"n_epochs", std::to_string(hyperparams.n_epochs)},
      {"learning_rate", d(hyperparams.learning_rate)},
      {"use_padding", hyperparams.use_padding ? "true" : "false"},
      {"poll_interval_ms", std::to_string(poll_interval.count())},
      {"poll_timeout_ms", std::to_string(poll_timeout.count())},
      {"model", model},
      {"infer_rows", infer_rows.string()},
      {"max_tokens", std::to_string(max_tokens)},
      {"temperature", d(temperature)},
      {"references", references.string()},
      {"embeddings", embeddings.string()},
      {"embedding_model", embedding_model},
      {"idf", idf ? "true" : "false"},
      {"sweep_sizes", join_sizes(sweep_sizes)},
      {"api_url", endpoint.base_url},
      {"api_prefix", endpoint.prefix},
      {"timeout_ms", std::to_string(endpoint.timeout.count())},
      {"max_attempts", std::to_string(endpoint.retry.max_attempts)},
      {"retry_base_ms", std::to_string(endpoint.retry.base_delay.count())},
      {"retry_max_ms", std::to_string(endpoint.retry.max_delay.count())},
      {"max_in_flight", std::to_string(endpoint.max_in_flight)},
  };
}

const std::vector<Stage>& all_stages() {
  static const std::vector<Stage> s = {Stage::Ingest, Stage::Cluster,  Stage::Moderate,
                                       Stage::Prompt, Stage::Upload,   Stage::Finetune,
                                       Stage::Infer,  Stage::Eval};
  return s;
}

std::string_view stage_name(Stage s) {
  switch (s) {
    case Stage::Ingest: return "ingest";
    case Stage::Cluster: return "cluster";
    case Stage::Moderate: return "moderate";
    case Stage::Prompt: return "prompt";
    case Stage::Upload: return "upload";
    case Stage::Finetune: return "finetune";
    case Stage::Infer: return "infer";
    case Stage::Eval: return "eval";
  }
  return "?";
}

Stage parse_stage(std::string_view name) {
  for (const auto s : all_stages()) {
    if (stage_name(s) == name) return s;
  }
  throw ArgumentError("unknown stage '" + std::string(name) + "'");
}

std::vector<Stage> parse_stages(std::string_view list) {
  const auto trimmed = text::trim(list);
  if (trimmed.empty() || trimmed == "all") return all_stages();
  std::vector<Stage> out;
  for (const auto& part : text::split(trimmed, ",")) {
    const auto name = text::trim(part);
    if (name.empty()) continue;
    const auto s = parse_stage(name);
    if (!out.empty() && static_cast<int>(s) <= static_cast<int>(out.back())) {
      throw ArgumentError("stage '" + std::string(name) + "' is listed out of order or twice; order is "
                          "ingest,cluster,moderate,prompt,upload,finetune,infer,eval");
    }
    out.push_back(s);
  }
  if (out.empty()) throw ArgumentError("no stages given");
  return out;
}

Json StageReport::to_json() const {
  Json j = {{"stage", stage},
            {"status", status},
            {"counts", counts},
            {"duration_ms", duration_ms},
            {"input_hash", input_hash},
            {"outputs", outputs}};
  if (!error.empty()) j["error"] = error;
  if (!warnings.empty()) j["warnings"] = warnings;
  return j;
}

StageReport StageReport::from_json(const Json& j) {
  StageReport r;
  r.stage = j.at("stage").get<std::string>();
  r.status = j.at("status").get<std::string>();
  r.counts = j.value("counts", std::map<std::string, long long>{});
  r.duration_ms = j.value("duration_ms", 0LL);
  r.input_hash = j.value("input_hash", std::string{});
  r.outputs = j.value("outputs", std::map<std::string, std::string>{});
  r.error = j.value("error", std::string{});
  r.warnings = j.value("warnings", std::vector<std::string>{});
  return r;
}

namespace {

class StageFailure : public Error {
 public:
  using Error::Error;
};

bool usable(const StageReport& r) {
  return r.status == kStatusOk || r.status == kStatusUpToDate;
}

std::vector<Stage> upstream_of(Stage s, const PipelineConfig& cfg) {
  switch (s) {
    case Stage::Ingest: return {};
    case Stage::Cluster: return {Stage::Ingest};
    case Stage::Moderate: return {Stage::Cluster};
    case Stage::Prompt: return {Stage::Moderate};
    case Stage::Upload: return {Stage::Prompt};
    case Stage::Finetune: return {Stage::Upload};
    case Stage::Infer: {
      std::vector<Stage> up;
      if (cfg.infer_rows.empty()) up.push_back(Stage::Moderate);
      if (cfg.model.empty()) up.push_back(Stage::Finetune);
      return up;
    }
    case Stage::Eval: return {Stage::Infer};
  }
  return {};
}

// External files each stage reads, with the config key that names them.
std::vector<std::pair<std::string, fs::path>> external_inputs(Stage s, const PipelineConfig& cfg) {
  switch (s) {
    case Stage::Ingest: return {{"input", cfg.input}};
    case Stage::Moderate:
      if (cfg.classifier == "local") return {{"lexicon", cfg.lexicon}};
      return {};
    case Stage::Prompt: return {{"annotations", cfg.annotations}};
    case Stage::Infer:
      if (!cfg.infer_rows.empty()) return {{"infer_rows", cfg.infer_rows}};
      return {};
    case Stage::Eval: {
      std::vector<std::pair<std::string, fs::path>> out;
      out.emplace_back(cfg.references.empty() ? "annotations" : "references",
                       cfg.references.empty() ? cfg.annotations : cfg.references);
      if (!cfg.embeddings.empty()) out.emplace_back("embeddings", cfg.embeddings);
      return out;
    }
    default: return {};
  }
}

std::string canonical_params(Stage s, const PipelineConfig& c) {
  const auto d = [](double v) { return text::format_double(v); };
  std::string p = "stage=" + std::string(stage_name(s)) + "\n";
  const auto add = [&p](std::string_view k, const std::string& v) {
    p += std::string(k) + "=" + v + "\n";
  };
  switch (s) {
    case Stage::Ingest:
      add("format", c.format == io::Format::Tsv ? "tsv" : "csv");
      add("columns", c.columns.id + "," + c.columns.category + "," + c.columns.body + "," +
                         c.columns.rating);
      add("min_len", std::to_string(c.min_len));
      break;
    case Stage::Cluster:
      add("k", std::to_string(c.k));
      add("group_size", std::to_string(c.group_size));
      add("seed", std::to_string(c.seed));
      add("max_iter", std::to_string(c.max_iter));
      add("tol", d(c.tol));
      add("n_init", std::to_string(c.n_init));
      break;
    case Stage::Moderate:
      add("thresh", d(c.thresh));
      add("classifier", c.classifier);
      if (c.classifier == "remote") {
        add("url", c.endpoint.base_url + c.endpoint.prefix + c.classify_path);
      }
      break;
    case Stage::Prompt:
      add("prompt_prefix", io::escape_tsv(c.prompt_prefix));
      break;
    case Stage::Upload:
      add("url", c.endpoint.base_url + c.endpoint.prefix);
      break;
    case Stage::Finetune:
      add("url", c.endpoint.base_url + c.endpoint.prefix);
      add("hyperparams", c.hyperparams.request_body("").dump());
      break;
    case Stage::Infer:
      add("url", c.endpoint.base_url + c.endpoint.prefix);
      add("model", c.model);
      add("max_tokens", std::to_string(c.max_tokens));
      add("temperature", d(c.temperature));
      add("prompt_prefix", io::escape_tsv(c.prompt_prefix));
      break;
    case Stage::Eval:
      add("idf", c.idf ? "true" : "false");
      if (c.embeddings.empty()) {
        add("embedder", c.endpoint.base_url + c.endpoint.prefix + "#" + c.embedding_model);
      }
      break;
  }
  return p;
}

void log_line(std::ostream* log, const std::string& s) {
  if (log) *log << s << '\n' << std::flush;
}

http::Json read_json_file(const fs::path& path) {
  const auto content = io::read_file(path);
  try {
    return Json::parse(content);
  } catch (const Json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what(), content);
  }
}

}  // namespace

struct Pipeline::Plan {
  std::vector<fs::path> inputs;
  std::string params;

  std::string input_hash() const {
    std::string material = params;
    for (const auto& p : inputs) {
      material += "input " + p.filename().generic_string() + " " + io::sha256_file(p) + "\n";
    }
    return io::sha256_hex(material);
  }
};

Pipeline::Pipeline(PipelineConfig config) : config_(std::move(config)) {}

fs::path Pipeline::stage_dir(Stage s) const { return config_.work_dir / std::string(stage_name(s)); }

fs::path Pipeline::report_path(Stage s) const { return stage_dir(s) / std::string(artifacts::kReport); }

std::optional<StageReport> Pipeline::load_report(Stage s) const {
  const auto path = report_path(s);
  if (!fs::exists(path)) return std::nullopt;
  try {
    return StageReport::from_json(read_json_file(path));
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

std::optional<std::string> Pipeline::check_dependencies(const std::vector<Stage>& stages) const {
  std::set<Stage> requested(stages.begin(), stages.end());
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const auto s = stages[i];
    if (i > 0 && static_cast<int>(s) <= static_cast<int>(stages[i - 1])) {
      return "stage '" + std::string(stage_name(s)) + "' is out of order";
    }
    for (const auto up : upstream_of(s, config_)) {
      if (requested.contains(up)) continue;
      const auto report = load_report(up);
      if (!report || !usable(*report)) {
        return "stage '" + std::string(stage_name(s)) + "' needs the artifacts of '" +
               std::string(stage_name(up)) + "', which has not completed in " +
               config_.work_dir.string();
      }
      for (const auto& [name, sha] : report->outputs) {
        if (!fs::exists(stage_dir(up) / name)) {
          return "stage '" + std::string(stage_name(s)) + "' needs " +
                 (stage_dir(up) / name).string() + ", which is missing";
        }
      }
    }
    for (const auto& [key, path] : external_inputs(s, config_)) {
      if (path.empty()) {
        return "stage '" + std::string(stage_name(s)) + "' needs config key '" + key + "'";
      }
      if (!fs::exists(path)) {
        return "stage '" + std::string(stage_name(s)) + "' input " + path.string() +
               " (" + key + ") does not exist";
      }
    }
  }
  return std::nullopt;
}

Pipeline::Plan Pipeline::plan(Stage s) const {
  Plan p;
  p.params = canonical_params(s, config_);
  const auto upstream_file = [&](Stage up, std::string_view name) {
    return stage_dir(up) / std::string(name);
  };
  switch (s) {
    case Stage::Ingest:
      p.inputs.push_back(config_.input);
      break;
    case Stage::Cluster: {
      const auto report = load_report(Stage::Ingest);
      if (!report) throw StageFailure("ingest report missing");
      const auto prefix = std::string(artifacts::kCategoriesDir) + "/";
      for (const auto& [name, sha] : report->outputs) {
        if (name.starts_with(prefix)) p.inputs.push_back(stage_dir(Stage::Ingest) / name);
      }
      break;
    }
    case Stage::Moderate:
      p.inputs.push_back(upstream_file(Stage::Cluster, artifacts::kDataset));
      if (config_.classifier == "local") p.inputs.push_back(config_.lexicon);
      break;
    case Stage::Prompt:
      p.inputs.push_back(upstream_file(Stage::Moderate, artifacts::kKept));
      p.inputs.push_back(config_.annotations);
      break;
    case Stage::Upload:
      p.inputs.push_back(upstream_file(Stage::Prompt, artifacts::kJsonl));
      break;
    case Stage::Finetune:
      p.inputs.push_back(upstream_file(Stage::Upload, artifacts::kUpload));
      break;
    case Stage::Infer:
      p.inputs.push_back(config_.infer_rows.empty() ? upstream_file(Stage::Moderate, artifacts::kKept)
                                                    : config_.infer_rows);
      if (config_.model.empty()) p.inputs.push_back(upstream_file(Stage::Finetune, artifacts::kJob));
      break;
    case Stage::Eval:
      p.inputs.push_back(upstream_file(Stage::Infer, artifacts::kResults));
      p.inputs.push_back(config_.references.empty() ? config_.annotations : config_.references);
      if (!config_.embeddings.empty()) p.inputs.push_back(config_.embeddings);
      break;
  }
  for (const auto& in : p.inputs) {
    if (!fs::exists(in)) throw StageFailure("input " + in.string() + " is missing");
  }
  return p;
}

namespace {

struct StageContext {
  const PipelineConfig& cfg;
  fs::path dir;
  std::function<fs::path(Stage, std::string_view)> upstream;
  StageReport& report;
  std::ostream* log;

  fs::path out(std::string_view name) const { return dir / std::string(name); }
  void record_output(std::string_view name) {
    report.outputs[std::string(name)] = io::sha256_file(out(name));
  }
  void warn(const std::string& w) {
    report.warnings.push_back(w);
    log_line(log, "  warning: " + w);
  }
};

void run_ingest(StageContext& ctx) {
  const auto& cfg = ctx.cfg;
  auto loaded = corpus::load_reviews(cfg.input, cfg.format, cfg.columns);
  const auto filtered = corpus::filter_by_length(loaded.reviews, cfg.min_len);
  const auto parts = corpus::partition_by_category(filtered);

  fs::remove_all(ctx.out(artifacts::kCategoriesDir));
  std::set<std::string> stems;
  for (const auto& [category, part] : parts) {
    const auto stem = corpus::category_file_stem(category);
    if (!stems.insert(stem).second) {
      throw StageFailure("categories collide on file name '" + stem + "'");
    }
    const auto name = std::string(artifacts::kCategoriesDir) + "/" + stem + ".tsv";
    corpus::write_category_file(ctx.out(name), part);
    ctx.record_output(name);
  }
  corpus::write_rejects(ctx.out(artifacts::kRejects), loaded.rejects);
  ctx.record_output(artifacts::kRejects);

  auto& c = ctx.report.counts;
  c["data_rows"] = static_cast<long long>(loaded.data_rows);
  c["loaded"] = static_cast<long long>(loaded.reviews.size());
  c["rejected"] = static_cast<long long>(loaded.rejects.size());
  c["too_short"] = static_cast<long long>(loaded.reviews.size() - filtered.size());
  c["kept"] = static_cast<long long>(filtered.size());
  c["categories"] = static_cast<long long>(parts.size());
  if (filtered.empty()) throw StageFailure("no reviews survived ingest");
}

void run_cluster(StageContext& ctx, const std::vector<fs::path>& inputs) {
  const auto& cfg = ctx.cfg;
  fs::remove_all(ctx.out("rows"));
  std::vector<fs::path> parts;
  long long reviews = 0;
  long long rows = 0;
  long long discarded = 0;
  for (const auto& in : inputs) {
    const auto part = corpus::read_category_file(in);
    if (part.reviews.empty()) continue;
    std::vector<std::string> bodies;
    bodies.reserve(part.reviews.size());
    for (const auto& r : part.reviews) bodies.push_back(r.body);
    reviews += static_cast<long long>(bodies.size());

    cluster::TfidfMatrix tfidf;
    try {
      tfidf = cluster::vectorize_tfidf(bodies);
    } catch (const VectorizationError& e) {
      ctx.warn("category '" + part.category + "': " + e.what() + "; all reviews discarded");
      discarded += static_cast<long long>(bodies.size());
      continue;
    }
    cluster::KMeansOptions opts;
    opts.k = cfg.k;
    if (opts.k > bodies.size()) {
      ctx.warn("category '" + part.category + "' has " + std::to_string(bodies.size()) +
               " reviews; k reduced from " + std::to_string(cfg.k));
      opts.k = bodies.size();
    }
    opts.seed = cfg.seed;
    opts.max_iter = cfg.max_iter;
    opts.tol = cfg.tol;
    opts.n_init = cfg.n_init;
    const auto model = cluster::kmeans_fit(tfidf.values, opts);
    const auto assembled =
        cluster::assemble_rows(model.assignments, bodies, part.category, cfg.group_size);
    rows += static_cast<long long>(assembled.rows.size());
    discarded += static_cast<long long>(assembled.discarded);

    const auto name = "rows/" + in.stem().string() + ".tsv";
    dataset::write_rows(ctx.out(name), assembled.rows, cfg.group_size);
    ctx.record_output(name);
    parts.push_back(ctx.out(name));
  }
  dataset::concat_datasets(parts, ctx.out(artifacts::kDataset), cfg.group_size);
  ctx.record_output(artifacts::kDataset);

  auto& c = ctx.report.counts;
  c["reviews"] = reviews;
  c["rows"] = rows;
  c["discarded"] = discarded;
  c["group_size"] = static_cast<long long>(cfg.group_size);
  if (rows == 0) throw StageFailure("clustering produced no rows of " + std::to_string(cfg.group_size));
}

std::unique_ptr<http::ApiClient> make_client(const PipelineConfig& cfg) {
  auto ep = cfg.endpoint;
  if (ep.token.empty()) ep.token = http::token_from_env();
  return std::make_unique<http::ApiClient>(ep);
}

void run_moderate(StageContext& ctx) {
  const auto& cfg = ctx.cfg;
  std::size_t group_size = 0;
  const auto rows = dataset::read_rows(ctx.upstream(Stage::Cluster, artifacts::kDataset), &group_size);
  std::unique_ptr<http::ApiClient> client;
  std::unique_ptr<moderation::SafetyClassifier> classifier;
  if (cfg.classifier == "remote") {
    client = make_client(cfg);
    classifier = std::make_unique<moderation::RemoteClassifier>(*client, cfg.classify_path);
  } else {
    classifier = std::make_unique<moderation::LexiconClassifier>(moderation::Lexicon::load(cfg.lexicon));
  }
  const auto result = moderation::filter_rows(rows, *classifier, cfg.thresh, cfg.endpoint.max_in_flight);
  dataset::write_rows(ctx.out(artifacts::kKept), result.kept, group_size);
  ctx.record_output(artifacts::kKept);
  moderation::write_audit(ctx.out(artifacts::kAudit), result.audit);
  ctx.record_output(artifacts::kAudit);

  auto& c = ctx.report.counts;
  c["rows"] = static_cast<long long>(rows.size());
  c["kept"] = static_cast<long long>(result.kept.size());
  c["dropped"] = static_cast<long long>(result.dropped.size());
  c["quarantined"] = static_cast<long long>(result.quarantined.size());
  c["audit_entries"] = static_cast<long long>(result.audit.size());
  if (!result.quarantined.empty()) {
    ctx.warn(std::to_string(result.quarantined.size()) + " rows quarantined after classifier errors");
  }
}

void run_prompt(StageContext& ctx) {
  const auto& cfg = ctx.cfg;
  std::size_t group_size = 0;
  const auto rows = dataset::read_rows(ctx.upstream(Stage::Moderate, artifacts::kKept), &group_size);
  const auto annotated = prompting::read_annotations(cfg.annotations);
  std::map<std::string, const prompting::Annotation*> by_id;
  for (const auto& a : annotated) {
    if (!by_id.emplace(a.row_id, &a.annotation).second) {
      throw StageFailure("annotation for row '" + a.row_id + "' appears twice");
    }
  }
  std::vector<prompting::TrainingExample> examples;
  std::set<std::string> used;
  for (const auto& row : rows) {
    const auto it = by_id.find(row.row_id);
    if (it == by_id.end()) continue;
    examples.push_back({prompting::build_prompt(row, group_size, cfg.prompt_prefix),
                        prompting::build_completion(*it->second)});
    used.insert(row.row_id);
  }
  const auto orphans = by_id.size() - used.size();
  if (orphans > 0) {
    ctx.warn(std::to_string(orphans) + " annotations refer to rows that are not in the moderated set");
  }
  prompting::write_jsonl(ctx.out(artifacts::kJsonl), examples);
  ctx.record_output(artifacts::kJsonl);
  const auto report = prompting::validate_jsonl(ctx.out(artifacts::kJsonl));

  auto& c = ctx.report.counts;
  c["rows"] = static_cast<long long>(rows.size());
  c["examples"] = static_cast<long long>(examples.size());
  c["unannotated"] = static_cast<long long>(rows.size() - examples.size());
  c["orphan_annotations"] = static_cast<long long>(orphans);
  c["validation_errors"] = static_cast<long long>(report.errors.size());
  c["validation_warnings"] = static_cast<long long>(report.warnings.size());
  for (const auto& w : report.warnings) ctx.warn("line " + std::to_string(w.line) + ": " + w.message);
  if (!report.ok()) throw StageFailure("generated JSONL failed validation: " + report.summary());
  if (examples.empty()) throw StageFailure("no moderated row has an annotation");
}

fs::path ledger_path(const PipelineConfig& cfg) { return cfg.work_dir / "ledger.jsonl"; }

void run_upload(StageContext& ctx) {
  const auto jsonl = ctx.upstream(Stage::Prompt, artifacts::kJsonl);
  auto client = make_client(ctx.cfg);
  finetune::FineTuneClient ft(*client, ledger_path(ctx.cfg));
  const auto file_id = ft.upload_file(jsonl);
  const Json out = {{"file_id", file_id},
                    {"sha256", io::sha256_file(jsonl)},
                    {"bytes", fs::file_size(jsonl)}};
  io::write_file(ctx.out(artifacts::kUpload), out.dump(2) + "\n");
  ctx.record_output(artifacts::kUpload);
  ctx.report.counts["bytes"] = static_cast<long long>(fs::file_size(jsonl));
  ctx.report.counts["examples"] = static_cast<long long>(prompting::read_jsonl(jsonl).size());
  ctx.report.counts["attempts"] = static_cast<long long>(client->attempts().size());
}

Json job_to_json(const finetune::FineTuneJob& job) {
  Json events = Json::array();
  for (const auto& e : job.events) {
    events.push_back({{"ts", e.ts}, {"status", finetune::to_string(e.status)}, {"detail", e.detail}});
  }
  return {{"file_id", job.file_id},
          {"job_id", job.job_id},
          {"status", finetune::to_string(job.status)},
          {"fine_tuned_model", job.fine_tuned_model ? Json(*job.fine_tuned_model) : Json(nullptr)},
          {"failure_reason", job.failure_reason ? Json(*job.failure_reason) : Json(nullptr)},
          {"timed_out", job.timed_out},
          {"hyperparams", job.hyperparams.request_body(job.file_id)},
          {"events", events}};
}

void run_finetune(StageContext& ctx, const std::string& input_hash) {
  const auto upload = read_json_file(ctx.upstream(Stage::Upload, artifacts::kUpload));
  const auto file_id = upload.at("file_id").get<std::string>();
  auto client = make_client(ctx.cfg);
  finetune::FineTuneClient ft(*client, ledger_path(ctx.cfg));
  const auto created =
      ft.create_finetune(file_id, ctx.cfg.hyperparams, "finetune-" + input_hash.substr(0, 32));
  log_line(ctx.log, "  job " + created.job_id + " created; polling");
  auto job = ft.poll_job(created.job_id, ctx.cfg.poll_interval, ctx.cfg.poll_timeout);
  job.hyperparams = ctx.cfg.hyperparams;
  if (job.file_id.empty()) job.file_id = file_id;
  io::write_file(ctx.out(artifacts::kJob), job_to_json(job).dump(2) + "\n");
  ctx.record_output(artifacts::kJob);
  ctx.report.counts["polls"] = static_cast<long long>(job.events.size());
  if (job.timed_out) {
    throw StageFailure("job " + job.job_id + " still " + finetune::to_string(job.status) +
                       " after the poll timeout; rerun to resume");
  }
  if (job.status != finetune::JobStatus::Succeeded) {
    throw StageFailure("job " + job.job_id + " ended " + finetune::to_string(job.status) +
                       (job.failure_reason ? ": " + *job.failure_reason : std::string{}));
  }
}

void run_infer(StageContext& ctx) {
  const auto& cfg = ctx.cfg;
  std::string model = cfg.model;
  if (model.empty()) {
    const auto job = read_json_file(ctx.upstream(Stage::Finetune, artifacts::kJob));
    if (!job.contains("fine_tuned_model") || !job["fine_tuned_model"].is_string()) {
      throw StageFailure("finetune stage produced no model");
    }
    model = job["fine_tuned_model"].get<std::string>();
  }
  const auto rows_path =
      cfg.infer_rows.empty() ? ctx.upstream(Stage::Moderate, artifacts::kKept) : cfg.infer_rows;
  std::size_t group_size = 0;
  const auto rows = dataset::read_rows(rows_path, &group_size);
  auto client = make_client(cfg);
  inference::InferenceClient infer(*client);
  inference::SummarizeOptions opts;
  opts.group_size = group_size;
  opts.max_tokens = cfg.max_tokens;
  opts.temperature = cfg.temperature;
  opts.prompt_prefix = cfg.prompt_prefix;
  const auto results = infer.summarize_batch(model, rows, opts);
  inference::write_results(ctx.out(artifacts::kResults), rows, results);
  ctx.record_output(artifacts::kResults);
  const auto ok = std::count_if(results.begin(), results.end(), [](const auto& r) { return r.ok(); });
  ctx.report.counts["rows"] = static_cast<long long>(rows.size());
  ctx.report.counts["ok"] = ok;
  ctx.report.counts["failed"] = static_cast<long long>(results.size()) - ok;
  if (ok < static_cast<long long>(results.size())) {
    ctx.warn(std::to_string(results.size() - static_cast<std::size_t>(ok)) + " summaries failed");
  }
}

void run_eval(StageContext& ctx) {
  const auto& cfg = ctx.cfg;
  const auto results = inference::read_results(ctx.upstream(Stage::Infer, artifacts::kResults));
  const auto refs = prompting::read_annotations(cfg.references.empty() ? cfg.annotations : cfg.references);
  std::map<std::string, const prompting::Annotation*> ref_by_id;
  for (const auto& r : refs) ref_by_id.emplace(r.row_id, &r.annotation);

  std::vector<eval::Pair> pairs;
  std::vector<std::string> ids;
  long long failed = 0;
  long long unreferenced = 0;
  for (const auto& stored : results) {
    const auto it = ref_by_id.find(stored.row_id);
    if (it == ref_by_id.end()) {
      ++unreferenced;
      continue;
    }
    if (!stored.result.ok()) {
      ++failed;
      continue;
    }
    pairs.push_back({prompting::content_text(*stored.result.annotation),
                     prompting::content_text(*it->second)});
    ids.push_back(stored.row_id);
  }
  if (pairs.empty()) throw StageFailure("no inference result has a reference annotation to score against");

  std::unique_ptr<http::ApiClient> client;
  std::unique_ptr<eval::Embedder> embedder;
  if (cfg.embeddings.empty()) {
    client = make_client(cfg);
    embedder = std::make_unique<eval::RemoteEmbedder>(*client, cfg.embedding_model);
  } else {
    embedder = std::make_unique<eval::StaticEmbedder>(eval::StaticEmbedder::load(cfg.embeddings));
  }
  std::optional<eval::IdfWeights> idf;
  if (cfg.idf) {
    std::vector<std::string> texts;
    for (const auto& p : pairs) texts.push_back(p.reference);
    idf = eval::IdfWeights::from_references(texts);
  }
  const auto scores = eval::score_pairs(pairs, *embedder, idf ? &*idf : nullptr);

  std::vector<std::vector<std::string>> table;
  std::vector<eval::ScoreTriple> rouge;
  std::vector<eval::ScoreTriple> embed;
  const auto d = [](double v) { return text::format_double(v); };
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto& s = scores[i];
    rouge.push_back(s.rouge);
    embed.push_back(s.embed.score);
    table.push_back({ids[i], d(s.rouge.precision), d(s.rouge.recall), d(s.rouge.f1),
                     d(s.embed.score.precision), d(s.embed.score.recall), d(s.embed.score.f1)});
  }
  io::write_file(ctx.out(artifacts::kScores),
                 io::format_tsv({"row_id", "rouge1_p", "rouge1_r", "rouge1_f1", "embed_p", "embed_r",
                                 "embed_f1"},
                                table));
  ctx.record_output(artifacts::kScores);
  const auto triple = [](const eval::ScoreTriple& t) {
    return Json{{"precision", t.precision}, {"recall", t.recall}, {"f1", t.f1}};
  };
  const Json summary = {{"n_eval", pairs.size()},
                        {"n_failed", failed},
                        {"rouge1", triple(eval::mean(rouge))},
                        {"embed", triple(eval::mean(embed))}};
  io::write_file(ctx.out(artifacts::kSummary), summary.dump(2) + "\n");
  ctx.record_output(artifacts::kSummary);
  ctx.report.counts["n_eval"] = static_cast<long long>(pairs.size());
  ctx.report.counts["n_failed"] = failed;
  ctx.report.counts["unreferenced"] = unreferenced;
}

}  // namespace

RunResult Pipeline::run(const std::vector<Stage>& stages, const RunOptions& opts) {
  RunResult result;
  if (const auto violation = check_dependencies(stages)) {
    result.exit_code = 2;
    result.error = "dependency error: " + *violation;
    return result;
  }
  try {
    config_.hyperparams.validate();
  } catch (const std::exception& e) {
    result.exit_code = 2;
    result.error = e.what();
    return result;
  }
  if (config_.group_size == 0) {
    result.exit_code = 2;
    result.error = "group_size must be >= 1";
    return result;
  }

  bool failed = false;
  for (const auto s : stages) {
    StageReport report;
    report.stage = std::string(stage_name(s));
    if (failed) {
      report.status = std::string(kStatusUpstreamFailed);
      log_line(opts.log, "[" + report.stage + "] " + report.status);
      result.reports.push_back(std::move(report));
      continue;
    }
    const auto start = std::chrono::steady_clock::now();
    const auto elapsed = [&start] {
      return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start)
          .count();
    };

    std::optional<Plan> p;
    try {
      p = plan(s);
      report.input_hash = p->input_hash();
    } catch (const std::exception& e) {
      if (!opts.dry_run) {
        report.status = std::string(kStatusFailed);
        report.error = e.what();
      }
    }

    const auto previous = load_report(s);
    bool up_to_date = false;
    if (p && previous && usable(*previous) && previous->input_hash == report.input_hash && !opts.force) {
      up_to_date = std::all_of(previous->outputs.begin(), previous->outputs.end(), [&](const auto& o) {
        const auto path = stage_dir(s) / o.first;
        return fs::exists(path) && io::sha256_file(path) == o.second;
      });
    }

    if (opts.dry_run) {
      report.status = std::string(kStatusDryRun) + (up_to_date ? ": up-to-date" : ": would run");
      log_line(opts.log, "[" + report.stage + "] " + report.status);
      result.reports.push_back(std::move(report));
      continue;
    }

    if (p && up_to_date) {
      report = *previous;
      report.status = std::string(kStatusUpToDate);
      report.duration_ms = elapsed();
      report.error.clear();
    } else if (p) {
      log_line(opts.log, "[" + report.stage + "] running");
      const auto dir = stage_dir(s);
      fs::create_directories(dir);
      fs::remove(report_path(s));
      StageContext ctx{config_, dir,
                       [this](Stage up, std::string_view name) { return stage_dir(up) / std::string(name); },
                       report, opts.log};
      try {
        switch (s) {
          case Stage::Ingest: run_ingest(ctx); break;
          case Stage::Cluster: run_cluster(ctx, p->inputs); break;
          case Stage::Moderate: run_moderate(ctx); break;
          case Stage::Prompt: run_prompt(ctx); break;
          case Stage::Upload: run_upload(ctx); break;
          case Stage::Finetune: run_finetune(ctx, report.input_hash); break;
          case Stage::Infer: run_infer(ctx); break;
          case Stage::Eval: run_eval(ctx); break;
        }
        report.status = std::string(kStatusOk);
      } catch (const std::exception& e) {
        report.status = std::string(kStatusFailed);
        report.error = e.what();
      }
      report.duration_ms = elapsed();
    }

    fs::create_directories(stage_dir(s));
    io::write_file(report_path(s), report.to_json().dump(2) + "\n");
    std::string line = "[" + report.stage + "] " + report.status;
    for (const auto& [k, v] : report.counts) line += " " + k + "=" + std::to_string(v);
    if (!report.error.empty()) line += ": " + report.error;
    log_line(opts.log, line);
    if (report.status == kStatusFailed) {
      failed = true;
      result.exit_code = 1;
      if (result.error.empty()) result.error = report.stage + ": " + report.error;
    }
    result.reports.push_back(std::move(report));
  }
  return result;
}

}  // namespace revsum::pipeline
