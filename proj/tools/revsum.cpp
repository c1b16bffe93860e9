// Copyright 2026 The revsum Authors
// SPDX-License-Identifier: Apache-2.0

// revsum: review-summarization dataset and fine-tuning toolkit.

#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <iostream>
#include <map>
#include <memory>
#include <thread>

#include "revsum/corpus.hpp"
#include "revsum/dataset.hpp"
#include "revsum/error.hpp"
#include "revsum/evaluation.hpp"
#include "revsum/finetune.hpp"
#include "revsum/inference.hpp"
#include "revsum/kmeans.hpp"
#include "revsum/mock_server.hpp"
#include "revsum/moderation.hpp"
#include "revsum/pipeline.hpp"
#include "revsum/prompting.hpp"
#include "revsum/sweep.hpp"
#include "revsum/text.hpp"
#include "revsum/tfidf.hpp"

namespace fs = std::filesystem;
using namespace revsum;

namespace {

struct ApiFlags {
  std::string url = http::Endpoint{}.base_url;
  std::string prefix = http::Endpoint{}.prefix;
  long long timeout_ms = 30000;
  int max_attempts = 5;
  long long retry_base_ms = 250;
  std::size_t max_in_flight = 4;

  void attach(CLI::App* cmd) {
    cmd->add_option("--url", url, "API base URL")->capture_default_str();
    cmd->add_option("--api-prefix", prefix, "API path prefix")->capture_default_str();
    cmd->add_option("--timeout-ms", timeout_ms, "Per-request timeout")->capture_default_str();
    cmd->add_option("--max-attempts", max_attempts, "Attempts per request, including the first")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd->add_option("--retry-base-ms", retry_base_ms, "First backoff delay")->capture_default_str();
    cmd->add_option("--max-in-flight", max_in_flight, "Concurrent request cap")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
  }

  http::Endpoint endpoint() const {
    http::Endpoint ep;
    ep.base_url = url;
    ep.prefix = prefix;
    ep.timeout = std::chrono::milliseconds(timeout_ms);
    ep.retry.max_attempts = max_attempts;
    ep.retry.base_delay = std::chrono::milliseconds(retry_base_ms);
    ep.max_in_flight = max_in_flight;
    ep.token = http::token_from_env();
    return ep;
  }
};

std::map<std::string, io::Format> format_map() {
  return {{"tsv", io::Format::Tsv}, {"csv", io::Format::Csv}};
}

void print_counts(const std::string& what, const std::map<std::string, std::size_t>& counts) {
  std::cout << what;
  for (const auto& [k, v] : counts) std::cout << ' ' << k << '=' << v;
  std::cout << '\n';
}

std::vector<std::size_t> parse_size_list(const std::string& s) {
  std::vector<std::size_t> out;
  for (const auto& part : text::split(s, ",")) {
    const auto t = text::trim(part);
    if (t.empty()) continue;
    const auto v = text::parse_int(t);
    if (!v || *v <= 0) throw ArgumentError("bad size '" + std::string(t) + "'");
    out.push_back(static_cast<std::size_t>(*v));
  }
  return out;
}

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop = true; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"revsum: turn review corpora into fine-tuning data, run jobs, score summaries"};
  app.require_subcommand(1);
  int exit_code = 0;

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Load reviews, apply the length filter, split by category");
  fs::path ingest_in;
  fs::path ingest_out = "ingest";
  io::Format ingest_format = io::Format::Tsv;
  corpus::ColumnMap cols;
  std::size_t min_len = corpus::kDefaultMinLength;
  ingest->add_option("--in", ingest_in, "Review dump (TSV or CSV with header)")->required();
  ingest->add_option("--out", ingest_out, "Output directory")->capture_default_str();
  ingest->add_option("--format", ingest_format, "tsv or csv")
      ->transform(CLI::CheckedTransformer(format_map(), CLI::ignore_case));
  ingest->add_option("--col-id", cols.id)->capture_default_str();
  ingest->add_option("--col-category", cols.category)->capture_default_str();
  ingest->add_option("--col-body", cols.body)->capture_default_str();
  ingest->add_option("--col-rating", cols.rating)->capture_default_str();
  ingest->add_option("--min-len", min_len, "Minimum body length in characters")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  ingest->callback([&] {
    const auto loaded = corpus::load_reviews(ingest_in, ingest_format, cols);
    const auto kept = corpus::filter_by_length(loaded.reviews, min_len);
    const auto parts = corpus::partition_by_category(kept);
    for (const auto& [category, part] : parts) {
      corpus::write_category_file(ingest_out / (corpus::category_file_stem(category) + ".tsv"), part);
    }
    corpus::write_rejects(ingest_out / "rejects.tsv", loaded.rejects);
    print_counts("ingest", {{"data_rows", loaded.data_rows},
                            {"loaded", loaded.reviews.size()},
                            {"rejected", loaded.rejects.size()},
                            {"too_short", loaded.reviews.size() - kept.size()},
                            {"categories", parts.size()}});
  });

  // cluster
  auto* clus = app.add_subcommand("cluster", "TF-IDF + KMeans per category, then assemble rows");
  fs::path clus_in;
  fs::path clus_out = "cluster";
  cluster::KMeansOptions km;
  std::size_t group_size = kDefaultGroupSize;
  clus->add_option("--in", clus_in, "Directory of per-category files")->required();
  clus->add_option("--out", clus_out, "Output directory")->capture_default_str();
  clus->add_option("--k", km.k, "Clusters per category")->capture_default_str()->check(CLI::PositiveNumber);
  clus->add_option("--group-size", group_size, "Reviews per row")->capture_default_str()->check(CLI::PositiveNumber);
  clus->add_option("--seed", km.seed)->capture_default_str();
  clus->add_option("--max-iter", km.max_iter)->capture_default_str();
  clus->add_option("--tol", km.tol)->capture_default_str();
  clus->add_option("--n-init", km.n_init, "Seeded restarts; best inertia wins")->capture_default_str();
  clus->callback([&] {
    std::vector<fs::path> inputs;
    for (const auto& e : fs::directory_iterator(clus_in)) {
      if (e.path().extension() == ".tsv" && e.path().filename() != "rejects.tsv") inputs.push_back(e.path());
    }
    std::sort(inputs.begin(), inputs.end());
    std::vector<fs::path> parts;
    std::size_t rows = 0;
    std::size_t discarded = 0;
    for (const auto& in : inputs) {
      const auto part = corpus::read_category_file(in);
      if (part.reviews.empty()) continue;
      std::vector<std::string> bodies;
      for (const auto& r : part.reviews) bodies.push_back(r.body);
      auto opts = km;
      if (opts.k > bodies.size()) {
        std::cerr << "warning: " << part.category << ": k reduced to " << bodies.size() << '\n';
        opts.k = bodies.size();
      }
      const auto tfidf = cluster::vectorize_tfidf(bodies);
      const auto model = cluster::kmeans_fit(tfidf.values, opts);
      const auto assembled = cluster::assemble_rows(model.assignments, bodies, part.category, group_size);
      const auto out = clus_out / "rows" / in.filename();
      dataset::write_rows(out, assembled.rows, group_size);
      parts.push_back(out);
      rows += assembled.rows.size();
      discarded += assembled.discarded;
    }
    dataset::concat_datasets(parts, clus_out / "dataset.tsv", group_size);
    print_counts("cluster", {{"categories", parts.size()},
                             {"rows", rows},
                             {"discarded", discarded}});
  });

  // moderate
  auto* mod = app.add_subcommand("moderate", "Drop rows containing a review over the unsafe threshold");
  fs::path mod_rows;
  fs::path mod_out = "moderate";
  double thresh = moderation::kDefaultThreshold;
  std::string classifier = "local";
  fs::path lexicon;
  std::string classify_path = "/classify";
  ApiFlags mod_api;
  mod->add_option("--rows", mod_rows, "Row dataset")->required();
  mod->add_option("--out", mod_out, "Output directory")->capture_default_str();
  mod->add_option("--thresh", thresh, "Reject when ln P(unsafe) >= thresh")->capture_default_str();
  mod->add_option("--classifier", classifier)->check(CLI::IsMember({"local", "remote"}))->capture_default_str();
  mod->add_option("--lexicon", lexicon, "Lexicon TSV (label, term, weight) for the local classifier");
  mod->add_option("--classify-path", classify_path)->capture_default_str();
  mod_api.attach(mod);
  mod->callback([&] {
    std::size_t g = 0;
    const auto rows = dataset::read_rows(mod_rows, &g);
    std::unique_ptr<http::ApiClient> client;
    std::unique_ptr<moderation::SafetyClassifier> cls;
    if (classifier == "remote") {
      client = std::make_unique<http::ApiClient>(mod_api.endpoint());
      cls = std::make_unique<moderation::RemoteClassifier>(*client, classify_path);
    } else {
      if (lexicon.empty()) throw ArgumentError("--lexicon is required with --classifier local");
      cls = std::make_unique<moderation::LexiconClassifier>(moderation::Lexicon::load(lexicon));
    }
    const auto r = moderation::filter_rows(rows, *cls, thresh, mod_api.max_in_flight);
    dataset::write_rows(mod_out / "kept.tsv", r.kept, g);
    moderation::write_audit(mod_out / "audit.tsv", r.audit);
    print_counts("moderate", {{"rows", rows.size()},
                              {"kept", r.kept.size()},
                              {"dropped", r.dropped.size()},
                              {"quarantined", r.quarantined.size()}});
  });

  // prompt
  auto* pr = app.add_subcommand("prompt", "Join rows with annotations into a JSONL training file");
  fs::path pr_rows;
  fs::path pr_ann;
  fs::path pr_out = "dataset.jsonl";
  std::string pr_prefix;
  pr->add_option("--rows", pr_rows, "Row dataset")->required();
  pr->add_option("--annotations", pr_ann, "Annotation TSV (row_id, pros, cons, verdict)")->required();
  pr->add_option("--out", pr_out)->capture_default_str();
  pr->add_option("--prefix", pr_prefix, "Text placed before the first review");
  pr->callback([&] {
    std::size_t g = 0;
    const auto rows = dataset::read_rows(pr_rows, &g);
    std::map<std::string, prompting::Annotation> anns;
    for (auto& a : prompting::read_annotations(pr_ann)) anns.emplace(a.row_id, std::move(a.annotation));
    std::vector<prompting::TrainingExample> examples;
    for (const auto& row : rows) {
      const auto it = anns.find(row.row_id);
      if (it == anns.end()) continue;
      examples.push_back({prompting::build_prompt(row, g, pr_prefix), prompting::build_completion(it->second)});
    }
    prompting::write_jsonl(pr_out, examples);
    print_counts("prompt", {{"rows", rows.size()}, {"examples", examples.size()}});
  });

  // validate
  auto* val = app.add_subcommand("validate", "Check a JSONL training file");
  fs::path val_in;
  val->add_option("--in", val_in)->required();
  val->callback([&] {
    const auto report = prompting::validate_jsonl(val_in);
    for (const auto& e : report.errors) std::cout << val_in.string() << ':' << e.line << ": error: " << e.kind << ": " << e.message << '\n';
    for (const auto& w : report.warnings) std::cout << val_in.string() << ':' << w.line << ": warning: " << w.kind << ": " << w.message << '\n';
    std::cout << report.summary() << '\n';
    if (!report.ok()) exit_code = 1;
  });

  // upload
  auto* up = app.add_subcommand("upload", "Validate and upload a JSONL file");
  fs::path up_in;
  fs::path ledger = "revsum-ledger.jsonl";
  ApiFlags up_api;
  up->add_option("--in", up_in)->required();
  up->add_option("--ledger", ledger, "Job ledger; the upload cache sits next to it")->capture_default_str();
  up_api.attach(up);
  up->callback([&] {
    http::ApiClient client(up_api.endpoint());
    finetune::FineTuneClient ft(client, ledger);
    std::cout << ft.upload_file(up_in) << '\n';
  });

  // finetune
  auto* ftc = app.add_subcommand("finetune", "Create a fine-tune job");
  std::string file_id;
  finetune::Hyperparams hp;
  bool wait = false;
  long long poll_ms = 1000;
  long long poll_timeout_ms = 3600 * 1000;
  ApiFlags ft_api;
  ftc->add_option("--file-id", file_id)->required();
  ftc->add_option("--engine", hp.engine)->capture_default_str();
  ftc->add_option("--batch-size", hp.batch_size)->capture_default_str();
  ftc->add_option("--epochs", hp.n_epochs)->capture_default_str();
  ftc->add_option("--lr", hp.learning_rate, "Learning-rate multiplier")->capture_default_str();
  ftc->add_flag("--padding,!--no-padding", hp.use_padding)->capture_default_str();
  ftc->add_flag("--wait", wait, "Poll until the job finishes");
  ftc->add_option("--poll-interval-ms", poll_ms)->capture_default_str();
  ftc->add_option("--poll-timeout-ms", poll_timeout_ms)->capture_default_str();
  ftc->add_option("--ledger", ledger)->capture_default_str();
  ft_api.attach(ftc);
  ftc->callback([&] {
    hp.validate();
    http::ApiClient client(ft_api.endpoint());
    finetune::FineTuneClient ft(client, ledger);
    auto job = ft.create_finetune(file_id, hp);
    if (wait) {
      job = ft.poll_job(job.job_id, std::chrono::milliseconds(poll_ms), std::chrono::milliseconds(poll_timeout_ms));
    }
    std::cout << job.job_id << ' ' << finetune::to_string(job.status);
    if (job.fine_tuned_model) std::cout << ' ' << *job.fine_tuned_model;
    if (job.failure_reason) std::cout << " (" << *job.failure_reason << ')';
    if (job.timed_out) std::cout << " (timed out)";
    std::cout << '\n';
    if (wait && job.status != finetune::JobStatus::Succeeded) exit_code = 1;
  });

  // status
  auto* st = app.add_subcommand("status", "Show a fine-tune job");
  std::string job_id;
  ApiFlags st_api;
  st->add_option("job_id", job_id)->required();
  st->add_option("--ledger", ledger)->capture_default_str();
  st_api.attach(st);
  st->callback([&] {
    http::ApiClient client(st_api.endpoint());
    finetune::FineTuneClient ft(client, ledger);
    const auto job = ft.get_job(job_id);
    std::cout << job.job_id << ' ' << finetune::to_string(job.status);
    if (job.fine_tuned_model) std::cout << ' ' << *job.fine_tuned_model;
    std::cout << '\n';
  });

  // infer
  auto* inf = app.add_subcommand("infer", "Summarize review rows with a fine-tuned model");
  std::string model;
  fs::path inf_rows;
  fs::path inf_out = "results.jsonl";
  inference::SummarizeOptions sopts;
  ApiFlags inf_api;
  inf->add_option("--model", model)->required();
  inf->add_option("--reviews", inf_rows, "Row dataset")->required();
  inf->add_option("--out", inf_out)->capture_default_str();
  inf->add_option("--max-tokens", sopts.max_tokens)->capture_default_str();
  inf->add_option("--temperature", sopts.temperature)->capture_default_str();
  inf->add_option("--prefix", sopts.prompt_prefix);
  inf_api.attach(inf);
  inf->callback([&] {
    const auto rows = dataset::read_rows(inf_rows, &sopts.group_size);
    http::ApiClient client(inf_api.endpoint());
    inference::InferenceClient ic(client);
    const auto results = ic.summarize_batch(model, rows, sopts);
    inference::write_results(inf_out, rows, results);
    const auto ok = static_cast<std::size_t>(
        std::count_if(results.begin(), results.end(), [](const auto& r) { return r.ok(); }));
    print_counts("infer", {{"rows", rows.size()}, {"ok", ok}, {"failed", rows.size() - ok}});
  });

  // eval
  auto* ev = app.add_subcommand("eval", "Score inference results against reference annotations");
  fs::path ev_cand;
  fs::path ev_ref;
  fs::path ev_emb;
  fs::path ev_out;
  bool ev_idf = false;
  ev->add_option("--candidates", ev_cand, "results.jsonl from infer")->required();
  ev->add_option("--references", ev_ref, "Annotation TSV")->required();
  ev->add_option("--embeddings", ev_emb, "Word-vector text file")->required();
  ev->add_option("--out", ev_out, "Per-row score table");
  ev->add_flag("--idf", ev_idf, "Weight the embedding score by reference idf");
  ev->callback([&] {
    const auto results = inference::read_results(ev_cand);
    std::map<std::string, prompting::Annotation> refs;
    for (auto& a : prompting::read_annotations(ev_ref)) refs.emplace(a.row_id, std::move(a.annotation));
    std::vector<eval::Pair> pairs;
    std::vector<std::string> ids;
    std::size_t failed = 0;
    for (const auto& r : results) {
      const auto it = refs.find(r.row_id);
      if (it == refs.end()) continue;
      if (!r.result.ok()) {
        ++failed;
        continue;
      }
      pairs.push_back({prompting::content_text(*r.result.annotation), prompting::content_text(it->second)});
      ids.push_back(r.row_id);
    }
    const auto embedder = eval::StaticEmbedder::load(ev_emb);
    std::optional<eval::IdfWeights> idf;
    if (ev_idf) {
      std::vector<std::string> texts;
      for (const auto& p : pairs) texts.push_back(p.reference);
      idf = eval::IdfWeights::from_references(texts);
    }
    const auto scores = eval::score_pairs(pairs, embedder, idf ? &*idf : nullptr);
    std::vector<eval::ScoreTriple> rouge;
    std::vector<eval::ScoreTriple> emb;
    std::vector<std::vector<std::string>> table;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      rouge.push_back(scores[i].rouge);
      emb.push_back(scores[i].embed.score);
      table.push_back({ids[i], text::format_double(scores[i].rouge.f1), text::format_double(scores[i].embed.score.f1)});
    }
    if (!ev_out.empty()) io::write_file(ev_out, io::format_tsv({"row_id", "rouge1_f1", "embed_f1"}, table));
    const auto r = eval::mean(rouge);
    const auto e = eval::mean(emb);
    std::cout << "n_eval=" << pairs.size() << " n_failed=" << failed << '\n'
              << "rouge1 P=" << r.precision << " R=" << r.recall << " F1=" << r.f1 << '\n'
              << "embed  P=" << e.precision << " R=" << e.recall << " F1=" << e.f1 << '\n';
  });

  // sweep
  auto* sw = app.add_subcommand("sweep", "Score models trained on growing subsets of a dataset");
  std::string sizes_arg = "50,100,200,350,485";
  std::vector<std::string> model_args;
  fs::path sw_dataset;
  fs::path sw_rows;
  fs::path sw_refs;
  fs::path sw_emb;
  fs::path sw_out = "sweep";
  bool sw_train = false;
  finetune::Hyperparams sw_hp;
  ApiFlags sw_api;
  sw->add_option("--sizes", sizes_arg, "Comma-separated train sizes")->capture_default_str();
  sw->add_option("--model", model_args, "size=model, repeatable");
  sw->add_flag("--train", sw_train, "Upload and fine-tune each subset instead of naming models");
  sw->add_option("--dataset", sw_dataset, "Full training JSONL, used with --train");
  sw->add_option("--eval-rows", sw_rows, "Held-out row dataset")->required();
  sw->add_option("--references", sw_refs, "Annotation TSV for the held-out rows")->required();
  sw->add_option("--embeddings", sw_emb, "Word-vector text file")->required();
  sw->add_option("--out", sw_out, "Report directory")->capture_default_str();
  sw->add_option("--ledger", ledger)->capture_default_str();
  sw->add_option("--poll-interval-ms", poll_ms)->capture_default_str();
  sw->add_option("--poll-timeout-ms", poll_timeout_ms)->capture_default_str();
  sw_api.attach(sw);
  sw->callback([&] {
    const auto sizes = parse_size_list(sizes_arg);
    http::ApiClient client(sw_api.endpoint());
    std::map<std::size_t, std::string> models;
    for (const auto& m : model_args) {
      const auto eq = m.find('=');
      if (eq == std::string::npos) throw ArgumentError("--model expects size=model");
      models[parse_size_list(m.substr(0, eq)).at(0)] = m.substr(eq + 1);
    }
    if (sw_train) {
      if (sw_dataset.empty()) throw ArgumentError("--train needs --dataset");
      finetune::FineTuneClient ft(client, ledger);
      for (const auto& [n, path] : eval::prepare_size_datasets(sw_dataset, sizes, sw_out / "datasets")) {
        const auto id = ft.upload_file(path);
        auto job = ft.create_finetune(id, sw_hp);
        job = ft.poll_job(job.job_id, std::chrono::milliseconds(poll_ms), std::chrono::milliseconds(poll_timeout_ms));
        if (job.fine_tuned_model) {
          models[n] = *job.fine_tuned_model;
        } else {
          std::cerr << "warning: size " << n << ": job " << job.job_id << " ended " << finetune::to_string(job.status) << '\n';
        }
      }
    }
    std::size_t g = 0;
    const auto rows = dataset::read_rows(sw_rows, &g);
    std::map<std::string, prompting::Annotation> refs;
    for (auto& a : prompting::read_annotations(sw_refs)) refs.emplace(a.row_id, std::move(a.annotation));
    std::vector<eval::EvalItem> items;
    for (const auto& row : rows) {
      const auto it = refs.find(row.row_id);
      if (it != refs.end()) items.push_back({row, it->second});
    }
    const auto embedder = eval::StaticEmbedder::load(sw_emb);
    inference::InferenceClient ic(client);
    eval::SweepOptions opts;
    opts.summarize.group_size = g;
    const auto report = eval::size_sweep(sizes, models, items, ic, embedder, opts);
    for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
    report.write(sw_out / "sweep.tsv", sw_out / "sweep.dat");
    std::cout << report.table();
  });

  // mock-server
  auto* ms = app.add_subcommand("mock-server", "Serve the scripted offline API");
  fs::path script_path;
  int port = 8080;
  std::string host = "127.0.0.1";
  fs::path capture_path;
  ms->add_option("--script", script_path, "Script JSON; defaults apply when omitted");
  ms->add_option("--port", port, "0 picks a free port")->capture_default_str();
  ms->add_option("--host", host)->capture_default_str();
  ms->add_option("--capture", capture_path, "Append captured requests to this JSONL file");
  ms->callback([&] {
    mock::MockServer server(script_path.empty() ? mock::Script{} : mock::Script::load(script_path));
    if (!capture_path.empty()) server.set_capture_file(capture_path);
    const int bound = server.start(port, host);
    std::cout << "listening on " << server.url() << '\n' << std::flush;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    server.stop();
    std::cerr << "stopped; " << server.capture().size() << " requests served on port " << bound << '\n';
  });

  // run
  auto* run = app.add_subcommand("run", "Run pipeline stages from a config file");
  fs::path config_path;
  std::string stages_arg = "all";
  std::optional<std::uint64_t> seed;
  std::optional<std::string> work_dir;
  std::vector<std::string> sets;
  bool dry_run = false;
  bool force = false;
  bool show_config = false;
  run->add_option("--config", config_path, "key = value file");
  run->add_option("--stages", stages_arg, "all, or a comma list in pipeline order")->capture_default_str();
  run->add_option("--seed", seed, "Overrides the config seed");
  run->add_option("--work-dir", work_dir, "Overrides the config work_dir");
  run->add_option("--set", sets, "key=value override, repeatable");
  run->add_flag("--dry-run", dry_run, "Check dependencies and show what would run");
  run->add_flag("--force", force, "Ignore up-to-date stages");
  run->add_flag("--show-config", show_config, "Print the effective configuration and exit");
  run->callback([&] {
    pipeline::PipelineConfig cfg;
    if (!config_path.empty()) cfg.merge_file(config_path);
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ArgumentError("--set expects key=value");
      cfg.set(text::trim(s.substr(0, eq)), text::trim(s.substr(eq + 1)));
    }
    if (seed) cfg.seed = *seed;
    if (work_dir) cfg.work_dir = *work_dir;
    if (show_config) {
      for (const auto& [k, v] : cfg.entries()) std::cout << k << " = " << v << '\n';
      return;
    }
    const auto stages = pipeline::parse_stages(stages_arg);
    pipeline::Pipeline p(cfg);
    pipeline::RunOptions opts;
    opts.dry_run = dry_run;
    opts.force = force;
    opts.log = &std::cerr;
    const auto result = p.run(stages, opts);
    if (!result.error.empty()) std::cerr << "error: " << result.error << '\n';
    exit_code = result.exit_code;
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const SchemaError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return exit_code;
}
