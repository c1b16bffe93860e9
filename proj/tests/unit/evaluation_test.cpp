// Copyright 2026 The revsum Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "revsum/error.hpp"
#include "revsum/evaluation.hpp"
#include "revsum/io.hpp"
#include "revsum/mock_server.hpp"
#include "revsum/sweep.hpp"
#include "revsum/text.hpp"
#include "support.hpp"

namespace revsum::eval {
namespace {

using Strings = std::vector<std::string>;

void expect_triple(const ScoreTriple& got, const testing::OracleTriple& want, double tol = 0.0) {
  if (tol == 0.0) {
    EXPECT_EQ(got.precision, want.p);
    EXPECT_EQ(got.recall, want.r);
    EXPECT_EQ(got.f1, want.f);
  } else {
    EXPECT_NEAR(got.precision, want.p, tol);
    EXPECT_NEAR(got.recall, want.r, tol);
    EXPECT_NEAR(got.f1, want.f, tol);
  }
}

TEST(Tokenize, Examples) {
  EXPECT_EQ(tokenize("The cat, sat!"), (Strings{"the", "cat", "sat"}));
  EXPECT_TRUE(tokenize("").empty());
  EXPECT_EQ(tokenize("A-B"), (Strings{"a", "b"}));
}

TEST(Rouge1, GoldenCases) {
  expect_triple(rouge1("good battery life", "good battery life"), {1, 1, 1});
  expect_triple(rouge1("alpha beta", "gamma delta"), {0, 0, 0});
  const auto r = rouge1("the cat sat", "the cat ran");
  EXPECT_DOUBLE_EQ(r.precision, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.recall, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.f1, 2.0 / 3.0);
  expect_triple(rouge1("", ""), {1, 1, 1});
  expect_triple(rouge1("", "x"), {0, 0, 0});
  expect_triple(rouge1("x", "..."), {0, 0, 0});
}

TEST(Rouge1, ClippedCounts) {
  // cand: the x3, cat; ref: the, cat x2 -> overlap 1 + 1
  const auto r = rouge1("the the the cat", "the cat cat");
  EXPECT_DOUBLE_EQ(r.precision, 2.0 / 4.0);
  EXPECT_DOUBLE_EQ(r.recall, 2.0 / 3.0);
}

std::string random_text(std::mt19937_64& rng, std::size_t max_tokens, std::size_t vocab) {
  static const Strings seps = {" ", ", ", "! ", " - ", "\n", "  "};
  std::string s;
  const std::size_t n = rng() % (max_tokens + 1);
  for (std::size_t i = 0; i < n; ++i) {
    auto w = testing::random_word(rng, vocab);
    if (rng() % 5 == 0) w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
    s += w + seps[rng() % seps.size()];
  }
  return s;
}

TEST(Rouge1, MatchesOracleAndProperties) {
  std::mt19937_64 rng(42);
  for (int i = 0; i < 3000; ++i) {
    const auto a = random_text(rng, 12, 8);
    const auto b = random_text(rng, 12, 8);
    const auto ab = rouge1(a, b);
    expect_triple(ab, testing::oracle_rouge1(a, b));
    const auto ba = rouge1(b, a);
    EXPECT_EQ(ab.precision, ba.recall);
    EXPECT_EQ(ab.recall, ba.precision);
    for (const double v : {ab.precision, ab.recall, ab.f1}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    EXPECT_GE(ab.f1, std::min(ab.precision, ab.recall) - 1e-15);
    EXPECT_LE(ab.f1, std::max(ab.precision, ab.recall) + 1e-15);
  }
}

TEST(Rouge1, CaseAndPunctuationInvariant) {
  EXPECT_EQ(rouge1("Great VALUE, fast!", "great value fast"), rouge1("great value fast", "great value fast"));
}

std::map<std::string, std::vector<double>> two_d() {
  return {{"v1", {1.0, 0.0}}, {"v2", {0.0, 1.0}}, {"v3", {1.0, 1.0}}, {"neg", {-1.0, 0.0}}};
}

TEST(EmbedScore, SpecExamples) {
  const StaticEmbedder e(two_d());
  const auto same = embed_score("v1 v2 v3", "v1 v2 v3", e);
  EXPECT_EQ(same.score.precision, 1.0);
  EXPECT_EQ(same.score.recall, 1.0);
  EXPECT_EQ(same.score.f1, 1.0);
  EXPECT_FALSE(same.empty);
  const auto orth = embed_score("v1", "v2", e);
  EXPECT_EQ(orth.score.f1, 0.0);
  const auto half = embed_score("v1", "v1 v2", e);
  EXPECT_DOUBLE_EQ(half.score.precision, 1.0);
  EXPECT_DOUBLE_EQ(half.score.recall, 0.5);
  EXPECT_DOUBLE_EQ(half.score.f1, 2.0 / 3.0);
}

TEST(EmbedScore, EmptySidesAndZeroVectors) {
  const StaticEmbedder e(two_d());
  auto r = embed_score("", "v1", e);
  EXPECT_TRUE(r.empty);
  EXPECT_EQ(r.score.f1, 0.0);
  r = embed_score("", "", e);
  EXPECT_TRUE(r.empty);
  EXPECT_EQ(r.score.f1, 1.0);
  // out-of-vocabulary tokens embed to zero, cosine 0
  r = embed_score("unknown", "v1", e);
  EXPECT_FALSE(r.empty);
  EXPECT_EQ(r.score.f1, 0.0);
  // negative cosine is clamped
  r = embed_score("neg", "v1", e);
  EXPECT_EQ(r.score.precision, 0.0);
}

TEST(EmbedScore, IdfWeighting) {
  const StaticEmbedder e(two_d());
  IdfWeights idf;
  idf.weights = {{"v1", 3.0}, {"v2", 1.0}};
  const auto r = embed_score("v1", "v1 v2", e, &idf);
  EXPECT_DOUBLE_EQ(r.score.recall, 3.0 / 4.0);
  EXPECT_DOUBLE_EQ(r.score.precision, 1.0);
}

TEST(IdfWeights, FromReferences) {
  const auto idf = IdfWeights::from_references({"a b", "a c", "a"});
  EXPECT_DOUBLE_EQ(idf.weight("a"), std::log(4.0 / 4.0));
  EXPECT_DOUBLE_EQ(idf.weight("b"), std::log(4.0 / 2.0));
  EXPECT_DOUBLE_EQ(idf.weight("zzz"), std::log(4.0));
}

TEST(EmbedScore, MatchesOracleOnRandomTables) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int table_no = 0; table_no < 20; ++table_no) {
    const std::size_t dim = 2 + rng() % 6;
    std::map<std::string, std::vector<double>> table;
    for (int w = 0; w < 6; ++w) {
      std::vector<double> v(dim);
      for (auto& x : v) x = g(rng);
      if (w == 5) v.assign(dim, 0.0);
      table[testing::random_word(rng, 1000) + std::to_string(w)] = v;
    }
    Strings words;
    for (const auto& [k, v] : table) words.push_back(k);
    words.push_back("oov");
    const StaticEmbedder e(table);
    std::map<std::string, double> idf_map;
    IdfWeights idf;
    idf.default_weight = 0.7;
    for (const auto& w : words) {
      const double wt = 0.1 + static_cast<double>(rng() % 100) / 25.0;
      idf_map[w] = wt;
      idf.weights[w] = wt;
    }
    for (int i = 0; i < 50; ++i) {
      Strings a, b;
      for (std::size_t n = rng() % 9; n > 0; --n) a.push_back(words[rng() % words.size()]);
      for (std::size_t n = rng() % 9; n > 0; --n) b.push_back(words[rng() % words.size()]);
      const auto ja = text::join(a, " ");
      const auto jb = text::join(b, " ");
      expect_triple(embed_score(ja, jb, e).score, testing::oracle_embed(a, b, table, dim), 1e-9);
      expect_triple(embed_score(ja, jb, e, &idf).score,
                    testing::oracle_embed(a, b, table, dim, &idf_map, 0.7), 1e-9);
    }
  }
}

TEST(StaticEmbedder, ParseFormats) {
  const auto e = StaticEmbedder::parse("3 2\nCat 1 0\ndog 0 1\nfish 0.5 0.5\n");
  EXPECT_EQ(e.dim(), 2u);
  EXPECT_EQ(e.size(), 3u);
  const auto v = e.embed({"cat", "whale"});
  EXPECT_EQ(v[0], (std::vector<double>{1.0, 0.0}));
  EXPECT_EQ(v[1], (std::vector<double>{0.0, 0.0}));
  EXPECT_THROW(StaticEmbedder::parse("a 1 2\nb 1\n"), Error);
  EXPECT_THROW(StaticEmbedder::parse("a 1 x\n"), Error);
}

TEST(ScorePairs, SerialEqualsParallel) {
  std::mt19937_64 rng(3);
  std::map<std::string, std::vector<double>> table;
  std::normal_distribution<double> g(0.0, 1.0);
  for (int w = 0; w < 30; ++w) {
    std::vector<double> v(8);
    for (auto& x : v) x = g(rng);
    table["w" + std::to_string(w)] = v;
  }
  const StaticEmbedder e(table);
  std::vector<Pair> pairs;
  for (int i = 0; i < 300; ++i) {
    std::string a, b;
    for (int n = 0; n < 10; ++n) a += "w" + std::to_string(rng() % 35) + " ";
    for (int n = 0; n < 10; ++n) b += "w" + std::to_string(rng() % 35) + " ";
    pairs.push_back({a, b});
  }
  const auto s = score_pairs(pairs, e, nullptr, kernels::Exec::Serial);
  const auto p = score_pairs(pairs, e, nullptr, kernels::Exec::Parallel);
  ASSERT_EQ(s.size(), pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    EXPECT_EQ(s[i].rouge, p[i].rouge);
    EXPECT_EQ(s[i].embed.score, p[i].embed.score);
    EXPECT_EQ(s[i].rouge, rouge1(pairs[i].candidate, pairs[i].reference));
    EXPECT_EQ(s[i].embed.score, embed_score(pairs[i].candidate, pairs[i].reference, e).score);
  }
}

TEST(Mean, AveragesComponents) {
  const auto m = mean({{1.0, 0.5, 0.6}, {0.0, 0.5, 0.2}});
  EXPECT_DOUBLE_EQ(m.precision, 0.5);
  EXPECT_DOUBLE_EQ(m.recall, 0.5);
  EXPECT_DOUBLE_EQ(m.f1, 0.4);
  EXPECT_EQ(mean({}), ScoreTriple{});
}

TEST(RemoteEmbedder, CachesVectors) {
  mock::MockServer server;
  server.start();
  http::Endpoint ep;
  ep.base_url = server.url();
  http::ApiClient client(ep);
  const RemoteEmbedder e(client);
  const auto a = e.embed({"alpha", "beta"});
  EXPECT_EQ(e.dim(), 16u);
  const auto b = e.embed({"beta", "alpha", "alpha"});
  EXPECT_EQ(a[0], b[1]);
  EXPECT_EQ(a[1], b[0]);
  EXPECT_EQ(server.capture().size(), 1u);
  EXPECT_EQ(embed_score("alpha beta", "alpha beta", e).score.f1, 1.0);
}

// --- sweep -------------------------------------------------------------------

TEST(Sweep, PrepareSizeDatasets) {
  testing::TempDir dir;
  std::vector<prompting::TrainingExample> xs;
  for (int i = 0; i < 10; ++i) {
    xs.push_back({"p" + std::to_string(i) + "\n\n###\n\n", " Pros:\nCons:\nVerdict: v\nEND"});
  }
  prompting::write_jsonl(dir.path() / "all.jsonl", xs);
  const auto out = prepare_size_datasets(dir.path() / "all.jsonl", {3, 10}, dir.path() / "sizes");
  ASSERT_EQ(out.size(), 2u);
  const auto three = prompting::read_jsonl(out.at(3));
  ASSERT_EQ(three.size(), 3u);
  EXPECT_EQ(three[2], xs[2]);
  EXPECT_EQ(prompting::read_jsonl(out.at(10)), xs);
  EXPECT_THROW(prepare_size_datasets(dir.path() / "all.jsonl", {11}, dir.path() / "s2"), ArgumentError);
  EXPECT_THROW(prepare_size_datasets(dir.path() / "all.jsonl", {0}, dir.path() / "s3"), ArgumentError);
}

struct SweepFixture {
  mock::MockServer server;
  std::unique_ptr<http::ApiClient> client;
  std::unique_ptr<inference::InferenceClient> ic;
  StaticEmbedder embedder{two_d()};

  SweepFixture() : server(script()) {
    server.start();
    http::Endpoint ep;
    ep.base_url = server.url();
    ep.retry.base_delay = std::chrono::milliseconds(1);
    client = std::make_unique<http::ApiClient>(ep);
    ic = std::make_unique<inference::InferenceClient>(*client);
  }
  static mock::Script script() {
    mock::Script s;
    s.accept_any_model = true;
    s.default_completion = " Pros:\n- v1\nCons:\n- v2\nVerdict: v3\nEND";
    s.completions.push_back({"garbled", "no structure here"});
    return s;
  }
};

std::vector<EvalItem> eval_items(std::size_t n, bool with_garbled = false) {
  std::vector<EvalItem> items;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string first = with_garbled && i == 0 ? "garbled" : "r";
    items.push_back({{"row-" + std::to_string(i), "c", 0, {first, "s", "t"}}, {{"v1"}, {"v2"}, "v3"}});
  }
  return items;
}

SweepOptions three_review_opts() {
  SweepOptions o;
  o.summarize.group_size = 3;
  return o;
}

TEST(Sweep, IdenticalOutputsGiveIdenticalRowsAndPerfectScores) {
  SweepFixture f;
  const auto rep = size_sweep({50, 485}, {{50, "m50"}, {485, "m485"}}, eval_items(4), *f.ic,
                              f.embedder, three_review_opts());
  ASSERT_EQ(rep.rows.size(), 2u);
  EXPECT_EQ(rep.rows[0].train_size, 50u);
  EXPECT_EQ(rep.rows[1].train_size, 485u);
  EXPECT_EQ(rep.rows[0].rouge1, rep.rows[1].rouge1);
  EXPECT_EQ(rep.rows[0].embed, rep.rows[1].embed);
  EXPECT_EQ(rep.rows[1].rouge1.f1, 1.0);
  EXPECT_EQ(rep.rows[1].embed.f1, 1.0);
  EXPECT_EQ(rep.rows[1].n_eval, 4u);
  EXPECT_EQ(rep.rows[1].model, "m485");
}

TEST(Sweep, MissingModelsAndFailures) {
  SweepFixture f;
  const auto rep = size_sweep({485, 100, 50}, {{485, "m"}, {50, "m"}}, eval_items(4, true), *f.ic,
                              f.embedder, three_review_opts());
  ASSERT_EQ(rep.rows.size(), 2u);
  EXPECT_EQ(rep.rows[0].train_size, 50u);
  EXPECT_EQ(rep.rows[1].train_size, 485u);
  ASSERT_EQ(rep.warnings.size(), 1u);
  EXPECT_NE(rep.warnings[0].find("100"), std::string::npos);
  EXPECT_EQ(rep.rows[1].n_failed, 1u);
  EXPECT_EQ(rep.rows[1].n_eval, 3u);
  EXPECT_EQ(rep.rows[1].rouge1.f1, 1.0);

  EXPECT_THROW(size_sweep({50, 485}, {{50, "m"}}, eval_items(1), *f.ic, f.embedder, three_review_opts()),
               ArgumentError);
  EXPECT_THROW(size_sweep({485}, {{485, "m"}}, {}, *f.ic, f.embedder, three_review_opts()), ArgumentError);
}

TEST(Sweep, ReportFiles) {
  testing::TempDir dir;
  SweepReport rep;
  rep.rows.push_back({50, "a", {0.5, 0.5, 0.5}, {0.25, 0.25, 0.25}, 2, 0});
  rep.rows.push_back({485, "b", {1, 1, 1}, {0.75, 0.75, 0.75}, 2, 1});
  rep.write(dir.path() / "t.tsv", dir.path() / "p.dat");
  const auto plot = io::read_file(dir.path() / "p.dat");
  const auto lines = text::split(plot, "\n");
  ASSERT_GE(lines.size(), 3u);
  EXPECT_EQ(lines[0], "# train_size rouge1_f1 embed_f1");
  EXPECT_TRUE(lines[1].starts_with("50 0.5 0.25")) << lines[1];
  EXPECT_TRUE(lines[2].starts_with("485 1 0.75")) << lines[2];
  const auto table = io::read_file(dir.path() / "t.tsv");
  EXPECT_TRUE(table.starts_with("train_size\t")) << table;
  EXPECT_NE(table.find("\n485\tb\t"), std::string::npos) << table;
}

}  // namespace
}  // namespace revsum::eval
