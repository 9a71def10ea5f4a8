// Copyright 2026 The cohdet Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <sstream>

#include "cohdet/eval.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace cohdet;
using testing::make_doc;

namespace {

std::vector<Label> labels_from(const std::string& s) {
  std::vector<Label> out;
  for (char c : s) out.push_back(c == 'm' ? Label::MGT : Label::HWT);
  return out;
}

Document twenty_tokens() {
  return make_doc("d", {"Alice saw the old mill by the river .", "Bob and Carol walked there .",
                        "It rained all day ."});
}

DocumentPair make_pair(const std::string& h, const std::string& m) {
  return {make_doc("h", {h}, Label::HWT), make_doc("m", {m}, Label::MGT)};
}

}  // namespace

TEST_CASE("classification metrics") {
  SUBCASE("all correct") {
    const auto y = labels_from("hhmmhm");
    const auto r = evaluate(y, y);
    CHECK(r.accuracy == 1.0);
    CHECK(r.f1 == 1.0);
  }
  SUBCASE("everything predicted human") {
    const auto r = evaluate(labels_from("hhhh"), labels_from("hmhm"));
    CHECK(r.accuracy == 0.5);
    CHECK(r.precision == 0.0);
    CHECK(r.recall == 0.0);
    CHECK(r.f1 == 0.0);
  }
  SUBCASE("confusion counts") {
    // TP=3 FP=1 FN=2 TN=4
    const auto r = evaluate(labels_from("mmmmhhhhhh"), labels_from("mmmhmmhhhh"));
    CHECK(r.tp == 3);
    CHECK(r.fp == 1);
    CHECK(r.fn == 2);
    CHECK(r.tn == 4);
    CHECK(r.accuracy == doctest::Approx(0.7));
    CHECK(r.precision == doctest::Approx(0.75));
    CHECK(r.recall == doctest::Approx(0.6));
    CHECK(r.f1 == doctest::Approx(2.0 / 3.0));
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(evaluate(labels_from("hm"), labels_from("h")), EvalError);
    CHECK_THROWS_AS(evaluate({}, {}), EvalError);
  }
}

TEST_CASE("perturbation count") {
  CHECK(perturb_count(20, 0.15) == 3);
  CHECK(perturb_count(3, 0.01) == 1);
  CHECK(perturb_count(10, 1.0) == 10);
  for (std::size_t n = 1; n < 2000; ++n) CHECK(perturb_count(n, 0.15) == std::max<std::size_t>(1, (15 * n + 50) / 100));
}

TEST_CASE("perturbations") {
  const Document doc = twenty_tokens();
  REQUIRE(doc.tokens.size() == 20);
  const std::vector<std::string> vocab = {"zz"};

  SUBCASE("delete removes k tokens and keeps spans valid") {
    const auto out = perturb(doc, {PerturbKind::Delete, 0.15, 7}, {});
    CHECK(out.tokens.size() == 17);
    Document check = out;
    CHECK_NOTHROW(validate_document(check));
    for (const auto& e : out.entities) {
      CHECK(out.tokens[e.token_start] == e.surface);
    }
  }
  SUBCASE("repeat duplicates tokens in place") {
    const Document ab = make_doc("ab", {"a b"});
    const auto out = perturb(ab, {PerturbKind::Repeat, 0.5, 1}, {});
    CHECK(out.tokens.size() == 3);
    const bool ok = out.tokens == std::vector<std::string>{"a", "a", "b"} ||
                    out.tokens == std::vector<std::string>{"a", "b", "b"};
    CHECK(ok);
    CHECK(out.sentences.front().token_end == 3);
  }
  SUBCASE("insert draws from the vocabulary") {
    const auto out = perturb(doc, {PerturbKind::Insert, 0.15, 2}, vocab);
    CHECK(out.tokens.size() == 23);
    CHECK(std::count(out.tokens.begin(), out.tokens.end(), "zz") == 3);
    Document check = out;
    CHECK_NOTHROW(validate_document(check));
    for (const auto& e : out.entities) CHECK(out.tokens[e.token_start] == e.surface);
  }
  SUBCASE("replace keeps the length") {
    const auto out = perturb(doc, {PerturbKind::Replace, 0.15, 2}, vocab);
    CHECK(out.tokens.size() == 20);
    CHECK(std::count(out.tokens.begin(), out.tokens.end(), "zz") == 3);
    CHECK(out.sentences == doc.sentences);
  }
  SUBCASE("a tiny scale still changes one token") {
    const auto out = perturb(doc, {PerturbKind::Delete, 0.001, 2}, {});
    CHECK(out.tokens.size() == 19);
  }
  SUBCASE("deterministic per seed") {
    for (auto kind : {PerturbKind::Delete, PerturbKind::Repeat, PerturbKind::Insert, PerturbKind::Replace}) {
      CHECK(perturb(doc, {kind, 0.3, 9}, vocab) == perturb(doc, {kind, 0.3, 9}, vocab));
    }
    CHECK_FALSE(perturb(doc, {PerturbKind::Delete, 0.3, 9}, {}) ==
                perturb(doc, {PerturbKind::Delete, 0.3, 10}, {}));
  }
  SUBCASE("embeddings are dropped and text rebuilt") {
    Document with = doc;
    with.doc_embedding = std::vector<double>{1.0, 2.0};
    const auto out = perturb(with, {PerturbKind::Replace, 0.15, 2}, vocab);
    CHECK_FALSE(out.doc_embedding.has_value());
    CHECK(out.text.find("zz") != std::string::npos);
  }
  SUBCASE("bad arguments") {
    CHECK_THROWS_AS(perturb(doc, {PerturbKind::Delete, 0.0, 1}, {}), EvalError);
    CHECK_THROWS_AS(perturb(doc, {PerturbKind::Delete, 1.5, 1}, {}), EvalError);
    CHECK_THROWS_AS(parse_perturb_kind("shuffle"), EvalError);
    CHECK(parse_perturb_kind("repeat") == PerturbKind::Repeat);
  }
  SUBCASE("corpus perturbation is thread-count independent") {
    const std::vector<Document> docs = {doc, make_doc("e", {"Dan ran home .", "Dan slept ."})};
    const PerturbSpec spec{PerturbKind::Insert, 0.2, 5};
    CHECK(perturb_corpus(docs, spec, 1) == perturb_corpus(docs, spec, 4));
  }
}

TEST_CASE("document pairing") {
  auto h = make_doc("h", {"a"}, Label::HWT);
  auto m = make_doc("m", {"b"}, Label::MGT);
  SUBCASE("valid") {
    h.pair_id = "m";
    const auto pairs = pair_documents({m, h});
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].first.id == "h");
    CHECK(pairs[0].second.id == "m");
  }
  SUBCASE("dangling reference") {
    h.pair_id = "x";
    CHECK_THROWS_AS(pair_documents({h, m}), EvalError);
  }
  SUBCASE("same label") {
    auto h2 = make_doc("h2", {"c"}, Label::HWT);
    h.pair_id = "h2";
    CHECK_THROWS_AS(pair_documents({h, h2}), EvalError);
  }
  SUBCASE("orphan") {
    CHECK_THROWS_AS(pair_documents({h, m}), EvalError);
  }
}

TEST_CASE("cue statistics") {
  SUBCASE("fixture") {
    const auto pairs = pair_documents(load_corpus(testing::fixture("cue_pairs.jsonl")));
    const auto stats = cue_stats(pairs);
    CHECK(stats.n_pairs == 6);
    auto find = [&](const std::string& t) {
      for (const auto& e : stats.entries) {
        if (e.token == t) return e;
      }
      FAIL("missing token " << t);
      return CueEntry{};
    };
    CHECK(find("indeed").applicability == 4);
    CHECK(*find("indeed").productivity == doctest::Approx(0.75));
    CHECK(find("indeed").coverage == doctest::Approx(4.0 / 6.0));
    CHECK(*find("hard").productivity == doctest::Approx(0.5));
    CHECK_FALSE(find("sat").productivity.has_value());
    CHECK(stats.entries[0].token == "Rain");
  }
  SUBCASE("two of three pairs") {
    const std::vector<DocumentPair> pairs = {make_pair("x a", "x b"), make_pair("x b", "x a"),
                                             make_pair("x c", "x a")};
    const auto stats = cue_stats(pairs);
    for (const auto& e : stats.entries) {
      if (e.token == "a") {
        CHECK(e.applicability == 3);
        CHECK(e.mgt_exclusive == 2);
        CHECK(*e.productivity == doctest::Approx(2.0 / 3.0));
        CHECK(e.coverage == 1.0);
      }
      if (e.token == "x") CHECK(e.applicability == 0);
    }
    const auto mgt = cue_stats(pairs, {}, CueConvention::MgtClass);
    for (const auto& e : mgt.entries) {
      if (e.token == "b") CHECK(*e.productivity == doctest::Approx(0.5));
    }
  }
  SUBCASE("vocabulary filter and table") {
    const std::vector<DocumentPair> pairs = {make_pair("x a", "x b")};
    const std::vector<std::string> vocab = {"a"};
    const auto stats = cue_stats(pairs, vocab);
    REQUIRE(stats.entries.size() == 1);
    std::ostringstream os;
    write_cue_table(os, stats);
    CHECK(os.str() == "token\tapplicability\tproductivity\tcoverage\na\t1\t1.000000\t1.000000\n");
  }
}

TEST_CASE("n-gram supporter coverage") {
  const std::vector<std::vector<double>> seq = {{0.2, 0.1, -0.3, 0.4, 0.5, 0.6, -0.1, 0.2}};
  const double expected[] = {6.0 / 8.0, 3.0 / 7.0, 1.0 / 6.0, 0.0};
  for (std::size_t n = 1; n <= 4; ++n) {
    CHECK(ngram_supporter_coverage(seq, n) == doctest::Approx(expected[n - 1]));
    CHECK(ngram_supporter_coverage(seq, n) == doctest::Approx(oracle::supporter_coverage(seq, n)));
  }
  const std::vector<std::vector<double>> all = {{1, 1, 1}, {2, 2}};
  CHECK(ngram_supporter_coverage(all, 2) == 1.0);
  SUBCASE("mixed lengths need not decrease") {
    const std::vector<std::vector<double>> mixed = {{1, 1, 1, 1, 1}, {-1, -1}};
    CHECK(ngram_supporter_coverage(mixed, 1) == doctest::Approx(5.0 / 7.0));
    CHECK(ngram_supporter_coverage(mixed, 2) == doctest::Approx(4.0 / 5.0));
  }
  CHECK_THROWS_AS(ngram_supporter_coverage(all, 4), EvalError);
  CHECK_THROWS_AS(ngram_supporter_coverage(all, 0), EvalError);
}
