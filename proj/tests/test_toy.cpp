#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include "qgen/text/toy.hpp"

using namespace qgen;
using namespace qgen::text;

TEST_SUITE_BEGIN("toy");

TEST_CASE("same seed twice gives byte-identical corpora") {
  ToyLanguageSpec spec = ToyLanguageSpec::builtin();
  ToyCorpus a = make_toy_corpus(spec, 60, 20, 20);
  ToyCorpus b = make_toy_corpus(spec, 60, 20, 20);
  REQUIRE(a.train.size() == b.train.size());
  for (size_t i = 0; i < a.train.size(); ++i) {
    CHECK(a.train[i].context == b.train[i].context);
    CHECK(a.train[i].question == b.train[i].question);
    CHECK(a.train[i].answer_start == b.train[i].answer_start);
  }
  ToyLanguageSpec other = spec;
  other.seed = 8;
  ToyCorpus c = make_toy_corpus(other, 60, 20, 20);
  CHECK(c.train[0].context != a.train[0].context);
}

TEST_CASE("every generated answer occurs at its recorded offset") {
  ToyLanguageSpec spec = ToyLanguageSpec::builtin();
  ToyCorpus corpus = make_toy_corpus(spec, 150, 50, 50);
  for (const auto* split : {&corpus.train, &corpus.dev, &corpus.unlabeled})
    for (const QAExample& ex : *split) CHECK_NOTHROW(ex.validate());
}

TEST_CASE("seed 7, n_train=200: train/dev context intersection is empty") {
  ToyLanguageSpec spec = ToyLanguageSpec::builtin();
  spec.seed = 7;
  ToyCorpus corpus = make_toy_corpus(spec, 200, 80, 0);
  std::set<std::string> train_ctx;
  for (const QAExample& ex : corpus.train) train_ctx.insert(ex.context);
  for (const QAExample& ex : corpus.dev) CHECK(train_ctx.count(ex.context) == 0);
}

TEST_CASE("unlabeled split carries spans but no questions") {
  ToyLanguageSpec spec = ToyLanguageSpec::builtin();
  ToyCorpus corpus = make_toy_corpus(spec, 10, 0, 30);
  CHECK(corpus.unlabeled.size() == 30);
  for (const QAExample& ex : corpus.unlabeled) {
    CHECK_FALSE(ex.question.has_value());
    CHECK_FALSE(ex.answer_text.empty());
  }
}

TEST_CASE("requested size beyond template capacity errors") {
  ToyLanguageSpec spec = ToyLanguageSpec::builtin();
  spec.first_names = {"ada"};
  spec.last_names = {"archer"};
  spec.cities = {"paris", "berlin"};
  spec.subjects = {"law"};
  spec.year_min = spec.year_max = 1850;
  // With one name and two cities only a handful of distinct contexts exist.
  CHECK_THROWS_AS(make_toy_corpus(spec, 500, 0, 0), DataError);
}

TEST_CASE("generator tags are reproduced exactly by the rule tagger") {
  ToyLanguageSpec spec = ToyLanguageSpec::builtin();
  ToyCorpus corpus = make_toy_corpus(spec, 80, 0, 0);
  auto tagger = spec.make_tagger();
  for (const QAExample& ex : corpus.train) {
    auto toks = tokenize(ex.context);
    std::vector<int> pos, ner;
    tagger->tag(toks, &pos, &ner);
    // Reconstruct expected tags from the lexicons the generator used.
    for (size_t i = 0; i < toks.size(); ++i) {
      const std::string& t = toks[i].text;
      if (is_year_token(t)) {
        CHECK(ner[i] == tags::ner_id("DATE"));
      } else if (std::find(spec.cities.begin(), spec.cities.end(), t) != spec.cities.end()) {
        CHECK(ner[i] == tags::ner_id("LOC"));
      } else if (std::find(spec.first_names.begin(), spec.first_names.end(), t) !=
                     spec.first_names.end() ||
                 std::find(spec.last_names.begin(), spec.last_names.end(), t) !=
                     spec.last_names.end()) {
        CHECK(ner[i] == tags::ner_id("PERSON"));
      } else {
        CHECK(ner[i] == tags::ner_id("O"));
      }
    }
  }
}

TEST_CASE("paraphrase pairs: positives share semantics, labels balanced") {
  ToyLanguageSpec spec = ToyLanguageSpec::builtin();
  auto pairs = make_paraphrase_pairs(spec, 200);
  REQUIRE(pairs.size() == 200);
  int pos = 0;
  for (const ParaphrasePair& p : pairs) {
    if (p.label == 1) {
      ++pos;
      CHECK(p.question_a != p.question_b);  // two distinct template variants
    }
  }
  CHECK(pos == 100);

  auto again = make_paraphrase_pairs(spec, 200);
  for (size_t i = 0; i < pairs.size(); ++i) {
    CHECK(pairs[i].question_a == again[i].question_a);
    CHECK(pairs[i].label == again[i].label);
  }
}

TEST_CASE("wh-type detection matches answer types on gold questions") {
  ToyLanguageSpec spec = ToyLanguageSpec::builtin();
  ToyCorpus corpus = make_toy_corpus(spec, 200, 0, 0);
  for (const QAExample& ex : corpus.train) {
    AnswerType want = spec.answer_type(ex.answer_text);
    CHECK(want != AnswerType::Unknown);
    auto q_toks = token_texts(tokenize(*ex.question));
    CHECK(question_wh_type(q_toks) == want);
  }
}

TEST_CASE("toy spec config file round trip") {
  const std::string p = "build/tmp_toyspec.cfg";
  {
    std::ofstream out(p);
    out << "seed = 11\nyear_min = 1900\nyear_max = 1902\n";
    out << "[first_names]\nzoe\nmax\n[last_names]\nstone\n[cities]\nlima\nquito\n[subjects]\nlaw\n";
  }
  ToyLanguageSpec spec = ToyLanguageSpec::load(p);
  CHECK(spec.seed == 11);
  CHECK(spec.year_min == 1900);
  CHECK(spec.first_names == std::vector<std::string>{"zoe", "max"});
  CHECK(spec.cities.size() == 2);
  ToyCorpus corpus = make_toy_corpus(spec, 5, 2, 2);
  CHECK(corpus.train.size() == 5);
  std::remove(p.c_str());
}

TEST_SUITE_END();
