#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include "qgen/augment/augment.hpp"
#include "qgen/text/toy.hpp"

using namespace qgen;
using namespace qgen::augment;

namespace {
struct World {
  text::ToyLanguageSpec spec = text::ToyLanguageSpec::builtin();
  text::ToyCorpus corpus = text::make_toy_corpus(spec, 16, 0, 10);
  text::Vocabulary vocab = text::build_vocab(corpus.train);
  std::shared_ptr<text::RuleTagger> tagger = spec.make_tagger();
  model::QGModel qg;
  reward::QAModel qa;

  World() : qg([&] {
      model::QGConfig cfg;
      cfg.word_dim = 8;
      cfg.ans_dim = 4;
      cfg.pos_dim = 4;
      cfg.ner_dim = 4;
      cfg.hidden = 8;
      cfg.dropout = 0.0;
      cfg.max_question_len = 8;
      nn::Rng rng(3);
      return model::QGModel::init(cfg, vocab, rng);
    }()), qa([&] {
      reward::QAConfig cfg;
      cfg.word_dim = 8;
      cfg.hidden = 8;
      cfg.dropout = 0.0;
      nn::Rng rng(4);
      return reward::QAModel::init(cfg, vocab, rng);
    }()) {}

  GenerateOptions opts(int beam) const {
    GenerateOptions o;
    o.decode.beam_size = beam;
    o.decode.max_len = 8;
    o.generator_id = "test-qg";
    return o;
  }
};
}  // namespace

TEST_SUITE_BEGIN("augment");

TEST_CASE("generate_from_existing: candidate counts") {
  World w;
  GenerateOptions o3 = w.opts(3);
  o3.dedup = false;
  auto cands = generate_from_existing(w.qg, w.corpus.train, *w.tagger, o3);
  CHECK(cands.size() <= 3 * w.corpus.train.size());
  for (const auto& s : cands) {
    CHECK(s.source == "existing");
    CHECK(s.beam_rank >= 1);
    CHECK(s.beam_rank <= 3);
    CHECK_FALSE(s.ex.question->empty());
  }

  GenerateOptions o1 = w.opts(1);
  o1.dedup = false;
  auto top1 = generate_from_existing(w.qg, w.corpus.train, *w.tagger, o1);
  CHECK(top1.size() == w.corpus.train.size());

  // Recount oracle: dedup removes exactly the repeated triples and gold echoes.
  GenerateOptions o3d = w.opts(3);
  o3d.dedup = true;
  auto deduped = generate_from_existing(w.qg, w.corpus.train, *w.tagger, o3d);
  std::set<std::string> uniq;
  int gold_echo = 0;
  for (const auto& s : cands) {
    std::string q = *s.ex.question;
    const auto& gold = w.corpus.train[static_cast<size_t>(
        std::find_if(w.corpus.train.begin(), w.corpus.train.end(),
                     [&](const text::QAExample& e) { return s.ex.context == e.context; }) -
        w.corpus.train.begin())];
    if (gold.question.has_value() && q == *gold.question) {
      ++gold_echo;
      continue;
    }
    uniq.insert(s.ex.context + "\x1f" + s.ex.answer_text + "\x1f" +
                std::to_string(s.ex.answer_start) + "\x1f" + q);
  }
  CHECK(deduped.size() == uniq.size());
}

TEST_CASE("generate_from_new: top-1 per record, leakage guard") {
  World w;
  auto out = generate_from_new(w.qg, w.corpus.unlabeled, *w.tagger, w.opts(2));
  CHECK(out.size() == w.corpus.unlabeled.size());
  for (const auto& s : out) {
    CHECK(s.source == "new");
    CHECK_FALSE(s.ex.question->empty());
    CHECK(text::tokenize(*s.ex.question).size() <= 8);
  }
  CHECK_THROWS_AS(generate_from_new(w.qg, w.corpus.train, *w.tagger, w.opts(1)), DataError);
}

TEST_CASE("qap_score_all: range and order independence") {
  World w;
  auto syn = generate_from_new(w.qg, w.corpus.unlabeled, *w.tagger, w.opts(1));
  qap_score_all(syn, w.qa);
  for (const auto& s : syn) {
    REQUIRE(s.qap_score.has_value());
    CHECK(*s.qap_score >= 0.0);
    CHECK(*s.qap_score <= 1.0);
  }
  auto shuffled = syn;
  std::reverse(shuffled.begin(), shuffled.end());
  for (auto& s : shuffled) s.qap_score.reset();
  qap_score_all(shuffled, w.qa);
  for (const auto& s : shuffled) {
    auto it = std::find_if(syn.begin(), syn.end(),
                           [&](const SyntheticExample& x) { return x.ex.id == s.ex.id; });
    REQUIRE(it != syn.end());
    CHECK(*s.qap_score == *it->qap_score);
  }
}

TEST_CASE("filter: identity at 0, nesting, idempotence, unscored error") {
  World w;
  auto syn = generate_from_new(w.qg, w.corpus.unlabeled, *w.tagger, w.opts(1));
  qap_score_all(syn, w.qa);

  FilterConfig zero;
  zero.epsilon = 0.0;
  zero.dedup = false;
  auto all = filter(syn, zero);
  CHECK(all.size() == syn.size());

  std::vector<size_t> sizes;
  std::vector<std::vector<SyntheticExample>> kept_sets;
  for (double eps : {0.0, 0.2, 0.4, 0.6, 0.8}) {
    FilterConfig fc;
    fc.epsilon = eps;
    fc.dedup = false;
    FilterReport rep;
    kept_sets.push_back(filter(syn, fc, nullptr, &rep));
    sizes.push_back(kept_sets.back().size());
    CHECK(rep.kept + rep.dropped == static_cast<int>(syn.size()));
  }
  for (size_t i = 1; i < sizes.size(); ++i) CHECK(sizes[i] <= sizes[i - 1]);
  // nesting: every kept id at higher epsilon appears at lower epsilon
  for (size_t i = 1; i < kept_sets.size(); ++i) {
    std::set<std::string> lower;
    for (const auto& s : kept_sets[i - 1]) lower.insert(s.ex.id);
    for (const auto& s : kept_sets[i]) CHECK(lower.count(s.ex.id) == 1);
  }

  FilterConfig fc;
  fc.epsilon = 0.4;
  fc.dedup = true;
  auto once = filter(syn, fc);
  auto twice = filter(once, fc);
  CHECK(once.size() == twice.size());

  auto unscored = syn;
  unscored[0].qap_score.reset();
  CHECK_THROWS_AS(filter(unscored, fc), DataError);
}

TEST_CASE("build_semi_dataset: separation, bookkeeping, id collisions") {
  World w;
  auto syn = generate_from_new(w.qg, w.corpus.unlabeled, *w.tagger, w.opts(1));
  qap_score_all(syn, w.qa);

  SemiDataset empty = build_semi_dataset(w.corpus.train, {});
  CHECK(empty.ground_truth.size() == w.corpus.train.size());
  CHECK(empty.synthetic.empty());

  SemiDataset semi = build_semi_dataset(w.corpus.train, syn);
  CHECK(semi.total_size() ==
        static_cast<int>(w.corpus.train.size()) + static_cast<int>(syn.size()));

  // source separation: new contexts never overlap ground truth
  std::set<std::string> gt_ctx;
  for (const auto& ex : semi.ground_truth) gt_ctx.insert(ex.context);
  for (const auto& ex : semi.synthetic) CHECK(gt_ctx.count(ex.context) == 0);

  auto colliding = syn;
  colliding[0].ex.id = w.corpus.train[0].id;
  CHECK_THROWS_AS(build_semi_dataset(w.corpus.train, colliding), DataError);
}

TEST_CASE("synthetic jsonl round trip is byte stable") {
  World w;
  auto syn = generate_from_new(w.qg, w.corpus.unlabeled, *w.tagger, w.opts(1));
  qap_score_all(syn, w.qa);
  const std::string p1 = "build/tmp_syn1.jsonl", p2 = "build/tmp_syn2.jsonl";
  save_synthetic_jsonl(p1, syn);
  auto loaded = load_synthetic_jsonl(p1);
  REQUIRE(loaded.size() == syn.size());
  CHECK(loaded[0].source == "new");
  CHECK(loaded[0].generator_id == "test-qg");
  save_synthetic_jsonl(p2, loaded);
  std::ifstream f1(p1), f2(p2);
  std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(s1 == s2);
  std::remove(p1.c_str());
  std::remove(p2.c_str());
}

TEST_SUITE_END();
