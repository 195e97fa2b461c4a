#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "qgen/eval/metrics.hpp"
#include "qgen/reward/reward.hpp"

using namespace qgen;
using namespace qgen::reward;
using text::ToyLanguageSpec;

namespace {
QPCConfig small_qpc() {
  QPCConfig c;
  c.word_dim = 16;
  c.hidden = 24;
  c.mlp_hidden = 32;
  c.dropout = 0.0;
  return c;
}

QAConfig small_qa() {
  QAConfig c;
  c.word_dim = 16;
  c.hidden = 32;
  c.dropout = 0.0;
  return c;
}

std::vector<std::string> toks(const std::string& s) {
  return text::token_texts(text::tokenize(s));
}
}  // namespace

TEST_SUITE_BEGIN("reward");

TEST_CASE("qpp output lies strictly inside (0,1); identical questions encode identically") {
  ToyLanguageSpec spec = ToyLanguageSpec::builtin();
  auto pairs = text::make_paraphrase_pairs(spec, 20);
  text::Vocabulary vocab;
  for (const auto& p : pairs) {
    for (const auto& t : text::tokenize(p.question_a)) vocab.add(t.text);
    for (const auto& t : text::tokenize(p.question_b)) vocab.add(t.text);
  }
  nn::Rng rng(1);
  QPCModel m = QPCModel::init(small_qpc(), vocab, rng);
  for (const auto& p : pairs) {
    const double v = m.qpp(toks(p.question_a), toks(p.question_b));
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }

  // Shared encoders: |q1 - q2| is the zero vector for identical inputs.
  nn::Graph g;
  nn::ParamBinder pb(g, m.params);
  std::vector<int> ids = m.token_ids(toks(pairs[0].question_a));
  nn::Val q1 = m.encode_question(pb, ids, false, nullptr);
  nn::Val q2 = m.encode_question(pb, ids, false, nullptr);
  nn::Val diff = g.abs_(g.sub(q1, q2));
  for (double v : g.value(diff).v) CHECK(v == 0.0);
}

TEST_CASE("train_qpc: chance-level initial loss, determinism, toy accuracy >= 0.9") {
  ToyLanguageSpec spec = ToyLanguageSpec::builtin();
  auto pairs = text::make_paraphrase_pairs(spec, 560);
  std::vector<text::ParaphrasePair> train(pairs.begin(), pairs.begin() + 480);
  std::vector<text::ParaphrasePair> dev(pairs.begin() + 480, pairs.end());

  QPCTrainOptions opt;
  opt.max_epochs = 50;
  opt.patience = 50;
  opt.seed = 11;
  opt.stop_accuracy = 0.92;

  double first_loss = -1.0;
  auto sink = [&first_loss](const nlohmann::json& j) {
    if (first_loss < 0.0 && j.contains("train_loss")) first_loss = j["train_loss"].get<double>();
  };
  QPCTrainResult r1 = train_qpc(train, dev, small_qpc(), opt, sink);
  // Chance level for balanced binary data is ln 2.
  CHECK(first_loss == doctest::Approx(std::log(2.0)).epsilon(0.25));
  CHECK(r1.best_dev_accuracy >= 0.9);

  QPCTrainResult r2 = train_qpc(train, dev, small_qpc(), opt);
  CHECK(r1.best_dev_accuracy == r2.best_dev_accuracy);
  for (const auto& [name, t] : r1.model.params.tensors)
    CHECK(t.v == r2.model.params.get(name).v);  // bit-identical
}

TEST_CASE("train_qpc rejects single-class data") {
  ToyLanguageSpec spec = ToyLanguageSpec::builtin();
  auto pairs = text::make_paraphrase_pairs(spec, 40);
  std::vector<text::ParaphrasePair> only_pos;
  for (const auto& p : pairs)
    if (p.label == 1) only_pos.push_back(p);
  CHECK_THROWS_AS(train_qpc(only_pos, {}, small_qpc(), QPCTrainOptions{}), DataError);
}

TEST_CASE("qap: uniform untrained heads give exactly 1/M^2") {
  text::Vocabulary vocab;
  for (const char* w : {"ada", "was", "born", "in", "paris", "."}) vocab.add(w);
  nn::Rng rng(2);
  QAModel m = QAModel::init(small_qa(), vocab, rng);
  for (auto& [name, t] : m.params.tensors)
    for (double& v : t.v) v = 0.0;
  std::vector<std::string> ctx = {"ada", "was", "born", "in", "paris", "."};
  const double v = m.qap(ctx, {"where", "was", "ada", "born", "?"}, 4, 4);
  CHECK(v == doctest::Approx(1.0 / 36.0).epsilon(1e-9));
  CHECK(v >= 0.0);
  CHECK(v <= 1.0);
}

TEST_CASE("train_qa memorizes the toy train split and separates matched from swapped questions") {
  ToyLanguageSpec spec = ToyLanguageSpec::builtin();
  text::ToyCorpus corpus = text::make_toy_corpus(spec, 200, 0, 0);

  QATrainOptions opt;
  opt.max_epochs = 200;
  opt.patience = 200;
  opt.seed = 3;
  opt.stop_dev_em = 0.95;
  // dev = train: this is the memorization oracle
  QATrainResult r = train_qa(corpus.train, corpus.train, small_qa(), opt);
  CHECK(r.best_dev_em >= 0.95);
  CHECK(r.epochs_run <= 200);

  // Matched (context, gold question, span) triples must outscore triples with
  // questions swapped between examples.
  double matched = 0.0, swapped = 0.0;
  const int n = 40;
  for (int i = 0; i < n; ++i) {
    const text::QAExample& ex = corpus.train[static_cast<size_t>(i)];
    const text::QAExample& other = corpus.train[static_cast<size_t>((i + 7) % n)];
    auto ctx_toks = text::token_texts(text::tokenize(ex.context));
    auto q_match = toks(*ex.question);
    auto q_swap = toks(*other.question);
    std::vector<text::Token> ctk = text::tokenize(ex.context);
    int ts = 0, te = 0;
    bool sn = false;
    REQUIRE(text::char_span_to_token_span(ctk, ex.answer_start,
                                          ex.answer_start + static_cast<int>(ex.answer_text.size()),
                                          &ts, &te, &sn));
    matched += r.model.qap(ctx_toks, q_match, ts, te);
    swapped += r.model.qap(ctx_toks, q_swap, ts, te);
  }
  CHECK(matched / n > swapped / n);

  // Determinism contract: same seed, same dev EM.
  QATrainOptions opt2 = opt;
  opt2.max_epochs = 3;
  opt2.stop_dev_em = 2.0;
  QATrainResult a = train_qa(corpus.train, corpus.train, small_qa(), opt2);
  QATrainResult b = train_qa(corpus.train, corpus.train, small_qa(), opt2);
  CHECK(a.best_dev_em == b.best_dev_em);
}

TEST_CASE("train_qa rejects an example without a question") {
  ToyLanguageSpec spec = ToyLanguageSpec::builtin();
  text::ToyCorpus corpus = text::make_toy_corpus(spec, 5, 0, 5);
  std::vector<text::QAExample> bad = corpus.train;
  bad.push_back(corpus.unlabeled[0]);
  CHECK_THROWS_AS(train_qa(bad, {}, small_qa(), QATrainOptions{}), DataError);
}

TEST_CASE("metric rewards: identical 1.0, empty 0, matches the eval oracle") {
  RewardFn bleu = make_metric_reward(RewardKind::BLEU4);
  text::QAExample ex;
  ex.id = "x";
  ex.context = "a b c e .";
  ex.question = "a b c e";
  ex.answer_text = "a";
  ex.answer_start = 0;
  text::Vocabulary v = text::build_vocab({ex});
  text::RuleTagger tagger;
  text::TokenizedExample tok = text::tokenize_example(ex, v, tagger);
  RlContext ctx{&ex, &tok};
  CHECK(bleu(toks("a b c e"), ctx) == doctest::Approx(1.0));
  CHECK(bleu({}, ctx) == doctest::Approx(0.0));
  CHECK(bleu(toks("a b c d"), ctx) ==
        doctest::Approx(eval::bleu4_sentence(toks("a b c d"), toks("a b c e")) / 100.0));

  RewardFn rouge = make_metric_reward(RewardKind::ROUGEL);
  CHECK(rouge(toks("a b c e"), ctx) == doctest::Approx(1.0));
}

TEST_CASE("reward signals validate their declared ranges") {
  RewardSignal ok{0.5, RewardKind::QPP, "q", "id"};
  CHECK_NOTHROW(ok.validate());
  RewardSignal bad{1.5, RewardKind::QAP, "q", "id"};
  CHECK_THROWS_AS(bad.validate(), NumericError);
  RewardSignal metric{55.0, RewardKind::BLEU4, "q", "id"};
  CHECK_NOTHROW(metric.validate());
}

TEST_CASE("wh-match reward follows the answer type") {
  ToyLanguageSpec spec = ToyLanguageSpec::builtin();
  RewardFn wh = make_wh_match_reward(spec);
  text::QAExample ex;
  ex.id = "x";
  ex.context = "ada archer was born in paris in 1850 .";
  ex.question = "when was ada archer born ?";
  ex.answer_text = "1850";
  ex.answer_start = 32;
  ex.validate();
  text::Vocabulary v = text::build_vocab({ex});
  auto tagger = spec.make_tagger();
  text::TokenizedExample tok = text::tokenize_example(ex, v, *tagger);
  RlContext ctx{&ex, &tok};
  CHECK(wh(toks("when was ada archer born ?"), ctx) == 1.0);
  CHECK(wh(toks("in what year was ada archer born ?"), ctx) == 1.0);
  CHECK(wh(toks("where was ada archer born ?"), ctx) == 0.0);
}

TEST_SUITE_END();
