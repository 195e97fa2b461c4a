#include "qgen/eval/qa_eval.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "qgen/eval/metrics.hpp"
#include "qgen/nn/kernels.hpp"

namespace qgen::eval {

nlohmann::json QAEvalReport::to_json() const {
  return {{"em", em}, {"f1", f1}, {"examples", examples}};
}

QAEvalReport evaluate_qa(const reward::QAModel& qa, const std::vector<text::QAExample>& dataset) {
  QAEvalReport rep;
  rep.examples = static_cast<int>(dataset.size());
  if (dataset.empty()) return rep;
  std::vector<double> em(dataset.size(), 0.0), f1(dataset.size(), 0.0);
  std::vector<std::string> preds(dataset.size());
  nn::kernels::for_each_index(static_cast<int>(dataset.size()), [&](int i) {
    const text::QAExample& ex = dataset[static_cast<size_t>(i)];
    if (!ex.question.has_value()) throw DataError("evaluate_qa: example " + ex.id + " has no question");
    std::vector<std::string> ctx = text::token_texts(text::tokenize(ex.context));
    std::vector<std::string> q = text::token_texts(text::tokenize(*ex.question));
    auto [s, e] = qa.predict_span(ctx, q);
    std::vector<std::string> span(ctx.begin() + s, ctx.begin() + e + 1);
    preds[static_cast<size_t>(i)] = text::join_tokens(span);
    auto [em_i, f1_i] = em_f1(preds[static_cast<size_t>(i)], {ex.answer_text});
    em[static_cast<size_t>(i)] = em_i;
    f1[static_cast<size_t>(i)] = f1_i;
  });
  double es = 0.0, fs = 0.0;
  for (size_t i = 0; i < dataset.size(); ++i) {
    es += em[i];
    fs += f1[i];
    rep.predictions.emplace_back(dataset[i].id, preds[i]);
  }
  rep.em = 100.0 * es / static_cast<double>(dataset.size());
  rep.f1 = 100.0 * fs / static_cast<double>(dataset.size());
  return rep;
}

void save_predictions_jsonl(const std::string& path, const QAEvalReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write predictions: " + path);
  for (const auto& [id, pred] : report.predictions) {
    nlohmann::json j;
    j["id"] = id;
    j["prediction"] = pred;
    out << j.dump() << '\n';
  }
}

QAEvalReport qa_eval_on_annotations(const std::vector<text::QAExample>& annotated,
                                    const std::vector<text::QAExample>& real_dev,
                                    const QaBasedEvalConfig& cfg) {
  if (annotated.empty()) throw DataError("qa-based eval: empty synthetic set");
  // Hold out a slice of the synthetic set for early stopping; the real dev
  // set is never seen before the final measurement.
  const int n_dev = std::max(1, static_cast<int>(annotated.size() * cfg.synthetic_dev_fraction));
  std::vector<text::QAExample> syn_train(annotated.begin(), annotated.end() - n_dev);
  std::vector<text::QAExample> syn_dev(annotated.end() - n_dev, annotated.end());
  if (syn_train.empty()) throw DataError("qa-based eval: synthetic set too small");
  reward::QATrainResult r = reward::train_qa(syn_train, syn_dev, cfg.qa, cfg.train);
  return evaluate_qa(r.model, real_dev);
}

QAEvalReport qa_based_qg_eval(const model::QGModel& qg,
                              const std::vector<text::QAExample>& unlabeled_with_spans,
                              const std::vector<text::QAExample>& real_dev,
                              const text::Tagger& tagger, const QaBasedEvalConfig& cfg) {
  std::set<std::string> dev_contexts;
  for (const text::QAExample& ex : real_dev) dev_contexts.insert(ex.context);
  for (const text::QAExample& ex : unlabeled_with_spans)
    if (dev_contexts.count(ex.context))
      throw DataError("qa-based eval: unlabeled pool shares a context with the dev set (leakage)");

  // Step 1+2: the QG model acts as the annotator.
  std::vector<text::QAExample> annotated(unlabeled_with_spans.size());
  nn::kernels::for_each_index(static_cast<int>(unlabeled_with_spans.size()), [&](int i) {
    text::QAExample ex = unlabeled_with_spans[static_cast<size_t>(i)];
    ex.question.reset();
    text::TokenizedExample tok = text::tokenize_example(ex, qg.vocab, tagger);
    model::QGStepScorer scorer(qg, tok);
    decode::DecodeConfig dcfg;
    dcfg.beam_size = cfg.beam_size;
    dcfg.max_len = cfg.max_len;
    dcfg.block_ngram = cfg.block_ngram;
    decode::BeamHypothesis hyp;
    if (cfg.beam_size > 1) {
      auto hyps = decode::beam_search(scorer, dcfg);
      hyp = hyps.front();
    } else {
      hyp = decode::greedy_decode(scorer, dcfg);
    }
    std::vector<std::string> toks = qg.token_strings(hyp.tokens, scorer.copy_map());
    ex.question = toks.empty() ? "what" : text::join_tokens(toks);
    annotated[static_cast<size_t>(i)] = std::move(ex);
  });

  // Steps 3+4: train a fresh QA model on the synthetic set, measure on dev.
  return qa_eval_on_annotations(annotated, real_dev, cfg);
}

nlohmann::json QGEvalReport::to_json() const {
  nlohmann::json j{{"bleu4", bleu4},
                   {"rouge_l", rouge_l},
                   {"q_bleu1", q_bleu1},
                   {"examples", examples},
                   {"config", config_digest}};
  if (qpp >= 0.0) j["qpp"] = qpp;
  if (qap >= 0.0) j["qap"] = qap;
  return j;
}

QGEvalReport evaluate_qg(const model::QGModel& qg, const std::vector<text::QAExample>& dataset,
                         const text::Tagger& tagger, int max_len, int block_ngram,
                         const reward::QPCModel* qpc, const reward::QAModel* qa) {
  QGEvalReport rep;
  rep.examples = static_cast<int>(dataset.size());
  if (dataset.empty()) return rep;

  struct Row {
    std::vector<std::string> hyp, ref;
    double rouge = 0.0, qb = 0.0, qpp = 0.0, qap = 0.0;
  };
  std::vector<Row> rows(dataset.size());
  nn::kernels::for_each_index(static_cast<int>(dataset.size()), [&](int i) {
    const text::QAExample& src = dataset[static_cast<size_t>(i)];
    if (!src.question.has_value()) throw DataError("eval-qg: example " + src.id + " has no question");
    text::QAExample stripped = src;
    stripped.question.reset();
    text::TokenizedExample tok = text::tokenize_example(stripped, qg.vocab, tagger);
    model::QGStepScorer scorer(qg, tok);
    decode::DecodeConfig dcfg;
    dcfg.max_len = max_len;
    dcfg.block_ngram = block_ngram;
    decode::BeamHypothesis hyp = decode::greedy_decode(scorer, dcfg);
    Row& row = rows[static_cast<size_t>(i)];
    row.hyp = qg.token_strings(hyp.tokens, scorer.copy_map());
    row.ref = text::token_texts(text::tokenize(*src.question));
    row.rouge = rouge_l(row.hyp, row.ref);
    row.qb = q_bleu1(row.hyp, row.ref, QBleuWeights{}, 0.66);
    if (qpc) row.qpp = row.hyp.empty() ? 0.0 : qpc->qpp(row.hyp, row.ref);
    if (qa) {
      int ts = 0, te = 0;
      bool snapped = false;
      std::vector<text::Token> ctx = text::tokenize(src.context);
      if (text::char_span_to_token_span(ctx, src.answer_start,
                                        src.answer_start + static_cast<int>(src.answer_text.size()),
                                        &ts, &te, &snapped) &&
          !row.hyp.empty())
        row.qap = qa->qap(text::token_texts(ctx), row.hyp, ts, te);
    }
  });

  std::vector<std::vector<std::string>> hyps, refs;
  double rouge_sum = 0.0, qb_sum = 0.0, qpp_sum = 0.0, qap_sum = 0.0;
  for (const Row& r : rows) {
    hyps.push_back(r.hyp);
    refs.push_back(r.ref);
    rouge_sum += r.rouge;
    qb_sum += r.qb;
    qpp_sum += r.qpp;
    qap_sum += r.qap;
  }
  const double n = static_cast<double>(dataset.size());
  rep.bleu4 = bleu4_corpus(hyps, refs);
  rep.rouge_l = rouge_sum / n;
  rep.q_bleu1 = qb_sum / n;
  if (qpc) rep.qpp = qpp_sum / n;
  if (qa) rep.qap = qap_sum / n;
  rep.config_digest = {{"max_len", max_len},
                       {"block_ngram", block_ngram},
                       {"rouge_beta", 1.2},
                       {"q_bleu1_delta", 0.66}};
  return rep;
}

}  // namespace qgen::eval
