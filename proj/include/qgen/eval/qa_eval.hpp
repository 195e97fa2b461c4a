#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "qgen/model/qg.hpp"
#include "qgen/reward/qa.hpp"
#include "qgen/reward/qpc.hpp"

namespace qgen::eval {

struct QAEvalReport {
  double em = 0.0;  // [0,100]
  double f1 = 0.0;  // [0,100]
  int examples = 0;
  std::vector<std::pair<std::string, std::string>> predictions;  // (id, answer text)

  nlohmann::json to_json() const;
};

// Greedy span decoding over a labeled dataset; corpus EM/F1 as mean x 100.
QAEvalReport evaluate_qa(const reward::QAModel& qa, const std::vector<text::QAExample>& dataset);

void save_predictions_jsonl(const std::string& path, const QAEvalReport& report);

struct QaBasedEvalConfig {
  reward::QAConfig qa;
  reward::QATrainOptions train;
  int beam_size = 1;
  int max_len = 20;
  int block_ngram = 3;
  double synthetic_dev_fraction = 0.1;  // held-out slice for early stopping
};

// The four-step pipeline: annotate questions on the unlabeled pool with the
// QG model, train a fresh QA model on that synthetic set only, evaluate on
// real_dev. Errors if the pools share context strings.
QAEvalReport qa_based_qg_eval(const model::QGModel& qg,
                              const std::vector<text::QAExample>& unlabeled_with_spans,
                              const std::vector<text::QAExample>& real_dev,
                              const text::Tagger& tagger, const QaBasedEvalConfig& cfg);

// Same pipeline with caller-provided questions (the ground-truth oracle and
// shuffled-question baselines plug in here).
QAEvalReport qa_eval_on_annotations(const std::vector<text::QAExample>& annotated,
                                    const std::vector<text::QAExample>& real_dev,
                                    const QaBasedEvalConfig& cfg);

struct QGEvalReport {
  double bleu4 = 0.0;              // corpus, [0,100]
  double rouge_l = 0.0;            // mean sentence, [0,100]
  double q_bleu1 = 0.0;            // mean, [0,1]
  double qpp = -1.0;               // mean, [0,1]; -1 when no QPC given
  double qap = -1.0;               // mean, [0,1]; -1 when no QA given
  int examples = 0;
  nlohmann::json config_digest;

  nlohmann::json to_json() const;
};

// Question-quality report for a QG checkpoint over a labeled dataset (greedy
// decode per example).
QGEvalReport evaluate_qg(const model::QGModel& qg, const std::vector<text::QAExample>& dataset,
                         const text::Tagger& tagger, int max_len, int block_ngram,
                         const reward::QPCModel* qpc = nullptr, const reward::QAModel* qa = nullptr);

}  // namespace qgen::eval
