#pragma once

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qgen/nn/blocks.hpp"
#include "qgen/text/data.hpp"

namespace qgen::reward {

struct QAConfig {
  int word_dim = 32;
  int hidden = 64;  // per direction
  double dropout = 0.1;
  int max_span_len = 10;

  void validate() const;
  nlohmann::json to_json() const;
  static QAConfig from_json(const nlohmann::json& j);
};

// Question-conditioned span predictor: the question encodes to a fixed vector
// (BiLSTM + max-pool); the context runs through a BiLSTM over
// [token embedding; question vector]; two affine heads give start/end logits
// over the context positions.
class QAModel {
 public:
  QAConfig cfg;
  text::Vocabulary vocab;
  nn::ParameterSet params;

  static QAModel init(const QAConfig& cfg, const text::Vocabulary& vocab, nn::Rng& rng);
  void save(const std::string& path) const;
  static QAModel load(const std::string& path);

  struct SpanDists {
    nn::Val start_logp;  // log-softmax over M context positions
    nn::Val end_logp;
  };
  SpanDists span_dists(nn::ParamBinder& pb, const std::vector<int>& context_ids,
                       const std::vector<int>& question_ids, bool train, nn::Rng* rng) const;

  std::vector<int> token_ids(const std::vector<std::string>& tokens) const;

  // p_start(s) * p_end(e) for the labeled span; deterministic inference.
  double qap(const std::vector<std::string>& context_tokens,
             const std::vector<std::string>& question_tokens, int span_start, int span_end) const;

  // Greedy span decode: argmax start, then argmax end >= start within the
  // max-span-length window.
  std::pair<int, int> predict_span(const std::vector<std::string>& context_tokens,
                                   const std::vector<std::string>& question_tokens) const;
};

struct QATrainOptions {
  int batch_size = 32;
  int max_epochs = 80;
  int patience = 10;
  double lr = 0.001;
  uint64_t seed = 2;
  double stop_dev_em = 2.0;  // stop once dev EM reaches this (2 = never)
};

struct QATrainResult {
  QAModel model;  // best-on-dev-EM checkpoint
  double best_dev_em = -1.0;
  double best_dev_f1 = 0.0;
  int best_epoch = -1;
  int epochs_run = 0;
};

using QAMetricsSink = std::function<void(const nlohmann::json&)>;

// Supervised QA training on (context, question, span) triples; every example
// must carry a question. `synthetic` examples, when given, enter through the
// half-and-half mixing mini-batch iterator.
QATrainResult train_qa(const std::vector<text::QAExample>& train,
                       const std::vector<text::QAExample>& dev, const QAConfig& cfg,
                       const QATrainOptions& opt,
                       const std::vector<text::QAExample>* synthetic = nullptr,
                       const QAMetricsSink& sink = nullptr,
                       std::vector<std::pair<int, int>>* batch_audit = nullptr);

}  // namespace qgen::reward
