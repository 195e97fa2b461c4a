#pragma once

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qgen/nn/blocks.hpp"
#include "qgen/text/toy.hpp"

namespace qgen::reward {

struct QPCConfig {
  int word_dim = 32;
  int hidden = 64;  // per direction; paper scale uses 512
  int layers = 2;
  int mlp_hidden = 64;
  double dropout = 0.1;

  void validate() const;
  nlohmann::json to_json() const;
  static QPCConfig from_json(const nlohmann::json& j);
};

// Question paraphrase classifier: a shared 2-layer BiLSTM encoder with
// temporal max-pooling, then an MLP over [q1, q2, |q1-q2|, q1*q2].
class QPCModel {
 public:
  QPCConfig cfg;
  text::Vocabulary vocab;
  nn::ParameterSet params;

  static QPCModel init(const QPCConfig& cfg, const text::Vocabulary& vocab, nn::Rng& rng);
  void save(const std::string& path) const;
  static QPCModel load(const std::string& path);

  nn::Val encode_question(nn::ParamBinder& pb, const std::vector<int>& ids, bool train,
                          nn::Rng* rng) const;
  // Probability of the paraphrase class as a graph value.
  nn::Val prob_paraphrase(nn::ParamBinder& pb, const std::vector<int>& ids_a,
                          const std::vector<int>& ids_b, bool train, nn::Rng* rng) const;

  std::vector<int> token_ids(const std::vector<std::string>& tokens) const;

  // Inference: deterministic, no dropout.
  double qpp(const std::vector<std::string>& question_a, const std::vector<std::string>& question_b) const;
};

struct QPCTrainOptions {
  int batch_size = 32;
  int max_epochs = 50;
  int patience = 10;
  double lr = 0.001;
  uint64_t seed = 1;
  double stop_accuracy = 2.0;  // stop once dev accuracy reaches this (2 = never)
};

struct QPCTrainResult {
  QPCModel model;  // best-on-dev checkpoint
  double best_dev_accuracy = 0.0;
  int best_epoch = -1;
  int epochs_run = 0;
};

using MetricsSink = std::function<void(const nlohmann::json&)>;

QPCTrainResult train_qpc(const std::vector<text::ParaphrasePair>& train,
                         const std::vector<text::ParaphrasePair>& dev, const QPCConfig& cfg,
                         const QPCTrainOptions& opt, const MetricsSink& sink = nullptr);

}  // namespace qgen::reward
