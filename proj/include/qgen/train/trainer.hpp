#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qgen/decode/decode.hpp"
#include "qgen/model/qg.hpp"
#include "qgen/reward/reward.hpp"

namespace qgen::train {

struct TrainConfig {
  int batch_size = 32;
  int max_epochs = 200;
  int patience = 10;
  double lr = 0.001;               // teacher forcing
  double rl_lr = 0.00001;          // RL fine-tuning
  double gamma_qpp = 0.99;
  double gamma_qap = 0.97;
  double gamma_metric = 0.99;      // mixed-loss gamma for metric/wh rewards
  int alt_n = 3;                   // QPP batches per cycle
  int alt_m = 1;                   // QAP batches per cycle
  uint64_t seed = 0;
  bool rl_length_mean = true;      // divergence flag: mean log-prob (default) vs sum
  double max_grad_norm = 0.0;      // 0 = no clipping
  int sample_max_len = 20;
  double stop_train_accuracy = 2.0;  // TF early exit on next-token accuracy (2 = never)

  void validate() const;
};

using MetricsSink = std::function<void(const nlohmann::json&)>;

// Pre-tokenized training view of a dataset.
struct PreparedCorpus {
  std::vector<text::QAExample> raw;
  std::vector<text::TokenizedExample> tok;
  std::vector<model::CopyMap> cmap;
  std::vector<std::vector<int>> targets;  // gold question ext ids + EOS

  static PreparedCorpus build(const std::vector<text::QAExample>& data, const model::QGModel& m,
                              const text::Tagger& tagger, bool require_question = true);
  size_t size() const { return tok.size(); }
};

struct TrainResult {
  nn::ParameterSet best_params;
  double best_dev_metric = 0.0;  // loss for TF (lower better), mean reward for RL (higher better)
  int best_epoch = -1;
  int epochs_run = 0;
  std::vector<double> epoch_train_loss;
};

// Teacher forcing with Adam; early stop on dev loss; returns the best-on-dev
// parameter snapshot.
TrainResult train_teacher_forcing(model::QGModel& model, const PreparedCorpus& train,
                                  const PreparedCorpus& dev, const TrainConfig& cfg,
                                  const MetricsSink& sink = nullptr);

// Next-token accuracy of the current parameters (greedy argmax vs gold).
double next_token_accuracy(const model::QGModel& model, const PreparedCorpus& data);

// Mean teacher-forced loss without dropout.
double dataset_loss(const model::QGModel& model, const PreparedCorpus& data);

// One REINFORCE step with the self-critical baseline on a single example:
// loss = -(r(sample) - r(greedy)) * mean_j log p(y_j). Gradients flow only
// through the log-probability term.
struct RlStepOut {
  double loss = 0.0;
  double reward_sample = 0.0;
  double reward_greedy = 0.0;
  nn::GradMap grads;
  std::vector<int> sampled_tokens;
};
RlStepOut rl_step(const model::QGModel& model, const text::TokenizedExample& tok,
                  const model::CopyMap& cmap, const reward::RlContext& ctx,
                  const reward::RewardFn& reward_fn, const TrainConfig& cfg, nn::Rng& rng);

double mixed_loss(double ml_loss, double rl_loss, double gamma);

// The n:m alternation pattern of reward kinds over `num_batches` batches.
std::vector<reward::RewardKind> make_batch_plan(int n, int m, int num_batches);

struct RlTrainSpec {
  std::vector<reward::RewardKind> kinds;  // one entry = single-reward training
  reward::RewardFn qpp_fn, qap_fn, metric_fn;
  const reward::RewardFn& fn_for(reward::RewardKind k) const;
};

// Mixed-loss RL fine-tuning with the n:m multi-reward alternation. Dev metric
// is the mean reward over the enabled kinds; best-on-dev checkpoint returned.
TrainResult multi_reward_train(model::QGModel& model, const PreparedCorpus& train,
                               const PreparedCorpus& dev, const RlTrainSpec& spec,
                               const TrainConfig& cfg, const MetricsSink& sink = nullptr);

// Mean reward of greedy decodes over a dataset.
double mean_greedy_reward(const model::QGModel& model, const PreparedCorpus& data,
                          const reward::RewardFn& fn, int max_len);

}  // namespace qgen::train
