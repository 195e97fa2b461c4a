#include "qgen/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qgen/nn/optim.hpp"
#include "qgen/train/batch.hpp"

namespace qgen::train {

using model::CopyMap;
using model::QGModel;
using nn::GradMap;
using nn::Graph;
using nn::ParamBinder;
using nn::Rng;
using nn::Val;

void TrainConfig::validate() const {
  if (batch_size < 1) throw DataError("train config: batch size must be >= 1");
  if (max_epochs < 1) throw DataError("train config: epochs must be >= 1");
  if (patience < 1) throw DataError("train config: patience must be >= 1");
  if (gamma_qpp < 0.0 || gamma_qpp > 1.0 || gamma_qap < 0.0 || gamma_qap > 1.0 ||
      gamma_metric < 0.0 || gamma_metric > 1.0)
    throw DataError("train config: gamma must be in [0,1]");
  if (alt_n < 0 || alt_m < 0 || alt_n + alt_m < 1)
    throw DataError("train config: alternation rate n:m needs n+m >= 1");
  if (sample_max_len < 1) throw DataError("train config: sample max length must be >= 1");
}

PreparedCorpus PreparedCorpus::build(const std::vector<text::QAExample>& data, const QGModel& m,
                                     const text::Tagger& tagger, bool require_question) {
  PreparedCorpus out;
  out.raw = data;
  out.tok.reserve(data.size());
  out.cmap.reserve(data.size());
  out.targets.reserve(data.size());
  for (const text::QAExample& ex : data) {
    if (require_question && !ex.question.has_value())
      throw DataError("corpus: example " + ex.id + " has no question");
    text::TokenizedExample t = text::tokenize_example(ex, m.vocab, tagger);
    CopyMap cm = model::build_copy_map(t.context_tokens, t.context_ids, m.vocab, m.cfg.copy_enabled);
    if (t.has_question)
      out.targets.push_back(m.question_target_ids(t, cm));
    else
      out.targets.emplace_back();
    out.tok.push_back(std::move(t));
    out.cmap.push_back(std::move(cm));
  }
  return out;
}

namespace {
double example_tf_loss(const QGModel& m, const PreparedCorpus& data, int idx, bool train,
                       Rng* rng, GradMap* grads, int* correct, int* steps) {
  Graph g;
  ParamBinder pb(g, m.params);
  QGModel::TeacherForced tf = m.forward_teacher_forced(
      pb, data.tok[static_cast<size_t>(idx)], data.targets[static_cast<size_t>(idx)],
      data.cmap[static_cast<size_t>(idx)], train, rng);
  if (grads) g.backward(tf.loss, *grads);
  if (correct) *correct += tf.correct;
  if (steps) *steps += static_cast<int>(tf.targets.size());
  return g.scalar(tf.loss);
}
}  // namespace

double dataset_loss(const QGModel& model, const PreparedCorpus& data) {
  if (data.size() == 0) return 0.0;
  std::vector<double> losses(data.size(), 0.0);
  nn::kernels::for_each_index(static_cast<int>(data.size()), [&](int i) {
    losses[static_cast<size_t>(i)] = example_tf_loss(model, data, i, false, nullptr, nullptr, nullptr, nullptr);
  });
  double s = 0.0;
  for (double l : losses) s += l;
  return s / static_cast<double>(data.size());
}

double next_token_accuracy(const QGModel& model, const PreparedCorpus& data) {
  if (data.size() == 0) return 0.0;
  std::vector<int> correct(data.size(), 0), steps(data.size(), 0);
  nn::kernels::for_each_index(static_cast<int>(data.size()), [&](int i) {
    example_tf_loss(model, data, i, false, nullptr, nullptr, &correct[static_cast<size_t>(i)],
                    &steps[static_cast<size_t>(i)]);
  });
  long long c = 0, t = 0;
  for (size_t i = 0; i < data.size(); ++i) {
    c += correct[i];
    t += steps[i];
  }
  return t == 0 ? 0.0 : static_cast<double>(c) / static_cast<double>(t);
}

TrainResult train_teacher_forcing(QGModel& model, const PreparedCorpus& train,
                                  const PreparedCorpus& dev, const TrainConfig& cfg,
                                  const MetricsSink& sink) {
  cfg.validate();
  if (train.size() == 0) throw DataError("teacher forcing: empty dataset");

  nn::OptimState optim;
  optim.lr = cfg.lr;
  TrainResult result;
  result.best_params = model.params;
  double best_dev = std::numeric_limits<double>::infinity();
  Rng shuffle_rng(Rng::mix(cfg.seed, 0x74665f31ull));
  int since_best = 0;
  uint64_t global_step = 0;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    std::vector<int> order = shuffled_indices(static_cast<int>(train.size()), shuffle_rng);
    double epoch_loss = 0.0;
    int batches = 0;
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch_size)) {
      ++global_step;
      const size_t end = std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
      GradMap grads;
      const double loss = batch_gradients(
          static_cast<int>(end - start), grads, [&](int bi, GradMap& g_out) {
            const int idx = order[start + static_cast<size_t>(bi)];
            Rng ex_rng(Rng::mix(cfg.seed, Rng::mix(global_step, static_cast<uint64_t>(idx))));
            return example_tf_loss(model, train, idx, true, &ex_rng, &g_out, nullptr, nullptr);
          });
      if (cfg.max_grad_norm > 0.0) nn::clip_grad_norm(grads, cfg.max_grad_norm);
      adam_step(model.params, grads, optim);
      epoch_loss += loss;
      ++batches;
    }
    result.epochs_run = epoch + 1;
    result.epoch_train_loss.push_back(batches > 0 ? epoch_loss / batches : 0.0);

    const double dev_loss = dev.size() > 0 ? dataset_loss(model, dev) : result.epoch_train_loss.back();
    if (sink)
      sink({{"phase", "teacher_forcing"},
            {"epoch", epoch},
            {"train_loss", result.epoch_train_loss.back()},
            {"dev_loss", dev_loss}});

    if (dev_loss < best_dev) {
      best_dev = dev_loss;
      result.best_dev_metric = dev_loss;
      result.best_epoch = epoch;
      result.best_params = model.params;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
    if (cfg.stop_train_accuracy <= 1.0 && next_token_accuracy(model, train) >= cfg.stop_train_accuracy) {
      result.best_params = model.params;
      result.best_epoch = epoch;
      break;
    }
  }
  return result;
}

double mixed_loss(double ml_loss, double rl_loss, double gamma) {
  if (gamma < 0.0 || gamma > 1.0) throw DataError("mixed_loss: gamma must be in [0,1]");
  return gamma * rl_loss + (1.0 - gamma) * ml_loss;
}

std::vector<reward::RewardKind> make_batch_plan(int n, int m, int num_batches) {
  if (n < 0 || m < 0 || n + m < 1) throw DataError("batch plan: n:m needs n+m >= 1");
  std::vector<reward::RewardKind> plan;
  plan.reserve(static_cast<size_t>(num_batches));
  int pos = 0;
  const int cycle = n + m;
  for (int b = 0; b < num_batches; ++b, pos = (pos + 1) % cycle)
    plan.push_back(pos < n ? reward::RewardKind::QPP : reward::RewardKind::QAP);
  return plan;
}

namespace {
// Builds -(r_s - b) * meanlogp (or sum) on a fresh graph for the sampled
// sequence and optionally adds the teacher-forced ML term.
struct RlExampleOut {
  double rl_loss = 0.0;
  double ml_loss = 0.0;
  double r_sample = 0.0;
  double r_greedy = 0.0;
  std::vector<int> sampled;
};

RlExampleOut rl_example(const QGModel& m, const text::TokenizedExample& tok, const CopyMap& cmap,
                        const std::vector<int>& gold_targets, const reward::RlContext& ctx,
                        const reward::RewardFn& reward_fn, const TrainConfig& cfg, double gamma,
                        bool with_ml, Rng& ex_rng, GradMap* grads) {
  decode::DecodeConfig dcfg;
  dcfg.max_len = cfg.sample_max_len;
  dcfg.block_ngram = 0;  // blocking is a generation-time device only

  model::QGStepScorer sample_scorer(m, tok);
  auto [sampled, step_logps] = decode::sample_decode(sample_scorer, dcfg, ex_rng);
  model::QGStepScorer greedy_scorer(m, tok);
  decode::BeamHypothesis greedy = decode::greedy_decode(greedy_scorer, dcfg);

  RlExampleOut out;
  out.sampled = sampled.tokens;
  const std::vector<std::string> sample_strs = m.token_strings(sampled.tokens, cmap);
  const std::vector<std::string> greedy_strs = m.token_strings(greedy.tokens, cmap);
  out.r_sample = reward_fn(sample_strs, ctx);
  out.r_greedy = reward_fn(greedy_strs, ctx);
  if (!std::isfinite(out.r_sample) || !std::isfinite(out.r_greedy))
    throw NumericError("rl step: non-finite reward");
  const double advantage = out.r_sample - out.r_greedy;

  // Re-score the sampled sequence with gradients; the advantage is a constant.
  std::vector<int> sample_targets = sampled.tokens;
  sample_targets.push_back(text::Vocabulary::kEos);

  Graph g;
  ParamBinder pb(g, m.params);
  QGModel::TeacherForced rl_tf =
      m.forward_teacher_forced(pb, tok, sample_targets, cmap, /*train=*/false, nullptr);
  // rl_tf.loss is mean NLL; L_RL = advantage * NLL (mean or sum by config).
  Val nll = rl_tf.loss;
  if (!cfg.rl_length_mean) nll = g.scale(nll, static_cast<double>(sample_targets.size()));
  Val rl_loss_v = g.scale(nll, advantage);
  out.rl_loss = g.scalar(rl_loss_v);

  Val total = rl_loss_v;
  if (with_ml) {
    Rng ml_rng = ex_rng.child(0x6d6cull);
    QGModel::TeacherForced ml_tf =
        m.forward_teacher_forced(pb, tok, gold_targets, cmap, /*train=*/true, &ml_rng);
    out.ml_loss = g.scalar(ml_tf.loss);
    total = g.add(g.scale(rl_loss_v, gamma), g.scale(ml_tf.loss, 1.0 - gamma));
  }
  if (grads) g.backward(total, *grads);
  return out;
}
}  // namespace

RlStepOut rl_step(const QGModel& model, const text::TokenizedExample& tok, const CopyMap& cmap,
                  const reward::RlContext& ctx, const reward::RewardFn& reward_fn,
                  const TrainConfig& cfg, Rng& rng) {
  RlStepOut out;
  RlExampleOut r = rl_example(model, tok, cmap, {}, ctx, reward_fn, cfg, 1.0, false, rng, &out.grads);
  out.loss = r.rl_loss;
  out.reward_sample = r.r_sample;
  out.reward_greedy = r.r_greedy;
  out.sampled_tokens = r.sampled;
  return out;
}

const reward::RewardFn& RlTrainSpec::fn_for(reward::RewardKind k) const {
  switch (k) {
    case reward::RewardKind::QPP: return qpp_fn;
    case reward::RewardKind::QAP: return qap_fn;
    default: return metric_fn;
  }
}

double mean_greedy_reward(const QGModel& model, const PreparedCorpus& data,
                          const reward::RewardFn& fn, int max_len) {
  if (data.size() == 0) return 0.0;
  std::vector<double> r(data.size(), 0.0);
  nn::kernels::for_each_index(static_cast<int>(data.size()), [&](int i) {
    decode::DecodeConfig dcfg;
    dcfg.max_len = max_len;
    model::QGStepScorer scorer(model, data.tok[static_cast<size_t>(i)]);
    decode::BeamHypothesis hyp = decode::greedy_decode(scorer, dcfg);
    reward::RlContext ctx{&data.raw[static_cast<size_t>(i)], &data.tok[static_cast<size_t>(i)]};
    r[static_cast<size_t>(i)] = fn(model.token_strings(hyp.tokens, data.cmap[static_cast<size_t>(i)]), ctx);
  });
  double s = 0.0;
  for (double x : r) s += x;
  return s / static_cast<double>(data.size());
}

TrainResult multi_reward_train(QGModel& model, const PreparedCorpus& train,
                               const PreparedCorpus& dev, const RlTrainSpec& spec,
                               const TrainConfig& cfg, const MetricsSink& sink) {
  cfg.validate();
  if (train.size() == 0) throw DataError("rl training: empty dataset");
  if (spec.kinds.empty()) throw DataError("rl training: no reward kinds enabled");

  nn::OptimState optim;
  optim.lr = cfg.rl_lr;
  TrainResult result;
  result.best_params = model.params;
  double best_dev = -std::numeric_limits<double>::infinity();
  Rng shuffle_rng(Rng::mix(cfg.seed, 0x726c5f31ull));
  int since_best = 0;
  uint64_t global_step = 0;

  auto gamma_of = [&cfg](reward::RewardKind k) {
    switch (k) {
      case reward::RewardKind::QPP: return cfg.gamma_qpp;
      case reward::RewardKind::QAP: return cfg.gamma_qap;
      default: return cfg.gamma_metric;
    }
  };

  auto dev_reward = [&]() {
    if (dev.size() == 0) return 0.0;
    double total = 0.0;
    for (reward::RewardKind k : spec.kinds)
      total += mean_greedy_reward(model, dev, spec.fn_for(k), cfg.sample_max_len);
    return total / static_cast<double>(spec.kinds.size());
  };

  // The alternation walks batches, not epochs; the plan position persists
  // across epoch boundaries.
  const bool alternating = spec.kinds.size() > 1;
  int plan_pos = 0;
  const int cycle = cfg.alt_n + cfg.alt_m;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    std::vector<int> order = shuffled_indices(static_cast<int>(train.size()), shuffle_rng);
    double epoch_loss = 0.0, epoch_rs = 0.0, epoch_rg = 0.0;
    int batches = 0, examples = 0;
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch_size)) {
      ++global_step;
      reward::RewardKind kind = spec.kinds[0];
      if (alternating) {
        kind = plan_pos < cfg.alt_n ? reward::RewardKind::QPP : reward::RewardKind::QAP;
        plan_pos = (plan_pos + 1) % cycle;
      }
      const reward::RewardFn& fn = spec.fn_for(kind);
      const double gamma = gamma_of(kind);

      const size_t end = std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
      std::vector<double> rs(end - start, 0.0), rg(end - start, 0.0);
      GradMap grads;
      const double loss = batch_gradients(
          static_cast<int>(end - start), grads, [&](int bi, GradMap& g_out) {
            const int idx = order[start + static_cast<size_t>(bi)];
            Rng ex_rng(Rng::mix(cfg.seed, Rng::mix(global_step, static_cast<uint64_t>(idx))));
            reward::RlContext ctx{&train.raw[static_cast<size_t>(idx)],
                                  &train.tok[static_cast<size_t>(idx)]};
            RlExampleOut r = rl_example(model, train.tok[static_cast<size_t>(idx)],
                                        train.cmap[static_cast<size_t>(idx)],
                                        train.targets[static_cast<size_t>(idx)], ctx, fn, cfg, gamma,
                                        /*with_ml=*/true, ex_rng, &g_out);
            rs[static_cast<size_t>(bi)] = r.r_sample;
            rg[static_cast<size_t>(bi)] = r.r_greedy;
            return mixed_loss(r.ml_loss, r.rl_loss, gamma);
          });
      if (cfg.max_grad_norm > 0.0) nn::clip_grad_norm(grads, cfg.max_grad_norm);
      adam_step(model.params, grads, optim);
      epoch_loss += loss;
      ++batches;
      for (double x : rs) epoch_rs += x;
      for (double x : rg) epoch_rg += x;
      examples += static_cast<int>(end - start);
    }
    result.epochs_run = epoch + 1;
    result.epoch_train_loss.push_back(batches > 0 ? epoch_loss / batches : 0.0);

    const double dr = dev_reward();
    if (sink)
      sink({{"phase", "rl"},
            {"epoch", epoch},
            {"train_mixed_loss", result.epoch_train_loss.back()},
            {"mean_sample_reward", examples > 0 ? epoch_rs / examples : 0.0},
            {"mean_greedy_reward", examples > 0 ? epoch_rg / examples : 0.0},
            {"dev_reward", dr}});

    if (dr > best_dev) {
      best_dev = dr;
      result.best_dev_metric = dr;
      result.best_epoch = epoch;
      result.best_params = model.params;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  return result;
}

}  // namespace qgen::train
