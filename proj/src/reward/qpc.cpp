#include "qgen/reward/qpc.hpp"

#include <algorithm>

#include "qgen/model/checkpoint.hpp"
#include "qgen/nn/optim.hpp"
#include "qgen/train/batch.hpp"

namespace qgen::reward {

using nn::Graph;
using nn::ParamBinder;
using nn::Rng;
using nn::Tensor;
using nn::Val;

void QPCConfig::validate() const {
  if (word_dim < 1 || hidden < 1 || mlp_hidden < 1) throw DataError("qpc config: dims must be positive");
  if (layers < 1 || layers > 2) throw DataError("qpc config: layers must be 1 or 2");
  if (dropout < 0.0 || dropout >= 1.0) throw DataError("qpc config: dropout must be in [0,1)");
}

nlohmann::json QPCConfig::to_json() const {
  return {{"word_dim", word_dim}, {"hidden", hidden},  {"layers", layers},
          {"mlp_hidden", mlp_hidden}, {"dropout", dropout}};
}

QPCConfig QPCConfig::from_json(const nlohmann::json& j) {
  QPCConfig c;
  c.word_dim = j.at("word_dim").get<int>();
  c.hidden = j.at("hidden").get<int>();
  c.layers = j.at("layers").get<int>();
  c.mlp_hidden = j.at("mlp_hidden").get<int>();
  c.dropout = j.at("dropout").get<double>();
  c.validate();
  return c;
}

QPCModel QPCModel::init(const QPCConfig& cfg, const text::Vocabulary& vocab, Rng& rng) {
  cfg.validate();
  QPCModel m;
  m.cfg = cfg;
  m.vocab = vocab;
  const int h = cfg.hidden;
  m.params.add("emb.word", nn::init_uniform({vocab.size(), cfg.word_dim}, cfg.word_dim, rng));
  for (int l = 0; l < cfg.layers; ++l) {
    const int in = l == 0 ? cfg.word_dim : 2 * h;
    for (const char* dir : {"fwd", "bwd"}) {
      const std::string p = "enc.l" + std::to_string(l) + "." + dir;
      m.params.add(p + ".Wx", nn::init_uniform({4 * h, in}, in, rng));
      m.params.add(p + ".Wh", nn::init_uniform({4 * h, h}, h, rng));
      m.params.add(p + ".b", nn::init_lstm_bias(h));
    }
  }
  const int feat = 4 * 2 * h;  // [q1, q2, |q1-q2|, q1*q2]
  m.params.add("mlp.W1", nn::init_uniform({cfg.mlp_hidden, feat}, feat, rng));
  m.params.add("mlp.b1", Tensor::zeros({cfg.mlp_hidden}));
  m.params.add("mlp.W2", nn::init_uniform({2, cfg.mlp_hidden}, cfg.mlp_hidden, rng));
  m.params.add("mlp.b2", Tensor::zeros({2}));
  return m;
}

void QPCModel::save(const std::string& path) const {
  nlohmann::json header;
  header["type"] = "qpc";
  header["config"] = cfg.to_json();
  header["vocab"] = vocab.to_json();
  model::write_checkpoint(path, "QPCK", header, params);
}

QPCModel QPCModel::load(const std::string& path) {
  model::Checkpoint ck = model::read_checkpoint(path, "QPCK");
  QPCModel m;
  m.cfg = QPCConfig::from_json(ck.header.at("config"));
  m.vocab = text::Vocabulary::from_json(ck.header.at("vocab"));
  m.params = std::move(ck.params);
  return m;
}

namespace {
std::vector<Val> run_dir(ParamBinder& pb, const std::string& prefix, const std::vector<Val>& inputs,
                         bool backward, int hidden, double dropout, bool train, Rng* rng) {
  Graph& g = pb.graph();
  Val Wx = pb(prefix + ".Wx");
  Val Wh = pb(prefix + ".Wh");
  Val b = pb(prefix + ".b");
  Val h = g.input(Tensor::zeros({hidden}));
  Val c = g.input(Tensor::zeros({hidden}));
  const int m = static_cast<int>(inputs.size());
  std::vector<Val> out(static_cast<size_t>(m));
  for (int step = 0; step < m; ++step) {
    const int i = backward ? m - 1 - step : step;
    Val x = inputs[static_cast<size_t>(i)];
    if (train && dropout > 0.0 && rng) x = nn::dropout(g, x, dropout, *rng, true);
    auto [nh, nc] = nn::lstm_step(g, x, h, c, Wx, Wh, b);
    h = nh;
    c = nc;
    out[static_cast<size_t>(i)] = h;
  }
  return out;
}
}  // namespace

Val QPCModel::encode_question(ParamBinder& pb, const std::vector<int>& ids, bool train,
                              Rng* rng) const {
  if (ids.empty()) throw DataError("qpc: empty question");
  Graph& g = pb.graph();
  Val table = pb("emb.word");
  std::vector<Val> layer_in;
  layer_in.reserve(ids.size());
  for (int id : ids) {
    if (id < 0 || id >= vocab.size()) throw DataError("qpc: word id out of range");
    layer_in.push_back(g.row(table, id));
  }
  for (int l = 0; l < cfg.layers; ++l) {
    const std::string p = "enc.l" + std::to_string(l);
    std::vector<Val> fwd = run_dir(pb, p + ".fwd", layer_in, false, cfg.hidden, cfg.dropout, train, rng);
    std::vector<Val> bwd = run_dir(pb, p + ".bwd", layer_in, true, cfg.hidden, cfg.dropout, train, rng);
    std::vector<Val> merged(layer_in.size());
    for (size_t i = 0; i < layer_in.size(); ++i) merged[i] = g.concat({fwd[i], bwd[i]});
    layer_in = std::move(merged);
  }
  return g.max_over_time(layer_in);  // sentence embedding
}

Val QPCModel::prob_paraphrase(ParamBinder& pb, const std::vector<int>& ids_a,
                              const std::vector<int>& ids_b, bool train, Rng* rng) const {
  Graph& g = pb.graph();
  Val q1 = encode_question(pb, ids_a, train, rng);
  Val q2 = encode_question(pb, ids_b, train, rng);
  Val feats = g.concat({q1, q2, g.abs_(g.sub(q1, q2)), g.mul(q1, q2)});
  Val hid = g.tanh_(nn::affine(g, pb("mlp.W1"), feats, pb("mlp.b1")));
  Val logits = nn::affine(g, pb("mlp.W2"), hid, pb("mlp.b2"));
  return g.pick(g.softmax(logits), 1);
}

std::vector<int> QPCModel::token_ids(const std::vector<std::string>& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const std::string& t : tokens) ids.push_back(vocab.id(t));
  if (ids.empty()) ids.push_back(text::Vocabulary::kUnk);
  return ids;
}

double QPCModel::qpp(const std::vector<std::string>& question_a,
                     const std::vector<std::string>& question_b) const {
  Graph g;
  ParamBinder pb(g, params);
  Val p = prob_paraphrase(pb, token_ids(question_a), token_ids(question_b), false, nullptr);
  return g.scalar(p);
}

QPCTrainResult train_qpc(const std::vector<text::ParaphrasePair>& train,
                         const std::vector<text::ParaphrasePair>& dev, const QPCConfig& cfg,
                         const QPCTrainOptions& opt, const MetricsSink& sink) {
  if (train.empty()) throw DataError("train_qpc: empty training set");
  bool has_pos = false, has_neg = false;
  for (const auto& p : train) (p.label == 1 ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg) throw DataError("train_qpc: both classes must be present");

  // Vocabulary from the training pairs, in corpus order.
  text::Vocabulary vocab;
  for (const auto& p : train) {
    for (const auto& t : text::tokenize(p.question_a)) vocab.add(t.text);
    for (const auto& t : text::tokenize(p.question_b)) vocab.add(t.text);
  }
  Rng init_rng(opt.seed);
  QPCModel model = QPCModel::init(cfg, vocab, init_rng);

  auto ids_of = [&model](const text::ParaphrasePair& p) {
    return std::pair{model.token_ids(text::token_texts(text::tokenize(p.question_a))),
                     model.token_ids(text::token_texts(text::tokenize(p.question_b)))};
  };
  std::vector<std::pair<std::vector<int>, std::vector<int>>> train_ids, dev_ids;
  for (const auto& p : train) train_ids.push_back(ids_of(p));
  for (const auto& p : dev) dev_ids.push_back(ids_of(p));

  nn::OptimState optim;
  optim.lr = opt.lr;

  QPCTrainResult result{model, 0.0, -1, 0};
  Rng shuffle_rng(Rng::mix(opt.seed, 0x51504321ull));
  int since_best = 0;

  for (int epoch = 0; epoch < opt.max_epochs; ++epoch) {
    std::vector<int> order = train::shuffled_indices(static_cast<int>(train.size()), shuffle_rng);
    double epoch_loss = 0.0;
    int batches = 0;
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(opt.batch_size)) {
      const size_t end = std::min(order.size(), start + static_cast<size_t>(opt.batch_size));
      std::vector<int> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                             order.begin() + static_cast<std::ptrdiff_t>(end));
      nn::GradMap grads;
      const double loss = train::batch_gradients(
          static_cast<int>(batch.size()), grads, [&](int bi, nn::GradMap& g_out) {
            const int idx = batch[static_cast<size_t>(bi)];
            Graph g;
            ParamBinder pb(g, model.params);
            Rng ex_rng(Rng::mix(opt.seed, Rng::mix(static_cast<uint64_t>(epoch),
                                                   static_cast<uint64_t>(idx))));
            Val p1 = model.prob_paraphrase(pb, train_ids[static_cast<size_t>(idx)].first,
                                           train_ids[static_cast<size_t>(idx)].second, true, &ex_rng);
            // Binary cross-entropy over the two-way softmax.
            Val prob = train[static_cast<size_t>(idx)].label == 1
                           ? p1
                           : g.sub(g.input(Tensor::scalar(1.0)), p1);
            Val loss_v = g.scale(g.log_(prob), -1.0);
            g.backward(loss_v, g_out);
            return g.scalar(loss_v);
          });
      adam_step(model.params, grads, optim);
      epoch_loss += loss;
      ++batches;
    }
    result.epochs_run = epoch + 1;

    // Dev accuracy with the paraphrase class at probability > 0.5.
    int correct = 0;
    std::vector<int> preds(dev_ids.size(), 0);
    nn::kernels::for_each_index(static_cast<int>(dev_ids.size()), [&](int i) {
      Graph g;
      ParamBinder pb(g, model.params);
      Val p = model.prob_paraphrase(pb, dev_ids[static_cast<size_t>(i)].first,
                                    dev_ids[static_cast<size_t>(i)].second, false, nullptr);
      preds[static_cast<size_t>(i)] = g.scalar(p) > 0.5 ? 1 : 0;
    });
    for (size_t i = 0; i < dev.size(); ++i)
      if (preds[i] == dev[i].label) ++correct;
    const double acc = dev.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(dev.size());

    if (sink)
      sink({{"epoch", epoch},
            {"train_loss", batches > 0 ? epoch_loss / batches : 0.0},
            {"dev_accuracy", acc}});

    if (acc > result.best_dev_accuracy || result.best_epoch < 0) {
      result.best_dev_accuracy = acc;
      result.best_epoch = epoch;
      result.model.params = model.params;
      since_best = 0;
    } else if (++since_best >= opt.patience) {
      break;
    }
    if (result.best_dev_accuracy >= opt.stop_accuracy) break;
  }
  result.model.cfg = model.cfg;
  result.model.vocab = model.vocab;
  return result;
}

}  // namespace qgen::reward
