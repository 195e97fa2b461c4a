#include "qgen/reward/qa.hpp"

#include <algorithm>

#include "qgen/eval/metrics.hpp"
#include "qgen/model/checkpoint.hpp"
#include "qgen/nn/optim.hpp"
#include "qgen/train/batch.hpp"
#include "qgen/train/mixing.hpp"

namespace qgen::reward {

using nn::Graph;
using nn::ParamBinder;
using nn::Rng;
using nn::Tensor;
using nn::Val;

void QAConfig::validate() const {
  if (word_dim < 1 || hidden < 1) throw DataError("qa config: dims must be positive");
  if (dropout < 0.0 || dropout >= 1.0) throw DataError("qa config: dropout must be in [0,1)");
  if (max_span_len < 1) throw DataError("qa config: max span length must be >= 1");
}

nlohmann::json QAConfig::to_json() const {
  return {{"word_dim", word_dim}, {"hidden", hidden}, {"dropout", dropout},
          {"max_span_len", max_span_len}};
}

QAConfig QAConfig::from_json(const nlohmann::json& j) {
  QAConfig c;
  c.word_dim = j.at("word_dim").get<int>();
  c.hidden = j.at("hidden").get<int>();
  c.dropout = j.at("dropout").get<double>();
  c.max_span_len = j.at("max_span_len").get<int>();
  c.validate();
  return c;
}

QAModel QAModel::init(const QAConfig& cfg, const text::Vocabulary& vocab, Rng& rng) {
  cfg.validate();
  QAModel m;
  m.cfg = cfg;
  m.vocab = vocab;
  const int h = cfg.hidden;
  m.params.add("emb.word", nn::init_uniform({vocab.size(), cfg.word_dim}, cfg.word_dim, rng));
  for (const char* dir : {"fwd", "bwd"}) {
    const std::string p = std::string("q.") + dir;
    m.params.add(p + ".Wx", nn::init_uniform({4 * h, cfg.word_dim}, cfg.word_dim, rng));
    m.params.add(p + ".Wh", nn::init_uniform({4 * h, h}, h, rng));
    m.params.add(p + ".b", nn::init_lstm_bias(h));
  }
  const int ctx_in = cfg.word_dim + 2 * h;
  for (const char* dir : {"fwd", "bwd"}) {
    const std::string p = std::string("ctx.") + dir;
    m.params.add(p + ".Wx", nn::init_uniform({4 * h, ctx_in}, ctx_in, rng));
    m.params.add(p + ".Wh", nn::init_uniform({4 * h, h}, h, rng));
    m.params.add(p + ".b", nn::init_lstm_bias(h));
  }
  m.params.add("head.start.w", nn::init_uniform({1, 2 * h}, 2 * h, rng));
  m.params.add("head.start.b", Tensor::zeros({1}));
  m.params.add("head.end.w", nn::init_uniform({1, 2 * h}, 2 * h, rng));
  m.params.add("head.end.b", Tensor::zeros({1}));
  return m;
}

void QAModel::save(const std::string& path) const {
  nlohmann::json header;
  header["type"] = "qa";
  header["config"] = cfg.to_json();
  header["vocab"] = vocab.to_json();
  model::write_checkpoint(path, "QACK", header, params);
}

QAModel QAModel::load(const std::string& path) {
  model::Checkpoint ck = model::read_checkpoint(path, "QACK");
  QAModel m;
  m.cfg = QAConfig::from_json(ck.header.at("config"));
  m.vocab = text::Vocabulary::from_json(ck.header.at("vocab"));
  m.params = std::move(ck.params);
  return m;
}

namespace {
std::vector<Val> bilstm(ParamBinder& pb, const std::string& prefix, const std::vector<Val>& inputs,
                        int hidden, double dropout, bool train, Rng* rng) {
  Graph& g = pb.graph();
  std::vector<Val> fwd(inputs.size()), bwd(inputs.size());
  for (const bool backward : {false, true}) {
    const std::string p = prefix + (backward ? ".bwd" : ".fwd");
    Val Wx = pb(p + ".Wx");
    Val Wh = pb(p + ".Wh");
    Val b = pb(p + ".b");
    Val h = g.input(Tensor::zeros({hidden}));
    Val c = g.input(Tensor::zeros({hidden}));
    const int m = static_cast<int>(inputs.size());
    for (int step = 0; step < m; ++step) {
      const int i = backward ? m - 1 - step : step;
      Val x = inputs[static_cast<size_t>(i)];
      if (train && dropout > 0.0 && rng) x = nn::dropout(g, x, dropout, *rng, true);
      auto [nh, nc] = nn::lstm_step(g, x, h, c, Wx, Wh, b);
      h = nh;
      c = nc;
      (backward ? bwd : fwd)[static_cast<size_t>(i)] = h;
    }
  }
  Graph& gg = pb.graph();
  std::vector<Val> out(inputs.size());
  for (size_t i = 0; i < inputs.size(); ++i) out[i] = gg.concat({fwd[i], bwd[i]});
  return out;
}
}  // namespace

QAModel::SpanDists QAModel::span_dists(ParamBinder& pb, const std::vector<int>& context_ids,
                                       const std::vector<int>& question_ids, bool train,
                                       Rng* rng) const {
  if (context_ids.empty()) throw DataError("qa: empty context");
  if (question_ids.empty()) throw DataError("qa: empty question");
  Graph& g = pb.graph();
  Val table = pb("emb.word");

  std::vector<Val> q_emb;
  q_emb.reserve(question_ids.size());
  for (int id : question_ids) q_emb.push_back(g.row(table, id));
  std::vector<Val> q_enc = bilstm(pb, "q", q_emb, cfg.hidden, cfg.dropout, train, rng);
  Val q_vec = g.max_over_time(q_enc);

  std::vector<Val> ctx_in;
  ctx_in.reserve(context_ids.size());
  for (int id : context_ids) ctx_in.push_back(g.concat({g.row(table, id), q_vec}));
  std::vector<Val> ctx_enc = bilstm(pb, "ctx", ctx_in, cfg.hidden, cfg.dropout, train, rng);

  std::vector<Val> start_scores, end_scores;
  start_scores.reserve(ctx_enc.size());
  end_scores.reserve(ctx_enc.size());
  for (const Val& t : ctx_enc) {
    start_scores.push_back(nn::affine(g, pb("head.start.w"), t, pb("head.start.b")));
    end_scores.push_back(nn::affine(g, pb("head.end.w"), t, pb("head.end.b")));
  }
  SpanDists out;
  out.start_logp = g.log_softmax(g.concat(start_scores));
  out.end_logp = g.log_softmax(g.concat(end_scores));
  return out;
}

std::vector<int> QAModel::token_ids(const std::vector<std::string>& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const std::string& t : tokens) ids.push_back(vocab.id(t));
  if (ids.empty()) ids.push_back(text::Vocabulary::kUnk);
  return ids;
}

double QAModel::qap(const std::vector<std::string>& context_tokens,
                    const std::vector<std::string>& question_tokens, int span_start,
                    int span_end) const {
  const int m = static_cast<int>(context_tokens.size());
  if (span_start < 0 || span_end < span_start || span_end >= m)
    throw DataError("qap: invalid gold span");
  Graph g;
  ParamBinder pb(g, params);
  SpanDists d = span_dists(pb, token_ids(context_tokens), token_ids(question_tokens), false, nullptr);
  const double lp = g.value(d.start_logp).at(span_start) + g.value(d.end_logp).at(span_end);
  return std::exp(lp);
}

std::pair<int, int> QAModel::predict_span(const std::vector<std::string>& context_tokens,
                                          const std::vector<std::string>& question_tokens) const {
  Graph g;
  ParamBinder pb(g, params);
  SpanDists d = span_dists(pb, token_ids(context_tokens), token_ids(question_tokens), false, nullptr);
  const Tensor& s = g.value(d.start_logp);
  const Tensor& e = g.value(d.end_logp);
  const int m = s.dim(0);
  int best_s = 0;
  for (int i = 1; i < m; ++i)
    if (s.at(i) > s.at(best_s)) best_s = i;
  int best_e = best_s;
  const int limit = std::min(m, best_s + cfg.max_span_len);
  for (int j = best_s; j < limit; ++j)
    if (e.at(j) > e.at(best_e)) best_e = j;
  return {best_s, best_e};
}

namespace {
struct PreparedQA {
  std::vector<int> context_ids, question_ids;
  int span_start = 0, span_end = 0;
  std::vector<std::string> context_tokens;
  std::string answer_text;
};

PreparedQA prepare(const text::QAExample& ex, const QAModel& model) {
  if (!ex.question.has_value()) throw DataError("train_qa: example " + ex.id + " has no question");
  PreparedQA p;
  std::vector<text::Token> ctx = text::tokenize(ex.context);
  p.context_tokens = text::token_texts(ctx);
  int ts = 0, te = 0;
  bool snapped = false;
  if (!text::char_span_to_token_span(ctx, ex.answer_start,
                                     ex.answer_start + static_cast<int>(ex.answer_text.size()), &ts,
                                     &te, &snapped))
    throw DataError("train_qa: example " + ex.id + " has an unmappable span");
  p.span_start = ts;
  p.span_end = te;
  p.context_ids = model.token_ids(p.context_tokens);
  p.question_ids = model.token_ids(text::token_texts(text::tokenize(*ex.question)));
  p.answer_text = ex.answer_text;
  return p;
}

double dev_em(const QAModel& model, const std::vector<PreparedQA>& dev, double* f1_out) {
  if (dev.empty()) {
    if (f1_out) *f1_out = 0.0;
    return 0.0;
  }
  std::vector<double> em(dev.size(), 0.0), f1(dev.size(), 0.0);
  nn::kernels::for_each_index(static_cast<int>(dev.size()), [&](int i) {
    const PreparedQA& p = dev[static_cast<size_t>(i)];
    Graph g;
    ParamBinder pb(g, model.params);
    QAModel::SpanDists d = model.span_dists(pb, p.context_ids, p.question_ids, false, nullptr);
    const Tensor& sl = g.value(d.start_logp);
    const Tensor& el = g.value(d.end_logp);
    const int m = sl.dim(0);
    int bs = 0;
    for (int k = 1; k < m; ++k)
      if (sl.at(k) > sl.at(bs)) bs = k;
    int be = bs;
    const int limit = std::min(m, bs + model.cfg.max_span_len);
    for (int k = bs; k < limit; ++k)
      if (el.at(k) > el.at(be)) be = k;
    std::vector<std::string> span(p.context_tokens.begin() + bs, p.context_tokens.begin() + be + 1);
    auto [em_i, f1_i] = eval::em_f1(text::join_tokens(span), {p.answer_text});
    em[static_cast<size_t>(i)] = em_i;
    f1[static_cast<size_t>(i)] = f1_i;
  });
  double em_sum = 0.0, f1_sum = 0.0;
  for (size_t i = 0; i < dev.size(); ++i) {
    em_sum += em[i];
    f1_sum += f1[i];
  }
  if (f1_out) *f1_out = f1_sum / static_cast<double>(dev.size());
  return em_sum / static_cast<double>(dev.size());
}
}  // namespace

QATrainResult train_qa(const std::vector<text::QAExample>& train,
                       const std::vector<text::QAExample>& dev, const QAConfig& cfg,
                       const QATrainOptions& opt, const std::vector<text::QAExample>* synthetic,
                       const QAMetricsSink& sink, std::vector<std::pair<int, int>>* batch_audit) {
  if (train.empty()) throw DataError("train_qa: empty training set");

  // Vocabulary from ground truth plus synthetic pool, corpus order.
  text::Vocabulary vocab;
  auto add_tokens = [&vocab](const text::QAExample& ex) {
    for (const auto& t : text::tokenize(ex.context)) vocab.add(t.text);
    if (ex.question.has_value())
      for (const auto& t : text::tokenize(*ex.question)) vocab.add(t.text);
  };
  for (const auto& ex : train) add_tokens(ex);
  if (synthetic)
    for (const auto& ex : *synthetic) add_tokens(ex);

  Rng init_rng(opt.seed);
  QAModel model = QAModel::init(cfg, vocab, init_rng);

  std::vector<PreparedQA> train_prep, dev_prep, syn_prep;
  for (const auto& ex : train) train_prep.push_back(prepare(ex, model));
  for (const auto& ex : dev) dev_prep.push_back(prepare(ex, model));
  if (synthetic)
    for (const auto& ex : *synthetic) syn_prep.push_back(prepare(ex, model));

  nn::OptimState optim;
  optim.lr = opt.lr;

  QATrainResult result{model, -1.0, 0.0, -1, 0};
  train::MixingIterator mix(static_cast<int>(train_prep.size()), static_cast<int>(syn_prep.size()),
                            opt.batch_size, opt.seed);
  int since_best = 0;
  uint64_t global_step = 0;

  for (int epoch = 0; epoch < opt.max_epochs; ++epoch) {
    std::vector<train::MixedBatch> batches = mix.next_epoch();
    double epoch_loss = 0.0;
    for (const train::MixedBatch& b : batches) {
      ++global_step;
      if (batch_audit) batch_audit->emplace_back(static_cast<int>(b.gt.size()),
                                                 static_cast<int>(b.syn.size()));
      std::vector<const PreparedQA*> items;
      for (int i : b.gt) items.push_back(&train_prep[static_cast<size_t>(i)]);
      for (int i : b.syn) items.push_back(&syn_prep[static_cast<size_t>(i)]);
      nn::GradMap grads;
      const double loss = train::batch_gradients(
          static_cast<int>(items.size()), grads, [&](int bi, nn::GradMap& g_out) {
            const PreparedQA& p = *items[static_cast<size_t>(bi)];
            Graph g;
            ParamBinder pb(g, model.params);
            Rng ex_rng(Rng::mix(opt.seed, Rng::mix(global_step, static_cast<uint64_t>(bi))));
            QAModel::SpanDists d = model.span_dists(pb, p.context_ids, p.question_ids, true, &ex_rng);
            // Sum of start/end cross-entropies.
            Val loss_v = g.scale(
                g.add(g.pick(d.start_logp, p.span_start), g.pick(d.end_logp, p.span_end)), -1.0);
            g.backward(loss_v, g_out);
            return g.scalar(loss_v);
          });
      adam_step(model.params, grads, optim);
      epoch_loss += loss;
    }
    result.epochs_run = epoch + 1;

    double f1 = 0.0;
    const double em = dev_em(model, dev_prep, &f1);
    if (sink)
      sink({{"epoch", epoch},
            {"train_loss", batches.empty() ? 0.0 : epoch_loss / static_cast<double>(batches.size())},
            {"dev_em", em},
            {"dev_f1", f1}});

    if (em > result.best_dev_em) {
      result.best_dev_em = em;
      result.best_dev_f1 = f1;
      result.best_epoch = epoch;
      result.model.params = model.params;
      since_best = 0;
    } else if (++since_best >= opt.patience) {
      break;
    }
    if (result.best_dev_em >= opt.stop_dev_em) break;
  }
  result.model.cfg = model.cfg;
  result.model.vocab = model.vocab;
  return result;
}

}  // namespace qgen::reward
