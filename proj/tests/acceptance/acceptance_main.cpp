// Acceptance suite: one pass/fail line per criterion. Run with criterion
// numbers as arguments (default: all).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>

#include "fixtures.hpp"
#include "qgen/eval/metrics.hpp"
#include "qgen/eval/qa_eval.hpp"
#include "qgen/nn/grad_check.hpp"
#include "qgen/train/mixing.hpp"

using namespace qgen;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

accept::World& world() {
  static accept::World w;
  return w;
}

// ---------------------------------------------------------------------------
// 1. Gradient correctness: every differentiable block and the composed QG
//    forward pass, central differences, rel err < 1e-4, >= 10 seeds each.
// ---------------------------------------------------------------------------
bool criterion_1() {
  using namespace qgen::nn;
  auto t0 = Clock::now();
  double worst = 0.0;
  std::string worst_block;
  bool ok = true;
  auto track = [&](const std::string& name, const GradCheckReport& rep) {
    if (!rep.pass) {
      std::printf("    %s FAILED rel err %.3g\n", name.c_str(), rep.worst);
      ok = false;
    }
    if (rep.worst > worst) {
      worst = rep.worst;
      worst_block = name;
    }
  };

  for (int seed = 0; seed < 10; ++seed) {
    Rng rng(Rng::mix(101, static_cast<uint64_t>(seed)));

    {  // affine + softmax cross-entropy
      const int in = 2 + static_cast<int>(rng.below(4));
      const int out = 2 + static_cast<int>(rng.below(4));
      const int target = static_cast<int>(rng.below(static_cast<uint64_t>(out)));
      ParameterSet ps;
      ps.add("W", init_uniform({out, in}, in, rng));
      ps.add("b", init_uniform({out}, 1, rng));
      ps.add("x", init_uniform({in}, 1, rng));
      track("affine+ce", grad_check(ps, [target](const ParameterSet& p, GradMap* gr) {
              Graph g;
              ParamBinder pb(g, p);
              Val loss =
                  g.scale(g.pick(g.log_softmax(affine(g, pb("W"), pb("x"), pb("b"))), target), -1.0);
              double v = g.scalar(loss);
              if (gr) g.backward(loss, *gr);
              return v;
            }));
    }
    {  // lstm cell
      const int in = 2 + static_cast<int>(rng.below(3));
      const int hidden = 2 + static_cast<int>(rng.below(3));
      ParameterSet ps;
      ps.add("Wx", init_uniform({4 * hidden, in}, in, rng));
      ps.add("Wh", init_uniform({4 * hidden, hidden}, hidden, rng));
      ps.add("b", init_lstm_bias(hidden));
      ps.add("x", init_uniform({in}, 1, rng));
      ps.add("h0", init_uniform({hidden}, 1, rng));
      ps.add("c0", init_uniform({hidden}, 1, rng));
      std::vector<double> w(static_cast<size_t>(2 * hidden));
      for (double& v : w) v = rng.uniform(-1.0, 1.0);
      track("lstm_step", grad_check(ps, [&w](const ParameterSet& p, GradMap* gr) {
              Graph g;
              ParamBinder pb(g, p);
              auto [h, c] = lstm_step(g, pb("x"), pb("h0"), pb("c0"), pb("Wx"), pb("Wh"), pb("b"));
              Val loss = g.sum(g.mul(g.concat({h, c}), g.input(Tensor::vec(w))));
              double v = g.scalar(loss);
              if (gr) g.backward(loss, *gr);
              return v;
            }));
    }
    {  // embedding rows + temporal max pool
      const int vocab = 4 + static_cast<int>(rng.below(4));
      const int dim = 2 + static_cast<int>(rng.below(3));
      std::vector<int> ids;
      for (int i = 0; i < 4; ++i) ids.push_back(static_cast<int>(rng.below(static_cast<uint64_t>(vocab))));
      ParameterSet ps;
      ps.add("table", init_uniform({vocab, dim}, dim, rng));
      track("embedding+maxpool", grad_check(ps, [&ids](const ParameterSet& p, GradMap* gr) {
              Graph g;
              ParamBinder pb(g, p);
              std::vector<Val> rows;
              for (int id : ids) rows.push_back(g.row(pb("table"), id));
              Val loss = g.sum(max_pool_over_time(g, rows));
              double v = g.scalar(loss);
              if (gr) g.backward(loss, *gr);
              return v;
            }));
    }
    {  // maxout + mix_copy head
      const int d = 2 + static_cast<int>(rng.below(2));
      const int vocab = 4 + static_cast<int>(rng.below(3));
      const int M = 3;
      std::vector<int> slot = {vocab, 1, vocab + 1};  // two OOV slots, one in-vocab
      ParameterSet ps;
      ps.add("Wo", init_uniform({2 * d, 3}, 3, rng));
      ps.add("x", init_uniform({3}, 1, rng));
      ps.add("table", init_uniform({vocab, d}, d, rng));
      ps.add("alpha_logits", init_uniform({M}, 1, rng));
      ps.add("gate_logit", init_uniform({1}, 1, rng));
      track("maxout+copy", grad_check(ps, [&slot, vocab](const ParameterSet& p, GradMap* gr) {
              Graph g;
              ParamBinder pb(g, p);
              Val o = g.maxout_pairs(g.tanh_(g.matvec(pb("Wo"), pb("x"))));
              Val pv = g.softmax(g.matvec(pb("table"), o));
              Val alpha = g.softmax(pb("alpha_logits"));
              Val gate = g.sigmoid_(pb("gate_logit"));
              Val dist = g.mix_copy(pv, alpha, g.pick(gate, 0), slot, vocab + 2);
              Val loss = g.scale(g.pick(g.log_(dist), slot[0]), -1.0);
              double v = g.scalar(loss);
              if (gr) g.backward(loss, *gr);
              return v;
            }));
    }
    {  // full QG forward: encoder + self-attention + decode steps
      text::ToyCorpus tiny = text::make_toy_corpus(world().spec, 4, 0, 0);
      text::Vocabulary vocab = text::build_vocab(tiny.train);
      model::QGConfig cfg;
      cfg.word_dim = 4;
      cfg.ans_dim = 2;
      cfg.pos_dim = 2;
      cfg.ner_dim = 2;
      cfg.hidden = 4;
      cfg.dropout = 0.0;
      Rng mrng(Rng::mix(7000, static_cast<uint64_t>(seed)));
      model::QGModel m = model::QGModel::init(cfg, vocab, mrng);
      text::TokenizedExample tok =
          text::tokenize_example(tiny.train[seed % tiny.train.size()], vocab, *world().tagger);
      // Trim the context so finite differences stay quick.
      const int keep = std::min<int>(4, static_cast<int>(tok.context_tokens.size()));
      tok.context_tokens.resize(keep);
      tok.context_ids.resize(keep);
      tok.bio_tags.assign(keep, text::tags::kBioO);
      tok.bio_tags[0] = text::tags::kBioB;
      tok.pos_tags.resize(keep);
      tok.ner_tags.resize(keep);
      tok.answer_tok_start = tok.answer_tok_end = 0;
      model::CopyMap cmap = model::build_copy_map(tok.context_tokens, tok.context_ids, vocab, true);
      std::vector<int> targets = {tok.context_ids[keep - 1], text::Vocabulary::kEos};
      track("qg_forward", grad_check(m.params, [&](const ParameterSet& p, GradMap* gr) {
              model::QGModel probe;
              probe.cfg = m.cfg;
              probe.vocab = m.vocab;
              probe.params = p;
              Graph g;
              ParamBinder pb(g, probe.params);
              auto tf = probe.forward_teacher_forced(pb, tok, targets, cmap, false, nullptr);
              double v = g.scalar(tf.loss);
              if (gr) g.backward(tf.loss, *gr);
              return v;
            }));
    }
  }
  const double secs = seconds_since(t0);
  std::printf("    worst rel err %.3g (%s), %.1fs\n", worst, worst_block.c_str(), secs);
  return ok && worst < 1e-4 && secs < 120.0;
}

// ---------------------------------------------------------------------------
// 2. Normalization: all attention rows and the copy-mixed output sum to 1
//    within 1e-6 over 1000 random configurations.
// ---------------------------------------------------------------------------
bool criterion_2() {
  double worst = 0.0;
  text::ToyCorpus pool = text::make_toy_corpus(world().spec, 40, 0, 0);
  for (int trial = 0; trial < 1000; ++trial) {
    nn::Rng rng(nn::Rng::mix(202, static_cast<uint64_t>(trial)));
    model::QGConfig cfg;
    cfg.word_dim = 2 + 2 * static_cast<int>(rng.below(3));
    cfg.ans_dim = 1 + static_cast<int>(rng.below(3));
    cfg.pos_dim = 1 + static_cast<int>(rng.below(3));
    cfg.ner_dim = 1 + static_cast<int>(rng.below(3));
    cfg.hidden = 2 + 2 * static_cast<int>(rng.below(3));
    cfg.dropout = 0.0;
    cfg.copy_enabled = rng.below(2) == 0;
    const text::QAExample& ex = pool.train[rng.below(pool.train.size())];
    text::Vocabulary vocab = text::build_vocab({ex});
    nn::Rng mrng(rng.u64());
    model::QGModel m = model::QGModel::init(cfg, vocab, mrng);
    text::TokenizedExample tok = text::tokenize_example(ex, vocab, *world().tagger);
    model::CopyMap cmap =
        model::build_copy_map(tok.context_tokens, tok.context_ids, vocab, cfg.copy_enabled);

    nn::Graph g;
    nn::ParamBinder pb(g, m.params);
    auto enc = m.encode(pb, m.embed(pb, tok), false, nullptr);
    auto sa = m.self_attend(pb, enc.H);
    for (const nn::Val& a : sa.alphas) {
      double s = 0.0;
      for (double v : g.value(a).v) s += v;
      worst = std::max(worst, std::fabs(s - 1.0));
    }
    auto st = m.decoder_init(pb, enc);
    int prev = text::Vocabulary::kBos;
    for (int step = 0; step < 2; ++step) {
      auto so = m.decode_step(pb, st, prev, sa, cmap, false, nullptr);
      double s = 0.0;
      for (double v : g.value(so.alpha).v) s += v;
      worst = std::max(worst, std::fabs(s - 1.0));
      double d = 0.0;
      for (double v : g.value(so.dist).v) d += v;
      worst = std::max(worst, std::fabs(d - 1.0));
      st = so.next;
      prev = static_cast<int>(rng.below(static_cast<uint64_t>(cmap.ext_size)));
    }
  }
  std::printf("    worst |sum-1| = %.3g over 1000 configurations\n", worst);
  return worst < 1e-6;
}

// ---------------------------------------------------------------------------
// 3. Memorization: 200-example toy corpus to >= 95% next-token accuracy
//    within 200 epochs, < 5 min, 3/3 seeds.
// ---------------------------------------------------------------------------
bool criterion_3() {
  auto t0 = Clock::now();
  bool ok = true;
  for (uint64_t seed : {11ull, 12ull, 13ull}) {
    nn::Rng rng(seed);
    model::QGModel m =
        model::QGModel::init(world().qg_config(), text::build_vocab(world().corpus.train), rng);
    train::PreparedCorpus tr = world().prep(world().corpus.train, m);
    train::TrainConfig cfg;
    cfg.max_epochs = 200;
    cfg.patience = 200;
    cfg.batch_size = 32;
    cfg.lr = 0.003;
    cfg.seed = seed;
    cfg.stop_train_accuracy = 0.95;
    train::TrainResult r = train::train_teacher_forcing(m, tr, tr, cfg);
    m.params = r.best_params;
    const double acc = train::next_token_accuracy(m, tr);
    std::printf("    seed %llu: accuracy %.3f after %d epochs\n",
                static_cast<unsigned long long>(seed), acc, r.epochs_run);
    ok = ok && acc >= 0.95 && r.epochs_run <= 200;
  }
  const double secs = seconds_since(t0);
  std::printf("    total %.1fs\n", secs);
  return ok && secs < 300.0;
}

// ---------------------------------------------------------------------------
// 4. Metric oracles.
// ---------------------------------------------------------------------------
bool criterion_4() {
  bool ok = true;
  auto toks = [](const char* s) { return text::token_texts(text::tokenize(s)); };

  eval::BleuDetail d = eval::bleu4_corpus_detail({toks("a b c d")}, {toks("a b c e")});
  ok = ok && std::fabs(d.precisions[0] - 3.0 / 4.0) < 1e-12;
  ok = ok && std::fabs(d.precisions[1] - 2.0 / 3.0) < 1e-12;
  ok = ok && std::fabs(d.precisions[2] - 1.0 / 2.0) < 1e-12;
  ok = ok && d.precisions[3] == 0.0 && d.score == 0.0;

  ok = ok && std::fabs(eval::bleu4_corpus({toks("x y z w")}, {toks("x y z w")}) - 100.0) < 1e-9;

  auto [em, f1] = eval::em_f1("cat sat on", {"the cat sat"});
  ok = ok && em == 0.0 && std::fabs(f1 - 0.8) < 1e-12;
  auto [em2, f12] = eval::em_f1("paris", {"The Paris."});
  ok = ok && em2 == 1.0 && std::fabs(f12 - 1.0) < 1e-12;

  const double p = 1.0, r = 2.0 / 3.0, b2 = 1.2 * 1.2;
  ok = ok && std::fabs(eval::rouge_l(toks("a c"), toks("a b c")) -
                       100.0 * (1.0 + b2) * p * r / (r + b2 * p)) < 1e-9;
  ok = ok && std::fabs(eval::rouge_l(toks("same text"), toks("same text")) - 100.0) < 1e-12;
  std::printf("    BLEU4 precisions 3/4 2/3 1/2 0 -> 0; F1(cat sat on|the cat sat)=0.8\n");
  return ok;
}

// ---------------------------------------------------------------------------
// 5. Beam equivalence with exhaustive enumeration; diverse gamma=0 identical.
// ---------------------------------------------------------------------------
struct TableScorer : decode::StepScorer {
  std::vector<std::vector<double>> rows;
  explicit TableScorer(std::vector<std::vector<double>> lg) {
    for (auto& row : lg) {
      double mx = *std::max_element(row.begin(), row.end());
      double z = 0.0;
      for (double v : row) z += std::exp(v - mx);
      const double lse = mx + std::log(z);
      for (double& v : row) v -= lse;
      rows.push_back(row);
    }
  }
  int dist_size() const override { return static_cast<int>(rows[0].size()); }
  int bos() const override { return 0; }
  int eos() const override { return 1; }
  int init_state() override { return 0; }
  std::pair<std::vector<double>, int> step(int s, int) override {
    return {rows[std::min<size_t>(static_cast<size_t>(s), rows.size() - 1)], s + 1};
  }
  double score(const std::vector<int>& tokens, bool finished) const {
    double s = 0.0;
    size_t pos = 0;
    for (int t : tokens) s += rows[std::min(pos++, rows.size() - 1)][static_cast<size_t>(t)];
    if (finished) s += rows[std::min(pos, rows.size() - 1)][1];
    return s;
  }
};

void enum_all(const TableScorer& sc, int max_len, int min_len, std::vector<int>& prefix,
              std::vector<std::pair<std::vector<int>, double>>& out) {
  if (static_cast<int>(prefix.size()) == max_len) {
    out.emplace_back(prefix, sc.score(prefix, false));
    return;
  }
  for (int v = 0; v < sc.dist_size(); ++v) {
    if (v == 1) {
      if (static_cast<int>(prefix.size()) >= min_len) out.emplace_back(prefix, sc.score(prefix, true));
      continue;
    }
    prefix.push_back(v);
    enum_all(sc, max_len, min_len, prefix, out);
    prefix.pop_back();
  }
}

bool criterion_5() {
  bool ok = true;
  for (int trial = 0; trial < 50; ++trial) {
    nn::Rng rng(nn::Rng::mix(505, static_cast<uint64_t>(trial)));
    const int vocab = 3 + static_cast<int>(rng.below(3));
    std::vector<std::vector<double>> logits(4, std::vector<double>(static_cast<size_t>(vocab)));
    for (auto& row : logits)
      for (double& v : row) v = rng.uniform(-2.0, 2.0);
    TableScorer sc(logits);
    decode::DecodeConfig cfg;
    cfg.max_len = 4;
    cfg.beam_size = 1 + static_cast<int>(rng.below(4));

    TableScorer sc_beam = sc;
    auto beam = decode::beam_search(sc_beam, cfg);
    std::vector<std::pair<std::vector<int>, double>> all;
    std::vector<int> prefix;
    enum_all(sc, cfg.max_len, cfg.min_len, prefix, all);
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    if (static_cast<int>(all.size()) > cfg.beam_size) all.resize(static_cast<size_t>(cfg.beam_size));
    if (beam.size() != all.size()) ok = false;
    for (size_t i = 0; ok && i < beam.size(); ++i)
      if (beam[i].tokens != all[i].first || std::fabs(beam[i].log_prob - all[i].second) > 1e-9)
        ok = false;

    TableScorer sc_div = sc;
    decode::DecodeConfig dcfg = cfg;
    dcfg.diversity_gamma = 0.0;
    auto diverse = decode::diverse_beam_search(sc_div, dcfg);
    if (diverse.size() != beam.size()) ok = false;
    for (size_t i = 0; ok && i < beam.size(); ++i)
      if (diverse[i].tokens != beam[i].tokens || diverse[i].log_prob != beam[i].log_prob) ok = false;
    if (!ok) {
      std::printf("    mismatch at trial %d\n", trial);
      break;
    }
  }
  if (ok) std::printf("    50/50 parameterizations match exhaustive top-k; gamma=0 bit-identical\n");
  return ok;
}

// ---------------------------------------------------------------------------
// 6. SCST sanity: zero advantage => bit-zero update; wh-match RL fine-tuning
//    gains >= 0.10 mean dev reward over the teacher-forced start, 3 seeds.
// ---------------------------------------------------------------------------
bool criterion_6() {
  auto t0 = Clock::now();
  accept::World& w = world();

  // (a) zero advantage
  model::QGModel base = w.qg_1epoch();
  train::PreparedCorpus tr = w.prep(w.corpus.train, base);
  reward::RewardFn constant = [](const std::vector<std::string>&, const reward::RlContext&) {
    return 0.4;
  };
  train::TrainConfig zcfg;
  zcfg.seed = 5;
  bool zero_ok = true;
  for (int i = 0; i < 5; ++i) {
    nn::Rng rng(nn::Rng::mix(606, static_cast<uint64_t>(i)));
    reward::RlContext ctx{&tr.raw[static_cast<size_t>(i)], &tr.tok[static_cast<size_t>(i)]};
    train::RlStepOut out = train::rl_step(base, tr.tok[static_cast<size_t>(i)],
                                          tr.cmap[static_cast<size_t>(i)], ctx, constant, zcfg, rng);
    if (out.loss != 0.0) zero_ok = false;
    for (const auto& [name, g] : out.grads)
      for (double v : g.v)
        if (v != 0.0) zero_ok = false;
  }
  std::printf("    zero advantage => bit-zero update: %s\n", zero_ok ? "yes" : "NO");

  // (b) RL fine-tuning on the wh-match reward
  reward::RewardFn wh = reward::make_wh_match_reward(w.spec);
  bool rl_ok = true;
  double mean_gain = 0.0;
  for (uint64_t seed : {21ull, 22ull, 23ull}) {
    // Undertrained teacher-forced start (3 epochs).
    nn::Rng rng(seed);
    model::QGModel m = model::QGModel::init(w.qg_config(), text::build_vocab(w.corpus.train), rng);
    train::PreparedCorpus train_prep = w.prep(w.corpus.train, m);
    train::PreparedCorpus dev_prep = w.prep(w.corpus.dev, m);
    train::TrainConfig tf_cfg;
    tf_cfg.max_epochs = 3;
    tf_cfg.patience = 3;
    tf_cfg.batch_size = 32;
    tf_cfg.lr = 0.003;
    tf_cfg.seed = seed;
    train::TrainResult tf = train::train_teacher_forcing(m, train_prep, dev_prep, tf_cfg);
    m.params = tf.best_params;

    const double before = train::mean_greedy_reward(m, dev_prep, wh, 20);

    train::RlTrainSpec spec;
    spec.kinds = {reward::RewardKind::WH_MATCH};
    spec.metric_fn = wh;
    train::TrainConfig rl_cfg;
    rl_cfg.max_epochs = 8;
    rl_cfg.patience = 8;
    rl_cfg.batch_size = 32;
    rl_cfg.rl_lr = 0.0002;
    rl_cfg.gamma_metric = 0.95;
    rl_cfg.seed = seed;
    train::TrainResult rl = train::multi_reward_train(m, train_prep, dev_prep, spec, rl_cfg);
    m.params = rl.best_params;
    const double after = train::mean_greedy_reward(m, dev_prep, wh, 20);
    std::printf("    seed %llu: dev wh reward %.3f -> %.3f\n",
                static_cast<unsigned long long>(seed), before, after);
    mean_gain += (after - before) / 3.0;
  }
  std::printf("    mean gain %.3f (need >= 0.10), %.1fs\n", mean_gain, seconds_since(t0));
  rl_ok = mean_gain >= 0.10;
  return zero_ok && rl_ok && seconds_since(t0) < 600.0;
}

// ---------------------------------------------------------------------------
// 7. Filter properties over the Table-5 grid.
// ---------------------------------------------------------------------------
bool criterion_7() {
  accept::World& w = world();
  model::QGModel qg = w.qg_converged();
  std::vector<augment::SyntheticExample> syn = w.scored_synthetic(qg, 11);
  bool ok = true;

  augment::FilterConfig zero;
  zero.epsilon = 0.0;
  zero.dedup = false;
  ok = ok && augment::filter(syn, zero).size() == syn.size();

  std::vector<std::set<std::string>> kept_ids;
  for (double eps : {0.0, 0.2, 0.4, 0.6, 0.8}) {
    augment::FilterConfig fc;
    fc.epsilon = eps;
    fc.dedup = false;
    auto kept = augment::filter(syn, fc);
    std::set<std::string> ids;
    for (const auto& s : kept) ids.insert(s.ex.id);
    // exact threshold semantics
    for (const auto& s : kept)
      if (*s.qap_score < eps) ok = false;
    for (const auto& s : syn)
      if (*s.qap_score >= eps && !ids.count(s.ex.id)) ok = false;
    kept_ids.push_back(std::move(ids));
  }
  for (size_t i = 1; i < kept_ids.size(); ++i) {
    if (kept_ids[i].size() > kept_ids[i - 1].size()) ok = false;
    for (const std::string& id : kept_ids[i])
      if (!kept_ids[i - 1].count(id)) ok = false;  // nesting
  }

  augment::FilterConfig fc;
  fc.epsilon = 0.4;
  fc.dedup = true;
  auto once = augment::filter(syn, fc);
  auto twice = augment::filter(once, fc);
  ok = ok && once.size() == twice.size();
  std::printf("    grid sizes:");
  for (const auto& ids : kept_ids) std::printf(" %zu", ids.size());
  std::printf("; idempotent at 0.4\n");
  return ok;
}

// ---------------------------------------------------------------------------
// 8. Mixing audit: every batch half-and-half per the ceil/floor rule, every
//    ground-truth example exactly once per epoch, on a real semi run.
// ---------------------------------------------------------------------------
bool criterion_8() {
  accept::World& w = world();
  bool ok = true;

  // Index-level audit of the iterator over realistic pool sizes.
  {
    train::MixingIterator it(200, 347, 32, 9);
    for (int epoch = 0; epoch < 4; ++epoch) {
      auto batches = it.next_epoch();
      std::vector<int> seen(200, 0);
      for (size_t i = 0; i < batches.size(); ++i) {
        if (!it.composition_ok(batches[i], i + 1 == batches.size())) ok = false;
        for (int g : batches[i].gt) seen[static_cast<size_t>(g)]++;
      }
      for (int c : seen)
        if (c != 1) ok = false;
    }
  }

  // Batch-size audit of an actual train_qa semi run.
  model::QGModel qg = w.qg_converged();
  std::vector<augment::SyntheticExample> syn = w.scored_synthetic(qg, 11);
  augment::FilterConfig fc;
  fc.epsilon = 0.2;
  auto kept = augment::filter(syn, fc, &w.corpus.train);
  augment::SemiDataset semi = augment::build_semi_dataset(w.corpus.train, kept);
  reward::QATrainOptions opt;
  opt.max_epochs = 2;
  opt.patience = 2;
  opt.seed = 31;
  std::vector<std::pair<int, int>> audit;
  reward::train_qa(semi.ground_truth, w.corpus.dev, w.qa_config(), opt, &semi.synthetic, nullptr,
                   &audit);
  const int g_full = 16, s_full = 16;
  const size_t per_epoch = (semi.ground_truth.size() + g_full - 1) / g_full;
  int gt_seen = 0;
  for (size_t i = 0; i < audit.size(); ++i) {
    const bool last = (i + 1) % per_epoch == 0;
    const auto [g, s] = audit[i];
    gt_seen += g;
    if (!last && (g != g_full || s != s_full)) ok = false;
    if (last && s != (g * s_full) / g_full) ok = false;
  }
  if (gt_seen != static_cast<int>(semi.ground_truth.size()) * 2) ok = false;
  std::printf("    %zu batches audited over 2 epochs (pool %zu GT + %zu synthetic)\n", audit.size(),
              semi.ground_truth.size(), semi.synthetic.size());
  return ok;
}

// ---------------------------------------------------------------------------
// 9. Semi-supervised ordering: GT + QAP-filtered synthetic >= GT-only on dev
//    EM, mean over 3 seeds.
// ---------------------------------------------------------------------------
bool criterion_9() {
  auto t0 = Clock::now();
  accept::World& w = world();
  model::QGModel qg = w.qg_converged();
  std::vector<augment::SyntheticExample> syn = w.scored_synthetic(qg, 11);

  // Pick epsilon on dev with one seed, Table-5 grid.
  double best_eps = 0.0, best_em = -1.0;
  for (double eps : {0.0, 0.2, 0.4, 0.6, 0.8}) {
    augment::FilterConfig fc;
    fc.epsilon = eps;
    auto kept = augment::filter(syn, fc, &w.corpus.train);
    if (kept.empty()) continue;
    augment::SemiDataset semi = augment::build_semi_dataset(w.corpus.train, kept);
    reward::QATrainOptions opt;
    opt.max_epochs = 50;
    opt.patience = 10;
    opt.lr = 0.01;
    opt.seed = 41;
    reward::QATrainResult r =
        reward::train_qa(semi.ground_truth, w.corpus.dev, w.qa_config(), opt, &semi.synthetic);
    std::printf("    eps %.1f: kept %zu, dev EM %.3f\n", eps, kept.size(), r.best_dev_em);
    if (r.best_dev_em > best_em) {
      best_em = r.best_dev_em;
      best_eps = eps;
    }
  }

  augment::FilterConfig fc;
  fc.epsilon = best_eps;
  auto kept = augment::filter(syn, fc, &w.corpus.train);
  augment::SemiDataset semi = augment::build_semi_dataset(w.corpus.train, kept);

  double mean_semi = 0.0, mean_gt = 0.0;
  for (uint64_t seed : {51ull, 52ull, 53ull}) {
    reward::QATrainOptions opt;
    opt.max_epochs = 50;
    opt.patience = 10;
    opt.lr = 0.01;
    opt.seed = seed;
    reward::QATrainResult semi_r =
        reward::train_qa(semi.ground_truth, w.corpus.dev, w.qa_config(), opt, &semi.synthetic);
    reward::QATrainResult gt_r = reward::train_qa(w.corpus.train, w.corpus.dev, w.qa_config(), opt);
    std::printf("    seed %llu: semi EM %.3f vs GT-only EM %.3f\n",
                static_cast<unsigned long long>(seed), semi_r.best_dev_em, gt_r.best_dev_em);
    mean_semi += semi_r.best_dev_em / 3.0;
    mean_gt += gt_r.best_dev_em / 3.0;
  }
  std::printf("    best eps %.1f; mean semi %.4f vs mean GT %.4f (%.0fs)\n", best_eps, mean_semi,
              mean_gt, seconds_since(t0));
  return mean_semi >= mean_gt;
}

// ---------------------------------------------------------------------------
// 10. QA-based QG eval ordering: converged > 1-epoch; GT oracle >= shuffled.
// ---------------------------------------------------------------------------
bool criterion_10() {
  auto t0 = Clock::now();
  accept::World& w = world();
  model::QGModel good = w.qg_converged();
  model::QGModel weak = w.qg_1epoch();

  eval::QaBasedEvalConfig cfg;
  cfg.qa = w.qa_config();
  cfg.train.max_epochs = 50;
  cfg.train.patience = 10;
  cfg.train.lr = 0.01;

  double mean_good = 0.0, mean_weak = 0.0;
  for (uint64_t seed : {61ull, 62ull, 63ull}) {
    cfg.train.seed = seed;
    eval::QAEvalReport rg = eval::qa_based_qg_eval(good, w.corpus.unlabeled, w.corpus.dev,
                                                   *w.tagger, cfg);
    eval::QAEvalReport rw = eval::qa_based_qg_eval(weak, w.corpus.unlabeled, w.corpus.dev,
                                                   *w.tagger, cfg);
    std::printf("    seed %llu: converged EM %.2f vs 1-epoch EM %.2f\n",
                static_cast<unsigned long long>(seed), rg.em, rw.em);
    mean_good += rg.em / 3.0;
    mean_weak += rw.em / 3.0;
  }

  // Oracle annotations (gold questions) vs questions shuffled across examples.
  std::vector<text::QAExample> oracle = w.corpus.train;
  std::vector<text::QAExample> shuffled = w.corpus.train;
  nn::Rng rng(99);
  std::vector<int> perm;
  for (size_t i = 0; i < shuffled.size(); ++i) perm.push_back(static_cast<int>(i));
  rng.shuffle(perm);
  for (size_t i = 0; i < shuffled.size(); ++i)
    shuffled[i].question = w.corpus.train[static_cast<size_t>(perm[i])].question;

  double mean_oracle = 0.0, mean_shuffled = 0.0;
  for (uint64_t seed : {61ull, 62ull, 63ull}) {
    cfg.train.seed = seed;
    mean_oracle += eval::qa_eval_on_annotations(oracle, w.corpus.dev, cfg).em / 3.0;
    mean_shuffled += eval::qa_eval_on_annotations(shuffled, w.corpus.dev, cfg).em / 3.0;
  }
  std::printf("    converged %.2f > 1-epoch %.2f; oracle %.2f >= shuffled %.2f (%.0fs)\n",
              mean_good, mean_weak, mean_oracle, mean_shuffled, seconds_since(t0));
  return mean_good > mean_weak && mean_oracle >= mean_shuffled;
}

// ---------------------------------------------------------------------------
// 11. Determinism of CLI pipelines: byte-identical outputs across re-runs.
// ---------------------------------------------------------------------------
std::string slurp_file(const std::string& path) {
  FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) return "<missing " + path + ">";
  std::string out;
  char buf[1 << 14];
  size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, f)) > 0) out.append(buf, n);
  std::fclose(f);
  return out;
}

bool criterion_11() {
#ifndef QGEN_CLI_PATH
  std::printf("    CLI path not configured\n");
  return false;
#else
  const std::string cli = QGEN_CLI_PATH;
  const std::string root = "acceptance_cache/det";
  std::filesystem::remove_all(root);
  std::filesystem::create_directories(root);
  auto run = [&cli](const std::string& args) {
    return std::system((cli + " " + args + " >/dev/null 2>&1").c_str()) == 0;
  };
  bool ok = true;
  for (const char* tag : {"a", "b"}) {
    const std::string d = root + "/" + tag;
    ok = ok && run("make-toy-data --out " + d +
                   " --seed 7 --n-train 30 --n-dev 10 --n-unlabeled 10 --pairs 20");
    ok = ok && run("train-qg --train " + d + "/train.jsonl --dev " + d + "/dev.jsonl --out " + d +
                   "/qg --seed 7 --epochs 2 --patience 3 --batch-size 8 --hidden 16 --word-dim 8 "
                   "--tag-dim 4 --dropout 0.3 --max-len 12");
    ok = ok && run("train-qa --train " + d + "/train.jsonl --dev " + d + "/dev.jsonl --out " + d +
                   "/qa --seed 7 --epochs 2 --hidden 8 --word-dim 8");
    ok = ok && run("generate --checkpoint " + d + "/qg/qg.ckpt --data " + d +
                   "/unlabeled.jsonl --source new --qa " + d + "/qa/qa.ckpt --out " + d +
                   "/syn.jsonl --beam 3 --max-len 12");
    ok = ok && run("filter --data " + d + "/syn.jsonl --out " + d +
                   "/kept.jsonl --epsilon 0.2 --sweep --ground-truth " + d + "/train.jsonl");
    ok = ok && run("eval-qg --checkpoint " + d + "/qg/qg.ckpt --data " + d + "/dev.jsonl --out " +
                   d + "/qg_eval.json --max-len 12");
  }
  if (!ok) {
    std::printf("    a CLI command failed\n");
    return false;
  }
  for (const char* f :
       {"train.jsonl", "dev.jsonl", "unlabeled.jsonl", "qpc_pairs_train.jsonl", "qg/qg.ckpt",
        "qg/metrics.jsonl", "qa/qa.ckpt", "syn.jsonl", "kept.jsonl", "kept.jsonl.report.json",
        "qg_eval.json"}) {
    const std::string a = slurp_file(root + "/a/" + f);
    const std::string b = slurp_file(root + "/b/" + f);
    if (a != b || a.rfind("<missing", 0) == 0) {
      std::printf("    MISMATCH: %s\n", f);
      ok = false;
    }
  }
  if (ok) std::printf("    11 artifacts byte-identical across re-runs\n");
  return ok;
#endif
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    std::function<bool()> fn;
  };
  const std::vector<Criterion> criteria = {
      {1, "gradient correctness", criterion_1},
      {2, "normalization", criterion_2},
      {3, "memorization", criterion_3},
      {4, "metric oracles", criterion_4},
      {5, "beam equivalence", criterion_5},
      {6, "SCST sanity", criterion_6},
      {7, "filter properties", criterion_7},
      {8, "mixing audit", criterion_8},
      {9, "semi-supervised ordering", criterion_9},
      {10, "QA-based QG eval ordering", criterion_10},
      {11, "determinism", criterion_11},
  };

  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const Criterion& c : criteria) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    std::printf("criterion %2d (%s):\n", c.id, c.name);
    std::fflush(stdout);
    bool pass = false;
    try {
      pass = c.fn();
    } catch (const std::exception& e) {
      std::printf("    exception: %s\n", e.what());
    }
    std::printf("criterion %2d (%s): %s\n", c.id, c.name, pass ? "PASS" : "FAIL");
    std::fflush(stdout);
    if (!pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
