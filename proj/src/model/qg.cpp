#include "qgen/model/qg.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "qgen/model/checkpoint.hpp"

namespace qgen::model {

using nn::Graph;
using nn::ParamBinder;
using nn::Rng;
using nn::Tensor;
using nn::Val;
using text::Vocabulary;

void QGConfig::validate() const {
  if (word_dim < 1 || ans_dim < 1 || pos_dim < 1 || ner_dim < 1)
    throw DataError("qg config: embedding dims must be positive");
  if (hidden < 1 || hidden % 2 != 0) throw DataError("qg config: hidden size must be positive and even");
  if (layers != 2) throw DataError("qg config: encoder/decoder layer count is fixed at 2");
  if (dropout < 0.0 || dropout >= 1.0) throw DataError("qg config: dropout must be in [0,1)");
  if (max_question_len < 1) throw DataError("qg config: max question length must be >= 1");
}

nlohmann::json QGConfig::to_json() const {
  return {{"word_dim", word_dim}, {"ans_dim", ans_dim},   {"pos_dim", pos_dim},
          {"ner_dim", ner_dim},   {"hidden", hidden},     {"layers", layers},
          {"dropout", dropout},   {"copy_enabled", copy_enabled},
          {"max_question_len", max_question_len}};
}

QGConfig QGConfig::from_json(const nlohmann::json& j) {
  QGConfig c;
  c.word_dim = j.at("word_dim").get<int>();
  c.ans_dim = j.at("ans_dim").get<int>();
  c.pos_dim = j.at("pos_dim").get<int>();
  c.ner_dim = j.at("ner_dim").get<int>();
  c.hidden = j.at("hidden").get<int>();
  c.layers = j.at("layers").get<int>();
  c.dropout = j.at("dropout").get<double>();
  c.copy_enabled = j.at("copy_enabled").get<bool>();
  c.max_question_len = j.at("max_question_len").get<int>();
  c.validate();
  return c;
}

int CopyMap::target_id(const std::string& tok, const text::Vocabulary& vocab) const {
  int id = vocab.id(tok);
  if (id != Vocabulary::kUnk) return id;
  for (size_t e = 0; e < ext_tokens.size(); ++e)
    if (ext_tokens[e] == tok) return vocab_size + static_cast<int>(e);
  return Vocabulary::kUnk;
}

std::string CopyMap::token_string(int ext_id, const text::Vocabulary& vocab) const {
  if (ext_id < vocab_size) return vocab.token(ext_id);
  const int e = ext_id - vocab_size;
  if (e >= static_cast<int>(ext_tokens.size())) throw DataError("copy map: extended id out of range");
  return ext_tokens[static_cast<size_t>(e)];
}

CopyMap build_copy_map(const std::vector<std::string>& context_tokens,
                       const std::vector<int>& context_ids, const text::Vocabulary& vocab,
                       bool copy_enabled) {
  CopyMap m;
  m.vocab_size = vocab.size();
  m.slots.resize(context_tokens.size());
  if (!copy_enabled) {
    m.ext_size = m.vocab_size;
    for (size_t i = 0; i < context_ids.size(); ++i) m.slots[i] = context_ids[i];
    return m;
  }
  for (size_t i = 0; i < context_tokens.size(); ++i) {
    if (context_ids[i] != Vocabulary::kUnk) {
      m.slots[i] = context_ids[i];
      continue;
    }
    int slot = -1;
    for (size_t e = 0; e < m.ext_tokens.size(); ++e)
      if (m.ext_tokens[e] == context_tokens[i]) {
        slot = m.vocab_size + static_cast<int>(e);
        break;
      }
    if (slot < 0) {
      slot = m.vocab_size + static_cast<int>(m.ext_tokens.size());
      m.ext_tokens.push_back(context_tokens[i]);
    }
    m.slots[i] = slot;
  }
  m.ext_size = m.vocab_size + static_cast<int>(m.ext_tokens.size());
  return m;
}

QGModel QGModel::init(const QGConfig& cfg, const text::Vocabulary& vocab, Rng& rng) {
  cfg.validate();
  QGModel m;
  m.cfg = cfg;
  m.vocab = vocab;

  const int h = cfg.hidden;
  const int e = cfg.embed_dim();
  const int two_h = 2 * h;

  // The word table is also the output projection; kept fixed during training.
  // Unit-scale rows, not 1/sqrt(fan_in): the frozen tie means the row norms
  // bound the reachable logit range (o_j lies in [-1,1]^d after maxout).
  {
    Tensor words = Tensor::zeros({vocab.size(), cfg.word_dim});
    for (double& v : words.v) v = rng.uniform(-1.0, 1.0);
    m.params.add("emb.word", std::move(words), /*train=*/false);
  }
  m.params.add("emb.bio", nn::init_uniform({text::tags::kBioSize, cfg.ans_dim}, cfg.ans_dim, rng));
  m.params.add("emb.pos", nn::init_uniform({text::tags::pos_size(), cfg.pos_dim}, cfg.pos_dim, rng));
  m.params.add("emb.ner", nn::init_uniform({text::tags::ner_size(), cfg.ner_dim}, cfg.ner_dim, rng));

  for (int l = 0; l < cfg.layers; ++l) {
    const int in = l == 0 ? e : two_h;
    for (const char* dir : {"fwd", "bwd"}) {
      const std::string p = "enc.l" + std::to_string(l) + "." + dir;
      m.params.add(p + ".Wx", nn::init_uniform({4 * h, in}, in, rng));
      m.params.add(p + ".Wh", nn::init_uniform({4 * h, h}, h, rng));
      m.params.add(p + ".b", nn::init_lstm_bias(h));
    }
  }

  m.params.add("attn.Wu", nn::init_uniform({two_h, two_h}, two_h, rng));
  m.params.add("attn.Wf", nn::init_uniform({two_h, 2 * two_h}, 2 * two_h, rng));
  m.params.add("attn.Wg", nn::init_uniform({two_h, 2 * two_h}, 2 * two_h, rng));

  for (int l = 0; l < cfg.layers; ++l) {
    const std::string p = "dec.init.l" + std::to_string(l);
    m.params.add(p + ".W", nn::init_uniform({h, two_h}, two_h, rng));
    m.params.add(p + ".b", Tensor::zeros({h}));
    const int in = l == 0 ? cfg.word_dim + h : h;
    const std::string q = "dec.l" + std::to_string(l);
    m.params.add(q + ".Wx", nn::init_uniform({4 * h, in}, in, rng));
    m.params.add(q + ".Wh", nn::init_uniform({4 * h, h}, h, rng));
    m.params.add(q + ".b", nn::init_lstm_bias(h));
  }

  m.params.add("attn.Wa", nn::init_uniform({two_h, h}, h, rng));
  m.params.add("attn.Wc", nn::init_uniform({h, two_h + h}, two_h + h, rng));
  m.params.add("out.Wo", nn::init_uniform({2 * cfg.word_dim, two_h + h}, two_h + h, rng));
  if (cfg.copy_enabled) {
    m.params.add("copy.W", nn::init_uniform({1, two_h + h + cfg.word_dim}, two_h + h + cfg.word_dim, rng));
    m.params.add("copy.b", Tensor::zeros({1}));
  }
  return m;
}

void QGModel::save(const std::string& path) const {
  nlohmann::json header;
  header["type"] = "qg";
  header["config"] = cfg.to_json();
  header["vocab"] = vocab.to_json();
  write_checkpoint(path, "QGCK", header, params);
}

QGModel QGModel::load(const std::string& path) {
  Checkpoint ck = read_checkpoint(path, "QGCK");
  QGModel m;
  m.cfg = QGConfig::from_json(ck.header.at("config"));
  m.vocab = Vocabulary::from_json(ck.header.at("vocab"));
  m.params = std::move(ck.params);
  if (m.params.get("emb.word").rows() != m.vocab.size())
    throw DataError("qg checkpoint: word table does not match vocabulary size");
  return m;
}

int QGModel::import_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embedding file: " + path);
  Tensor& table = params.get("emb.word");
  std::string line;
  int imported = 0, line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string tok;
    ss >> tok;
    if (!vocab.contains(tok)) continue;
    const int id = vocab.id(tok);
    for (int d = 0; d < cfg.word_dim; ++d) {
      double x;
      if (!(ss >> x))
        throw DataError("embedding file line " + std::to_string(line_no) + ": expected " +
                        std::to_string(cfg.word_dim) + " values");
      table.at(id, d) = x;
    }
    ++imported;
  }
  return imported;
}

Val QGModel::embed_word(ParamBinder& pb, int ext_id) const {
  Graph& g = pb.graph();
  const int id = ext_id < vocab.size() ? ext_id : Vocabulary::kUnk;
  return g.row(pb("emb.word"), id);
}

std::vector<Val> QGModel::embed(ParamBinder& pb, const text::TokenizedExample& ex) const {
  Graph& g = pb.graph();
  const int m = static_cast<int>(ex.context_tokens.size());
  std::vector<Val> out;
  out.reserve(static_cast<size_t>(m));
  Val words = pb("emb.word");
  Val bios = pb("emb.bio");
  Val poss = pb("emb.pos");
  Val ners = pb("emb.ner");
  for (int i = 0; i < m; ++i) {
    const int wid = ex.context_ids[static_cast<size_t>(i)];
    if (wid < 0 || wid >= vocab.size()) throw DataError("embed: word id out of range");
    const int bio = ex.bio_tags[static_cast<size_t>(i)];
    const int pos = ex.pos_tags[static_cast<size_t>(i)];
    const int ner = ex.ner_tags[static_cast<size_t>(i)];
    if (bio < 0 || bio >= text::tags::kBioSize || pos < 0 || pos >= text::tags::pos_size() ||
        ner < 0 || ner >= text::tags::ner_size())
      throw DataError("embed: tag id out of range");
    // Concatenation order: word, answer tag, POS, NER.
    out.push_back(g.concat({g.row(words, wid), g.row(bios, bio), g.row(poss, pos), g.row(ners, ner)}));
  }
  return out;
}

namespace {
// One direction of one LSTM layer; returns outputs per position (input order).
std::vector<Val> run_lstm(ParamBinder& pb, const std::string& prefix, const std::vector<Val>& inputs,
                          bool backward, int hidden, double dropout, bool train, Rng* rng,
                          Val* final_h) {
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
  if (final_h) *final_h = h;
  return out;
}
}  // namespace

QGModel::EncodeOut QGModel::encode(ParamBinder& pb, const std::vector<Val>& embedded, bool train,
                                   Rng* rng) const {
  if (embedded.empty()) throw DataError("encode: empty input");
  Graph& g = pb.graph();
  EncodeOut out;
  std::vector<Val> layer_in = embedded;
  for (int l = 0; l < cfg.layers; ++l) {
    const std::string p = "enc.l" + std::to_string(l);
    Val ffin, bfin;
    std::vector<Val> fwd = run_lstm(pb, p + ".fwd", layer_in, false, cfg.hidden, cfg.dropout, train, rng, &ffin);
    std::vector<Val> bwd = run_lstm(pb, p + ".bwd", layer_in, true, cfg.hidden, cfg.dropout, train, rng, &bfin);
    std::vector<Val> merged(layer_in.size());
    for (size_t i = 0; i < layer_in.size(); ++i) merged[i] = g.concat({fwd[i], bwd[i]});
    out.final_fwd.push_back(ffin);
    out.final_bwd.push_back(bfin);
    layer_in = std::move(merged);
  }
  out.H = std::move(layer_in);
  return out;
}

QGModel::SelfAttnOut QGModel::self_attend(ParamBinder& pb, const std::vector<Val>& H) const {
  if (H.empty()) throw DataError("self_attend: empty input");
  Graph& g = pb.graph();
  Val Wu = pb("attn.Wu");
  Val Wf = pb("attn.Wf");
  Val Wg = pb("attn.Wg");
  Val hmat = g.stack_rows(H);
  SelfAttnOut out;
  out.Hhat.reserve(H.size());
  out.alphas.reserve(H.size());
  for (const Val& h : H) {
    Val scores = g.matvec(hmat, g.matvec(Wu, h));  // h_t · (W^u h_i) over t
    Val alpha = g.softmax(scores);
    Val u = g.matvec_t(hmat, alpha);
    Val hu = g.concat({h, u});
    Val f = g.tanh_(g.matvec(Wf, hu));
    Val gate = g.sigmoid_(g.matvec(Wg, hu));
    // g∘f + (1-g)∘h written as h + g∘(f-h): the gate-off identity is exact.
    Val hhat = g.add(h, g.mul(gate, g.sub(f, h)));
    out.alphas.push_back(alpha);
    out.Hhat.push_back(hhat);
  }
  out.hhat_mat = g.stack_rows(out.Hhat);
  return out;
}

QGModel::DecState QGModel::decoder_init(ParamBinder& pb, const EncodeOut& enc) const {
  Graph& g = pb.graph();
  DecState st;
  for (int l = 0; l < cfg.layers; ++l) {
    const std::string p = "dec.init.l" + std::to_string(l);
    Val s = g.concat({enc.final_fwd[static_cast<size_t>(l)], enc.final_bwd[static_cast<size_t>(l)]});
    st.h.push_back(g.tanh_(nn::affine(g, pb(p + ".W"), s, pb(p + ".b"))));
    st.c.push_back(g.input(Tensor::zeros({cfg.hidden})));
  }
  st.stilde = g.input(Tensor::zeros({cfg.hidden}));
  st.step = 0;
  return st;
}

QGModel::StepOut QGModel::decode_step(ParamBinder& pb, const DecState& state, int prev_ext_id,
                                      const SelfAttnOut& ctx, const CopyMap& cmap, bool train,
                                      Rng* rng) const {
  Graph& g = pb.graph();
  if (prev_ext_id < 0 || prev_ext_id >= cmap.ext_size) throw DataError("decode_step: bad prev token id");

  StepOut out;
  out.next = state;
  out.next.step = state.step + 1;

  Val prev_emb = embed_word(pb, prev_ext_id);

  // Advance the recurrence with [y_{j-1}; s̃_{j-1}] except at the first step,
  // where the initial state is used as-is.
  if (state.step > 0) {
    Val x = g.concat({prev_emb, state.stilde});
    for (int l = 0; l < cfg.layers; ++l) {
      if (train && cfg.dropout > 0.0 && rng) x = nn::dropout(g, x, cfg.dropout, *rng, true);
      const std::string p = "dec.l" + std::to_string(l);
      auto [nh, nc] = nn::lstm_step(g, x, out.next.h[static_cast<size_t>(l)],
                                    out.next.c[static_cast<size_t>(l)], pb(p + ".Wx"), pb(p + ".Wh"),
                                    pb(p + ".b"));
      out.next.h[static_cast<size_t>(l)] = nh;
      out.next.c[static_cast<size_t>(l)] = nc;
      x = nh;
    }
  }
  Val s = out.next.h.back();

  Val scores = g.matvec(ctx.hhat_mat, g.matvec(pb("attn.Wa"), s));
  Val alpha = g.softmax(scores);
  Val c = g.matvec_t(ctx.hhat_mat, alpha);
  Val cs = g.concat({c, s});
  out.next.stilde = g.tanh_(g.matvec(pb("attn.Wc"), cs));

  Val otilde = g.tanh_(g.matvec(pb("out.Wo"), cs));
  Val o = g.maxout_pairs(otilde);
  Val logits = g.matvec(pb("emb.word"), o);
  Val pv = g.softmax(logits);

  if (cfg.copy_enabled) {
    Val gate_in = g.concat({cs, prev_emb});
    Val gate = g.sigmoid_(nn::affine(g, pb("copy.W"), gate_in, pb("copy.b")));
    out.dist = g.mix_copy(pv, alpha, gate, cmap.slots, cmap.ext_size);
  } else {
    out.dist = pv;
  }
  out.alpha = alpha;
  return out;
}

std::vector<int> QGModel::question_target_ids(const text::TokenizedExample& ex,
                                              const CopyMap& cmap) const {
  if (!ex.has_question) throw DataError("teacher forcing: example has no question");
  std::vector<int> ids;
  ids.reserve(ex.question_tokens.size() + 1);
  for (const std::string& tok : ex.question_tokens) ids.push_back(cmap.target_id(tok, vocab));
  ids.push_back(Vocabulary::kEos);
  return ids;
}

QGModel::TeacherForced QGModel::forward_teacher_forced(ParamBinder& pb,
                                                       const text::TokenizedExample& ex,
                                                       const std::vector<int>& target_ext_ids,
                                                       const CopyMap& cmap, bool train,
                                                       Rng* rng) const {
  if (target_ext_ids.empty()) throw DataError("teacher forcing: empty target");
  Graph& g = pb.graph();
  std::vector<Val> embedded = embed(pb, ex);
  EncodeOut enc = encode(pb, embedded, train, rng);
  SelfAttnOut ctx = self_attend(pb, enc.H);
  DecState st = decoder_init(pb, enc);

  TeacherForced out;
  out.targets = target_ext_ids;
  std::vector<Val> logps;
  int prev = Vocabulary::kBos;
  for (int target : target_ext_ids) {
    StepOut so = decode_step(pb, st, prev, ctx, cmap, train, rng);
    st = so.next;
    Val logp = g.log_(g.pick(so.dist, target));
    logps.push_back(logp);
    out.step_logp.push_back(g.scalar(logp));
    const Tensor& dist = g.value(so.dist);
    int arg = 0;
    for (int v = 1; v < static_cast<int>(dist.v.size()); ++v)
      if (dist.v[static_cast<size_t>(v)] > dist.v[static_cast<size_t>(arg)]) arg = v;
    if (arg == target) ++out.correct;
    prev = target;
  }
  Val total = logps[0];
  for (size_t j = 1; j < logps.size(); ++j) total = g.add(total, logps[j]);
  out.loss = g.scale(total, -1.0 / static_cast<double>(logps.size()));
  return out;
}

std::vector<std::string> QGModel::token_strings(const std::vector<int>& ext_ids,
                                                const CopyMap& cmap) const {
  std::vector<std::string> out;
  out.reserve(ext_ids.size());
  for (int id : ext_ids) out.push_back(cmap.token_string(id, vocab));
  return out;
}

QGStepScorer::QGStepScorer(const QGModel& model, const text::TokenizedExample& ex)
    : model_(model) {
  cmap_ = build_copy_map(ex.context_tokens, ex.context_ids, model.vocab, model.cfg.copy_enabled);
  pb_ = std::make_unique<ParamBinder>(graph_, model_.params);
  std::vector<Val> embedded = model_.embed(*pb_, ex);
  enc_ = model_.encode(*pb_, embedded, /*train=*/false, nullptr);
  ctx_ = model_.self_attend(*pb_, enc_.H);
}

int QGStepScorer::init_state() {
  states_.push_back(model_.decoder_init(*pb_, enc_));
  return static_cast<int>(states_.size()) - 1;
}

std::pair<std::vector<double>, int> QGStepScorer::step(int state, int prev_token) {
  if (state < 0 || state >= static_cast<int>(states_.size())) throw DataError("scorer: bad state handle");
  QGModel::StepOut so =
      model_.decode_step(*pb_, states_[static_cast<size_t>(state)], prev_token, ctx_, cmap_,
                         /*train=*/false, nullptr);
  states_.push_back(so.next);
  const Tensor& dist = graph_.value(so.dist);
  std::vector<double> logp(dist.v.size());
  for (size_t i = 0; i < dist.v.size(); ++i) logp[i] = std::log(std::max(dist.v[i], 1e-300));
  return {std::move(logp), static_cast<int>(states_.size()) - 1};
}

}  // namespace qgen::model
