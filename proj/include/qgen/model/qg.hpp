#pragma once

#include <memory>
#include <string>
#include <vector>

#include "qgen/decode/decode.hpp"
#include "qgen/nn/blocks.hpp"
#include "qgen/text/data.hpp"

namespace qgen::model {

struct QGConfig {
  int word_dim = 32;
  int ans_dim = 8;
  int pos_dim = 8;
  int ner_dim = 8;
  int hidden = 64;  // per-direction encoder hidden size and decoder hidden size
  int layers = 2;
  double dropout = 0.3;
  bool copy_enabled = true;
  int max_question_len = 20;

  int embed_dim() const { return word_dim + ans_dim + pos_dim + ner_dim; }
  int enc_out_dim() const { return 2 * hidden; }

  void validate() const;
  nlohmann::json to_json() const;
  static QGConfig from_json(const nlohmann::json& j);
};

// Per-example extension of the vocabulary with out-of-vocabulary source
// tokens; the copy distribution lives over [0, ext_size).
struct CopyMap {
  int vocab_size = 0;
  int ext_size = 0;
  std::vector<int> slots;               // per source position -> extended id
  std::vector<std::string> ext_tokens;  // strings for ids >= vocab_size

  // Token string -> extended id (UNK when neither in vocab nor in source).
  int target_id(const std::string& tok, const text::Vocabulary& vocab) const;
  std::string token_string(int ext_id, const text::Vocabulary& vocab) const;
};

CopyMap build_copy_map(const std::vector<std::string>& context_tokens,
                       const std::vector<int>& context_ids, const text::Vocabulary& vocab,
                       bool copy_enabled);

class QGModel {
 public:
  QGConfig cfg;
  text::Vocabulary vocab;
  nn::ParameterSet params;

  static QGModel init(const QGConfig& cfg, const text::Vocabulary& vocab, nn::Rng& rng);

  void save(const std::string& path) const;
  static QGModel load(const std::string& path);

  // Replaces word-embedding rows for tokens found in a `token v1 .. vD` text
  // file; returns the number of rows imported.
  int import_embeddings(const std::string& path);

  // ---- graph builders ----
  struct EncodeOut {
    std::vector<nn::Val> H;  // M vectors of size 2*hidden
    std::vector<nn::Val> final_fwd, final_bwd;  // per layer
  };
  struct SelfAttnOut {
    std::vector<nn::Val> Hhat;    // M vectors of size 2*hidden
    nn::Val hhat_mat;             // [M, 2*hidden]
    std::vector<nn::Val> alphas;  // per-position attention rows
  };
  struct DecState {
    std::vector<nn::Val> h, c;  // per layer
    nn::Val stilde;             // previous step's attentional state
    int step = 0;
  };
  struct StepOut {
    nn::Val dist;   // probability vector over ext_size (vocab_size without copy)
    nn::Val alpha;  // decoder attention row
    DecState next;
  };

  std::vector<nn::Val> embed(nn::ParamBinder& pb, const text::TokenizedExample& ex) const;
  EncodeOut encode(nn::ParamBinder& pb, const std::vector<nn::Val>& embedded, bool train,
                   nn::Rng* rng) const;
  SelfAttnOut self_attend(nn::ParamBinder& pb, const std::vector<nn::Val>& H) const;
  DecState decoder_init(nn::ParamBinder& pb, const EncodeOut& enc) const;
  StepOut decode_step(nn::ParamBinder& pb, const DecState& state, int prev_ext_id,
                      const SelfAttnOut& ctx, const CopyMap& cmap, bool train, nn::Rng* rng) const;

  struct TeacherForced {
    nn::Val loss;                   // mean NLL over steps (gold question + EOS)
    std::vector<double> step_logp;  // log p(y_j | y_<j)
    std::vector<int> targets;       // extended ids, EOS last
    int correct = 0;                // argmax(dist) == target count
  };
  TeacherForced forward_teacher_forced(nn::ParamBinder& pb, const text::TokenizedExample& ex,
                                       const std::vector<int>& target_ext_ids, const CopyMap& cmap,
                                       bool train, nn::Rng* rng) const;

  // Gold question as extended target ids with EOS appended.
  std::vector<int> question_target_ids(const text::TokenizedExample& ex, const CopyMap& cmap) const;

  std::vector<std::string> token_strings(const std::vector<int>& ext_ids, const CopyMap& cmap) const;

 private:
  nn::Val embed_word(nn::ParamBinder& pb, int ext_id) const;  // UNK row for copied OOVs
};

// Inference-time incremental scorer over one example; plugs into decode::.
class QGStepScorer : public decode::StepScorer {
 public:
  QGStepScorer(const QGModel& model, const text::TokenizedExample& ex);

  int dist_size() const override { return cmap_.ext_size; }
  int bos() const override { return text::Vocabulary::kBos; }
  int eos() const override { return text::Vocabulary::kEos; }
  int init_state() override;
  std::pair<std::vector<double>, int> step(int state, int prev_token) override;

  const CopyMap& copy_map() const { return cmap_; }

 private:
  const QGModel& model_;
  CopyMap cmap_;
  nn::Graph graph_;
  std::unique_ptr<nn::ParamBinder> pb_;
  QGModel::SelfAttnOut ctx_;
  QGModel::EncodeOut enc_;
  std::vector<QGModel::DecState> states_;
  bool encoded_ = false;
};

}  // namespace qgen::model
