#include "fixtures.hpp"

using namespace qgen;

namespace accept {

World::World()
    : spec(text::ToyLanguageSpec::builtin()),
      corpus(text::make_toy_corpus(spec, 200, 100, 400)),
      tagger(spec.make_tagger()) {
  fs::create_directories(cache);
}

model::QGConfig World::qg_config() const {
  model::QGConfig cfg;  // desk-scale defaults
  cfg.dropout = 0.0;    // memorization and RL fixtures run without dropout
  return cfg;
}

reward::QAConfig World::qa_config() const {
  reward::QAConfig cfg;
  cfg.dropout = 0.1;
  return cfg;
}

train::PreparedCorpus World::prep(const std::vector<text::QAExample>& data,
                                  const model::QGModel& m, bool require_question) const {
  return train::PreparedCorpus::build(data, m, *tagger, require_question);
}

model::QGModel World::qg_converged() {
  const fs::path path = cache / "qg_converged.ckpt";
  if (fs::exists(path)) return model::QGModel::load(path.string());
  nn::Rng rng(7);
  model::QGModel m = model::QGModel::init(qg_config(), text::build_vocab(corpus.train), rng);
  train::PreparedCorpus tr = prep(corpus.train, m);
  train::PreparedCorpus dv = prep(corpus.dev, m);
  train::TrainConfig cfg;
  cfg.max_epochs = 120;
  cfg.patience = 120;
  cfg.batch_size = 32;
  cfg.lr = 0.003;
  cfg.seed = 7;
  cfg.stop_train_accuracy = 0.95;
  train::TrainResult r = train_teacher_forcing(m, tr, dv, cfg);
  m.params = r.best_params;
  m.save(path.string());
  return m;
}

model::QGModel World::qg_1epoch() {
  const fs::path path = cache / "qg_1epoch.ckpt";
  if (fs::exists(path)) return model::QGModel::load(path.string());
  nn::Rng rng(7);
  model::QGModel m = model::QGModel::init(qg_config(), text::build_vocab(corpus.train), rng);
  train::PreparedCorpus tr = prep(corpus.train, m);
  train::TrainConfig cfg;
  cfg.max_epochs = 1;
  cfg.patience = 1;
  cfg.batch_size = 32;
  cfg.lr = 0.003;
  cfg.seed = 7;
  train::TrainResult r = train_teacher_forcing(m, tr, tr, cfg);
  m.params = r.best_params;
  m.save(path.string());
  return m;
}

reward::QAModel World::qa_gt(uint64_t seed) {
  const fs::path path = cache / ("qa_gt_" + std::to_string(seed) + ".ckpt");
  if (fs::exists(path)) return reward::QAModel::load(path.string());
  reward::QATrainOptions opt;
  opt.max_epochs = 60;
  opt.patience = 12;
  opt.lr = 0.01;
  opt.seed = seed;
  reward::QATrainResult r = reward::train_qa(corpus.train, corpus.dev, qa_config(), opt);
  r.model.save(path.string());
  return r.model;
}

reward::QPCModel World::qpc() {
  const fs::path path = cache / "qpc.ckpt";
  if (fs::exists(path)) return reward::QPCModel::load(path.string());
  auto pairs = text::make_paraphrase_pairs(spec, 600);
  std::vector<text::ParaphrasePair> tr(pairs.begin(), pairs.end() - 120);
  std::vector<text::ParaphrasePair> dv(pairs.end() - 120, pairs.end());
  reward::QPCConfig cfg;
  cfg.dropout = 0.0;
  reward::QPCTrainOptions opt;
  opt.max_epochs = 40;
  opt.patience = 8;
  opt.seed = 7;
  opt.stop_accuracy = 0.95;
  reward::QPCTrainResult r = reward::train_qpc(tr, dv, cfg, opt);
  r.model.save(path.string());
  return r.model;
}

std::vector<augment::SyntheticExample> World::scored_synthetic(model::QGModel& qg,
                                                               uint64_t qa_seed) {
  augment::GenerateOptions opt;
  opt.decode.beam_size = 1;
  opt.decode.max_len = 20;
  opt.decode.block_ngram = 3;
  opt.top_k = 1;
  opt.generator_id = "fixture";
  std::vector<augment::SyntheticExample> syn =
      augment::generate_from_new(qg, corpus.unlabeled, *tagger, opt);
  reward::QAModel qa = qa_gt(qa_seed);
  augment::qap_score_all(syn, qa);
  return syn;
}

}  // namespace accept
