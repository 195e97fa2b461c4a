// qgen: question-generation training, semi-supervised QA, and evaluation
// pipelines on a deterministic toy QA language.

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "qgen/augment/augment.hpp"
#include "qgen/common.hpp"
#include "qgen/eval/qa_eval.hpp"
#include "qgen/nn/grad_check.hpp"
#include "qgen/nn/kernels.hpp"
#include "qgen/train/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace qgen;

namespace {

uint64_t default_seed() {
  if (const char* env = std::getenv("QGEN_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw UsageError("QGEN_SEED is not a number");
    }
  }
  return 7;
}

struct ManifestWriter {
  std::string command;
  json config = json::object();
  uint64_t seed = 0;
  std::vector<std::string> inputs, outputs;

  void write(const std::string& path) const {
    json j;
    j["command"] = command;
    j["config"] = config;
    j["seed"] = seed;
    j["tool_version"] = kToolVersion;
    json ins = json::array();
    for (const std::string& p : inputs) ins.push_back({{"path", p}, {"digest", file_digest(p)}});
    json outs = json::array();
    for (const std::string& p : outputs) outs.push_back({{"path", p}, {"digest", file_digest(p)}});
    j["inputs"] = ins;
    j["outputs"] = outs;
    j["timestamp"] = static_cast<int64_t>(
        std::chrono::duration_cast<std::chrono::seconds>(
            std::chrono::system_clock::now().time_since_epoch())
            .count());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write manifest: " + path);
    out << j.dump(2) << '\n';
  }
};

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory: " + dir);
}

std::ofstream open_metrics(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write metrics log: " + path);
  return out;
}

text::ToyLanguageSpec spec_from(const std::string& path, uint64_t seed) {
  text::ToyLanguageSpec spec =
      path.empty() ? text::ToyLanguageSpec::builtin() : text::ToyLanguageSpec::load(path);
  spec.seed = seed;
  return spec;
}

// ---------------------------------------------------------------- commands

struct MakeToyArgs {
  std::string out_dir;
  std::string spec_path;
  uint64_t seed = default_seed();
  int n_train = 200, n_dev = 100, n_unlabeled = 400, n_pairs = 600;
};

int cmd_make_toy_data(const MakeToyArgs& a) {
  ensure_dir(a.out_dir);
  text::ToyLanguageSpec spec = spec_from(a.spec_path, a.seed);
  text::ToyCorpus corpus = text::make_toy_corpus(spec, a.n_train, a.n_dev, a.n_unlabeled);
  auto pairs = text::make_paraphrase_pairs(spec, a.n_pairs);
  const int n_pair_dev = a.n_pairs / 5;
  std::vector<text::ParaphrasePair> pairs_train(pairs.begin(), pairs.end() - n_pair_dev);
  std::vector<text::ParaphrasePair> pairs_dev(pairs.end() - n_pair_dev, pairs.end());

  const std::string train_p = a.out_dir + "/train.jsonl";
  const std::string dev_p = a.out_dir + "/dev.jsonl";
  const std::string unlabeled_p = a.out_dir + "/unlabeled.jsonl";
  const std::string ptrain_p = a.out_dir + "/qpc_pairs_train.jsonl";
  const std::string pdev_p = a.out_dir + "/qpc_pairs_dev.jsonl";
  text::save_jsonl(train_p, corpus.train);
  text::save_jsonl(dev_p, corpus.dev);
  text::save_jsonl(unlabeled_p, corpus.unlabeled);
  text::save_pairs_jsonl(ptrain_p, pairs_train);
  text::save_pairs_jsonl(pdev_p, pairs_dev);

  ManifestWriter m;
  m.command = "make-toy-data";
  m.seed = a.seed;
  m.config = {{"n_train", a.n_train},
              {"n_dev", a.n_dev},
              {"n_unlabeled", a.n_unlabeled},
              {"n_pairs", a.n_pairs},
              {"spec", a.spec_path.empty() ? "builtin" : a.spec_path}};
  m.outputs = {train_p, dev_p, unlabeled_p, ptrain_p, pdev_p};
  m.write(a.out_dir + "/manifest.json");
  std::cout << "wrote " << corpus.train.size() << " train / " << corpus.dev.size() << " dev / "
            << corpus.unlabeled.size() << " unlabeled examples to " << a.out_dir << "\n";
  return 0;
}

struct ImportSquadArgs {
  std::string in_path, out_path;
};

int cmd_import_squad(const ImportSquadArgs& a) {
  text::SquadImport imp = text::import_squad(a.in_path);
  text::save_jsonl(a.out_path, imp.examples);
  ManifestWriter m;
  m.command = "import-squad";
  m.inputs = {a.in_path};
  m.outputs = {a.out_path};
  m.config = {{"warnings", imp.warnings}};
  m.write(a.out_path + ".manifest.json");
  std::cout << "imported " << imp.examples.size() << " examples (" << imp.warnings
            << " skipped with warnings)\n";
  return imp.warnings > 0 ? 0 : 0;
}

struct TrainQgArgs {
  std::string train_path, dev_path, out_dir, init_ckpt, embedding_file;
  std::string reward = "none";
  std::string alt_rate = "3:1";
  std::string qpc_ckpt, qa_ckpt;
  uint64_t seed = default_seed();
  int epochs = 200, patience = 10, batch = 32;
  double lr = 0.001, rl_lr = 0.00001;
  double gamma_qpp = 0.99, gamma_qap = 0.97, gamma_metric = 0.99;
  int hidden = 64, word_dim = 32, tag_dim = 8, max_len = 20;
  double dropout = 0.3;
  bool no_copy = false;
  int rl_epochs = 30;
};

int cmd_train_qg(const TrainQgArgs& a) {
  ensure_dir(a.out_dir);
  std::vector<text::QAExample> train_data = text::load_jsonl(a.train_path);
  std::vector<text::QAExample> dev_data = text::load_jsonl(a.dev_path);
  text::ToyLanguageSpec spec = text::ToyLanguageSpec::builtin();
  auto tagger = spec.make_tagger();

  model::QGModel model = [&] {
    if (!a.init_ckpt.empty()) return model::QGModel::load(a.init_ckpt);
    model::QGConfig cfg;
    cfg.word_dim = a.word_dim;
    cfg.ans_dim = cfg.pos_dim = cfg.ner_dim = a.tag_dim;
    cfg.hidden = a.hidden;
    cfg.dropout = a.dropout;
    cfg.copy_enabled = !a.no_copy;
    cfg.max_question_len = a.max_len;
    text::Vocabulary vocab = text::build_vocab(train_data);
    nn::Rng rng(a.seed);
    return model::QGModel::init(cfg, vocab, rng);
  }();
  if (!a.embedding_file.empty()) {
    const int n = model.import_embeddings(a.embedding_file);
    std::cout << "imported " << n << " embedding rows\n";
  }

  train::PreparedCorpus train_prep = train::PreparedCorpus::build(train_data, model, *tagger);
  train::PreparedCorpus dev_prep = train::PreparedCorpus::build(dev_data, model, *tagger);

  train::TrainConfig cfg;
  cfg.batch_size = a.batch;
  cfg.max_epochs = a.epochs;
  cfg.patience = a.patience;
  cfg.lr = a.lr;
  cfg.rl_lr = a.rl_lr;
  cfg.gamma_qpp = a.gamma_qpp;
  cfg.gamma_qap = a.gamma_qap;
  cfg.gamma_metric = a.gamma_metric;
  cfg.seed = a.seed;
  cfg.sample_max_len = a.max_len;
  if (std::sscanf(a.alt_rate.c_str(), "%d:%d", &cfg.alt_n, &cfg.alt_m) != 2)
    throw UsageError("--alt-rate must look like n:m");
  cfg.validate();

  const std::string metrics_p = a.out_dir + "/metrics.jsonl";
  std::ofstream metrics = open_metrics(metrics_p);
  auto sink = [&metrics](const json& j) { metrics << j.dump() << '\n'; };

  if (a.reward == "none" || a.init_ckpt.empty()) {
    train::TrainResult tf = train::train_teacher_forcing(model, train_prep, dev_prep, cfg, sink);
    model.params = tf.best_params;
  }

  if (a.reward != "none") {
    train::RlTrainSpec spec_rl;
    std::optional<reward::QPCModel> qpc;
    std::optional<reward::QAModel> qa;
    if (a.reward == "qpp" || a.reward == "qpp+qap") {
      if (a.qpc_ckpt.empty()) throw UsageError("--reward " + a.reward + " needs --qpc CHECKPOINT");
      qpc.emplace(reward::QPCModel::load(a.qpc_ckpt));
      spec_rl.qpp_fn = reward::make_qpp_reward(*qpc);
    }
    if (a.reward == "qap" || a.reward == "qpp+qap") {
      if (a.qa_ckpt.empty()) throw UsageError("--reward " + a.reward + " needs --qa CHECKPOINT");
      qa.emplace(reward::QAModel::load(a.qa_ckpt));
      spec_rl.qap_fn = reward::make_qap_reward(*qa);
    }
    if (a.reward == "qpp+qap") {
      spec_rl.kinds = {reward::RewardKind::QPP, reward::RewardKind::QAP};
    } else if (a.reward == "qpp") {
      spec_rl.kinds = {reward::RewardKind::QPP};
    } else if (a.reward == "qap") {
      spec_rl.kinds = {reward::RewardKind::QAP};
    } else if (a.reward == "bleu4" || a.reward == "rougeL") {
      spec_rl.kinds = {reward::reward_kind_from_name(a.reward)};
      spec_rl.metric_fn = reward::make_metric_reward(spec_rl.kinds[0]);
    } else {
      throw UsageError("unknown --reward: " + a.reward);
    }
    train::TrainConfig rl_cfg = cfg;
    rl_cfg.max_epochs = a.rl_epochs;
    train::TrainResult rl = train::multi_reward_train(model, train_prep, dev_prep, spec_rl, rl_cfg, sink);
    model.params = rl.best_params;
  }

  const std::string ckpt_p = a.out_dir + "/qg.ckpt";
  model.save(ckpt_p);
  metrics.close();

  ManifestWriter m;
  m.command = "train-qg";
  m.seed = a.seed;
  m.config = {{"reward", a.reward},   {"epochs", a.epochs},       {"batch_size", a.batch},
              {"lr", a.lr},           {"rl_lr", a.rl_lr},         {"gamma_qpp", a.gamma_qpp},
              {"gamma_qap", a.gamma_qap}, {"alt_rate", a.alt_rate}, {"hidden", a.hidden},
              {"dropout", a.dropout}, {"copy", !a.no_copy}};
  m.inputs = {a.train_path, a.dev_path};
  if (!a.init_ckpt.empty()) m.inputs.push_back(a.init_ckpt);
  m.outputs = {ckpt_p, metrics_p};
  m.write(a.out_dir + "/manifest.json");
  std::cout << "saved QG checkpoint to " << ckpt_p << "\n";
  return 0;
}

struct TrainQpcArgs {
  std::string pairs_train, pairs_dev, out_dir;
  uint64_t seed = default_seed();
  int epochs = 50, patience = 10, batch = 32;
  double lr = 0.001;
  int hidden = 64, word_dim = 32, mlp_hidden = 64;
  double dropout = 0.1;
};

int cmd_train_qpc(const TrainQpcArgs& a) {
  ensure_dir(a.out_dir);
  auto train = text::load_pairs_jsonl(a.pairs_train);
  auto dev = text::load_pairs_jsonl(a.pairs_dev);
  reward::QPCConfig cfg;
  cfg.word_dim = a.word_dim;
  cfg.hidden = a.hidden;
  cfg.mlp_hidden = a.mlp_hidden;
  cfg.dropout = a.dropout;
  reward::QPCTrainOptions opt;
  opt.batch_size = a.batch;
  opt.max_epochs = a.epochs;
  opt.patience = a.patience;
  opt.lr = a.lr;
  opt.seed = a.seed;

  const std::string metrics_p = a.out_dir + "/metrics.jsonl";
  std::ofstream metrics = open_metrics(metrics_p);
  reward::QPCTrainResult r =
      reward::train_qpc(train, dev, cfg, opt, [&metrics](const json& j) { metrics << j.dump() << '\n'; });
  metrics.close();
  const std::string ckpt_p = a.out_dir + "/qpc.ckpt";
  r.model.save(ckpt_p);

  ManifestWriter m;
  m.command = "train-qpc";
  m.seed = a.seed;
  m.config = {{"epochs", a.epochs}, {"batch_size", a.batch}, {"lr", a.lr},
              {"hidden", a.hidden}, {"best_dev_accuracy", r.best_dev_accuracy}};
  m.inputs = {a.pairs_train, a.pairs_dev};
  m.outputs = {ckpt_p, metrics_p};
  m.write(a.out_dir + "/manifest.json");
  std::cout << "QPC dev accuracy " << r.best_dev_accuracy << ", checkpoint at " << ckpt_p << "\n";
  return 0;
}

struct TrainQaArgs {
  std::string train_path, dev_path, out_dir, synthetic_path;
  uint64_t seed = default_seed();
  int epochs = 80, patience = 10, batch = 32;
  double lr = 0.001;
  int hidden = 64, word_dim = 32, max_span_len = 10;
  double dropout = 0.1;
};

int cmd_train_qa(const TrainQaArgs& a, bool semi) {
  ensure_dir(a.out_dir);
  std::vector<text::QAExample> train = text::load_jsonl(a.train_path);
  std::vector<text::QAExample> dev = text::load_jsonl(a.dev_path);

  std::vector<text::QAExample> synthetic;
  std::optional<augment::SemiDataset> semi_data;
  if (semi) {
    if (a.synthetic_path.empty()) throw UsageError("train-qa-semi needs --synthetic DATA");
    auto syn = augment::load_synthetic_jsonl(a.synthetic_path);
    semi_data = augment::build_semi_dataset(train, syn);
    synthetic = semi_data->synthetic;
    const std::string desc_p = a.out_dir + "/descriptor.json";
    json desc{{"ground_truth", a.train_path},
              {"synthetic", a.synthetic_path},
              {"gt_count", semi_data->ground_truth.size()},
              {"synthetic_count", semi_data->synthetic.size()},
              {"total", semi_data->total_size()}};
    std::ofstream out(desc_p, std::ios::binary);
    out << desc.dump(2) << '\n';
  }

  reward::QAConfig cfg;
  cfg.word_dim = a.word_dim;
  cfg.hidden = a.hidden;
  cfg.dropout = a.dropout;
  cfg.max_span_len = a.max_span_len;
  reward::QATrainOptions opt;
  opt.batch_size = a.batch;
  opt.max_epochs = a.epochs;
  opt.patience = a.patience;
  opt.lr = a.lr;
  opt.seed = a.seed;

  const std::string metrics_p = a.out_dir + "/metrics.jsonl";
  std::ofstream metrics = open_metrics(metrics_p);
  reward::QATrainResult r =
      reward::train_qa(train, dev, cfg, opt, semi ? &synthetic : nullptr,
                       [&metrics](const json& j) { metrics << j.dump() << '\n'; });
  metrics.close();
  const std::string ckpt_p = a.out_dir + "/qa.ckpt";
  r.model.save(ckpt_p);

  ManifestWriter m;
  m.command = semi ? "train-qa-semi" : "train-qa";
  m.seed = a.seed;
  m.config = {{"epochs", a.epochs},
              {"batch_size", a.batch},
              {"lr", a.lr},
              {"hidden", a.hidden},
              {"best_dev_em", r.best_dev_em},
              {"best_dev_f1", r.best_dev_f1}};
  m.inputs = {a.train_path, a.dev_path};
  if (semi) m.inputs.push_back(a.synthetic_path);
  m.outputs = {ckpt_p, metrics_p};
  if (semi) m.outputs.push_back(a.out_dir + "/descriptor.json");
  m.write(a.out_dir + "/manifest.json");
  std::cout << "QA dev EM " << r.best_dev_em * 100.0 << " F1 " << r.best_dev_f1 * 100.0
            << ", checkpoint at " << ckpt_p << "\n";
  return 0;
}

struct GenerateArgs {
  std::string checkpoint, data_path, out_path, qa_ckpt;
  std::string source = "existing";
  int beam = 10, max_len = 20, top_k = 1, block_ngram = 3;
  double diverse = 0.0;
};

int cmd_generate(const GenerateArgs& a) {
  model::QGModel qg = model::QGModel::load(a.checkpoint);
  std::vector<text::QAExample> data = text::load_jsonl(a.data_path);
  text::ToyLanguageSpec spec = text::ToyLanguageSpec::builtin();
  auto tagger = spec.make_tagger();

  augment::GenerateOptions opt;
  opt.decode.beam_size = a.beam;
  opt.decode.max_len = a.max_len;
  opt.decode.diversity_gamma = a.diverse;
  opt.decode.block_ngram = a.block_ngram;
  opt.top_k = a.top_k;
  opt.generator_id = file_digest(a.checkpoint);

  std::vector<augment::SyntheticExample> syn;
  if (a.source == "existing") {
    syn = augment::generate_from_existing(qg, data, *tagger, opt);
  } else if (a.source == "new") {
    syn = augment::generate_from_new(qg, data, *tagger, opt);
  } else {
    throw UsageError("--source must be existing or new");
  }
  if (!a.qa_ckpt.empty()) {
    reward::QAModel qa = reward::QAModel::load(a.qa_ckpt);
    augment::qap_score_all(syn, qa);
  }
  augment::save_synthetic_jsonl(a.out_path, syn);

  ManifestWriter m;
  m.command = "generate";
  m.config = {{"source", a.source},   {"beam", a.beam},        {"max_len", a.max_len},
              {"diverse", a.diverse}, {"block_ngram", a.block_ngram}, {"top_k", a.top_k},
              {"scored", !a.qa_ckpt.empty()}};
  m.inputs = {a.checkpoint, a.data_path};
  if (!a.qa_ckpt.empty()) m.inputs.push_back(a.qa_ckpt);
  m.outputs = {a.out_path};
  m.write(a.out_path + ".manifest.json");
  std::cout << "generated " << syn.size() << " synthetic examples\n";
  return 0;
}

struct FilterArgs {
  std::string data_path, out_path, ground_truth;
  double epsilon = 0.0;
  bool sweep = false;
  bool no_dedup = false;
};

int cmd_filter(const FilterArgs& a) {
  auto syn = augment::load_synthetic_jsonl(a.data_path);
  std::vector<text::QAExample> gold;
  if (!a.ground_truth.empty()) gold = text::load_jsonl(a.ground_truth);

  json report = json::array();
  if (a.sweep) {
    for (double eps : {0.0, 0.2, 0.4, 0.6, 0.8}) {
      augment::FilterConfig fc;
      fc.epsilon = eps;
      fc.dedup = !a.no_dedup;
      augment::FilterReport rep;
      augment::filter(syn, fc, gold.empty() ? nullptr : &gold, &rep);
      report.push_back(rep.to_json());
    }
  }
  augment::FilterConfig fc;
  fc.epsilon = a.epsilon;
  fc.dedup = !a.no_dedup;
  augment::FilterReport rep;
  auto kept = augment::filter(syn, fc, gold.empty() ? nullptr : &gold, &rep);
  augment::save_synthetic_jsonl(a.out_path, kept);

  json full{{"applied", rep.to_json()}};
  if (a.sweep) full["sweep"] = report;
  const std::string report_p = a.out_path + ".report.json";
  {
    std::ofstream out(report_p, std::ios::binary);
    out << full.dump(2) << '\n';
  }

  ManifestWriter m;
  m.command = "filter";
  m.config = {{"epsilon", a.epsilon}, {"dedup", !a.no_dedup}, {"sweep", a.sweep}};
  m.inputs = {a.data_path};
  if (!a.ground_truth.empty()) m.inputs.push_back(a.ground_truth);
  m.outputs = {a.out_path, report_p};
  m.write(a.out_path + ".manifest.json");
  std::cout << "kept " << rep.kept << " / dropped " << rep.dropped << " (mean QAP " << rep.mean_qap
            << ")\n";
  return 0;
}

struct EvalQgArgs {
  std::string checkpoint, data_path, out_path, qpc_ckpt, qa_ckpt;
  int max_len = 20, block_ngram = 3;
};

int cmd_eval_qg(const EvalQgArgs& a) {
  model::QGModel qg = model::QGModel::load(a.checkpoint);
  std::vector<text::QAExample> data = text::load_jsonl(a.data_path);
  text::ToyLanguageSpec spec = text::ToyLanguageSpec::builtin();
  auto tagger = spec.make_tagger();
  std::optional<reward::QPCModel> qpc;
  std::optional<reward::QAModel> qa;
  if (!a.qpc_ckpt.empty()) qpc.emplace(reward::QPCModel::load(a.qpc_ckpt));
  if (!a.qa_ckpt.empty()) qa.emplace(reward::QAModel::load(a.qa_ckpt));
  eval::QGEvalReport rep = eval::evaluate_qg(qg, data, *tagger, a.max_len, a.block_ngram,
                                             qpc ? &*qpc : nullptr, qa ? &*qa : nullptr);
  {
    std::ofstream out(a.out_path, std::ios::binary);
    if (!out) throw DataError("cannot write report: " + a.out_path);
    out << rep.to_json().dump(2) << '\n';
  }
  ManifestWriter m;
  m.command = "eval-qg";
  m.config = rep.config_digest;
  m.inputs = {a.checkpoint, a.data_path};
  m.outputs = {a.out_path};
  m.write(a.out_path + ".manifest.json");
  std::cout << rep.to_json().dump(2) << "\n";
  return 0;
}

struct EvalQaArgs {
  std::string checkpoint, data_path, out_path, predictions;
};

int cmd_eval_qa(const EvalQaArgs& a) {
  reward::QAModel qa = reward::QAModel::load(a.checkpoint);
  std::vector<text::QAExample> data = text::load_jsonl(a.data_path);
  eval::QAEvalReport rep = eval::evaluate_qa(qa, data);
  {
    std::ofstream out(a.out_path, std::ios::binary);
    if (!out) throw DataError("cannot write report: " + a.out_path);
    out << rep.to_json().dump(2) << '\n';
  }
  if (!a.predictions.empty()) eval::save_predictions_jsonl(a.predictions, rep);
  ManifestWriter m;
  m.command = "eval-qa";
  m.inputs = {a.checkpoint, a.data_path};
  m.outputs = {a.out_path};
  if (!a.predictions.empty()) m.outputs.push_back(a.predictions);
  m.write(a.out_path + ".manifest.json");
  std::cout << "EM " << rep.em << " F1 " << rep.f1 << "\n";
  return 0;
}

struct QaBasedEvalArgs {
  std::string qg_ckpt, unlabeled_path, dev_path, out_path;
  uint64_t seed = default_seed();
  int epochs = 60, patience = 10;
  double lr = 0.001;
  int qa_hidden = 64, qa_word_dim = 32;
};

int cmd_qa_based_eval(const QaBasedEvalArgs& a) {
  model::QGModel qg = model::QGModel::load(a.qg_ckpt);
  std::vector<text::QAExample> unlabeled = text::load_jsonl(a.unlabeled_path);
  std::vector<text::QAExample> dev = text::load_jsonl(a.dev_path);
  text::ToyLanguageSpec spec = text::ToyLanguageSpec::builtin();
  auto tagger = spec.make_tagger();
  eval::QaBasedEvalConfig cfg;
  cfg.qa.word_dim = a.qa_word_dim;
  cfg.qa.hidden = a.qa_hidden;
  cfg.train.max_epochs = a.epochs;
  cfg.train.patience = a.patience;
  cfg.train.lr = a.lr;
  cfg.train.seed = a.seed;
  eval::QAEvalReport rep = eval::qa_based_qg_eval(qg, unlabeled, dev, *tagger, cfg);
  {
    std::ofstream out(a.out_path, std::ios::binary);
    if (!out) throw DataError("cannot write report: " + a.out_path);
    out << rep.to_json().dump(2) << '\n';
  }
  ManifestWriter m;
  m.command = "qa-based-eval";
  m.seed = a.seed;
  m.config = {{"epochs", a.epochs}, {"qa_hidden", a.qa_hidden}};
  m.inputs = {a.qg_ckpt, a.unlabeled_path, a.dev_path};
  m.outputs = {a.out_path};
  m.write(a.out_path + ".manifest.json");
  std::cout << "QA-based QG eval: EM " << rep.em << " F1 " << rep.f1 << "\n";
  return 0;
}

struct GradCheckArgs {
  uint64_t seed = default_seed();
  int trials = 10;
  double tolerance = 1e-4;
};

int cmd_grad_check(const GradCheckArgs& a) {
  using namespace qgen::nn;
  int failures = 0;
  double worst = 0.0;
  std::string worst_block;

  auto report = [&](const std::string& block, const GradCheckReport& rep) {
    std::cout << block << ": max rel err " << rep.worst << (rep.pass ? " ok" : " FAIL") << "\n";
    if (!rep.pass) ++failures;
    if (rep.worst > worst) {
      worst = rep.worst;
      worst_block = block;
    }
  };

  for (int t = 0; t < a.trials; ++t) {
    Rng rng(Rng::mix(a.seed, static_cast<uint64_t>(t)));
    {
      const int in = 2 + static_cast<int>(rng.below(4));
      const int out = 2 + static_cast<int>(rng.below(4));
      const int target = static_cast<int>(rng.below(static_cast<uint64_t>(out)));
      ParameterSet ps;
      ps.add("W", init_uniform({out, in}, in, rng));
      ps.add("b", init_uniform({out}, 1, rng));
      ps.add("x", init_uniform({in}, 1, rng));
      auto fn = [target](const ParameterSet& p, GradMap* gr) {
        Graph g;
        ParamBinder pb(g, p);
        Val loss = g.scale(g.pick(g.log_softmax(affine(g, pb("W"), pb("x"), pb("b"))), target), -1.0);
        double v = g.scalar(loss);
        if (gr) g.backward(loss, *gr);
        return v;
      };
      report("affine+ce seed " + std::to_string(t), grad_check(ps, fn, a.tolerance));
    }
    {
      const int in = 2 + static_cast<int>(rng.below(3));
      const int hidden = 2 + static_cast<int>(rng.below(3));
      ParameterSet ps;
      ps.add("Wx", init_uniform({4 * hidden, in}, in, rng));
      ps.add("Wh", init_uniform({4 * hidden, hidden}, hidden, rng));
      ps.add("b", init_lstm_bias(hidden));
      ps.add("x", init_uniform({in}, 1, rng));
      ps.add("h0", init_uniform({hidden}, 1, rng));
      ps.add("c0", init_uniform({hidden}, 1, rng));
      std::vector<double> w(static_cast<size_t>(hidden));
      for (double& v : w) v = rng.uniform(-1.0, 1.0);
      auto fn = [&w](const ParameterSet& p, GradMap* gr) {
        Graph g;
        ParamBinder pb(g, p);
        auto [h, c] = lstm_step(g, pb("x"), pb("h0"), pb("c0"), pb("Wx"), pb("Wh"), pb("b"));
        Val loss = g.sum(g.add(g.mul(h, g.input(Tensor::vec(w))), c));
        double v = g.scalar(loss);
        if (gr) g.backward(loss, *gr);
        return v;
      };
      report("lstm seed " + std::to_string(t), grad_check(ps, fn, a.tolerance));
    }
  }
  std::cout << (failures == 0 ? "PASS" : "FAIL") << " worst " << worst << " (" << worst_block
            << ")\n";
  if (failures > 0) throw NumericError("gradient check failed");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qgen: semantics-reinforced question generation at desk scale"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "cap worker threads (0 = hardware)");

  MakeToyArgs toy;
  auto* toy_cmd = app.add_subcommand("make-toy-data", "generate the deterministic toy QA corpus");
  toy_cmd->add_option("--out", toy.out_dir, "output directory")->required();
  toy_cmd->add_option("--seed", toy.seed, "generation seed");
  toy_cmd->add_option("--spec", toy.spec_path, "toy language spec file");
  toy_cmd->add_option("--n-train", toy.n_train);
  toy_cmd->add_option("--n-dev", toy.n_dev);
  toy_cmd->add_option("--n-unlabeled", toy.n_unlabeled);
  toy_cmd->add_option("--pairs", toy.n_pairs, "paraphrase pairs for QPC training");

  ImportSquadArgs squad;
  auto* squad_cmd = app.add_subcommand("import-squad", "convert SQuAD v1.1 JSON to jsonl");
  squad_cmd->add_option("--in", squad.in_path)->required();
  squad_cmd->add_option("--out", squad.out_path)->required();

  TrainQgArgs qg;
  auto* qg_cmd = app.add_subcommand("train-qg", "train the question generation model");
  qg_cmd->add_option("--train", qg.train_path)->required();
  qg_cmd->add_option("--dev", qg.dev_path)->required();
  qg_cmd->add_option("--out", qg.out_dir)->required();
  qg_cmd->add_option("--seed", qg.seed);
  qg_cmd->add_option("--epochs", qg.epochs);
  qg_cmd->add_option("--rl-epochs", qg.rl_epochs);
  qg_cmd->add_option("--patience", qg.patience);
  qg_cmd->add_option("--batch-size", qg.batch);
  qg_cmd->add_option("--lr", qg.lr);
  qg_cmd->add_option("--rl-lr", qg.rl_lr);
  qg_cmd->add_option("--reward", qg.reward, "none|bleu4|rougeL|qpp|qap|qpp+qap");
  qg_cmd->add_option("--gamma-qpp", qg.gamma_qpp);
  qg_cmd->add_option("--gamma-qap", qg.gamma_qap);
  qg_cmd->add_option("--gamma-metric", qg.gamma_metric);
  qg_cmd->add_option("--alt-rate", qg.alt_rate, "multi-reward alternation n:m");
  qg_cmd->add_option("--qpc", qg.qpc_ckpt, "QPC checkpoint for the QPP reward");
  qg_cmd->add_option("--qa", qg.qa_ckpt, "QA checkpoint for the QAP reward");
  qg_cmd->add_option("--init", qg.init_ckpt, "start from this QG checkpoint");
  qg_cmd->add_option("--embedding-file", qg.embedding_file, "import word vectors (token v1..vD)");
  qg_cmd->add_option("--hidden", qg.hidden);
  qg_cmd->add_option("--word-dim", qg.word_dim);
  qg_cmd->add_option("--tag-dim", qg.tag_dim);
  qg_cmd->add_option("--dropout", qg.dropout);
  qg_cmd->add_option("--max-len", qg.max_len);
  qg_cmd->add_flag("--no-copy", qg.no_copy, "disable the copy mechanism");

  TrainQpcArgs qpc;
  auto* qpc_cmd = app.add_subcommand("train-qpc", "train the paraphrase classifier");
  qpc_cmd->add_option("--pairs-train", qpc.pairs_train)->required();
  qpc_cmd->add_option("--pairs-dev", qpc.pairs_dev)->required();
  qpc_cmd->add_option("--out", qpc.out_dir)->required();
  qpc_cmd->add_option("--seed", qpc.seed);
  qpc_cmd->add_option("--epochs", qpc.epochs);
  qpc_cmd->add_option("--patience", qpc.patience);
  qpc_cmd->add_option("--batch-size", qpc.batch);
  qpc_cmd->add_option("--lr", qpc.lr);
  qpc_cmd->add_option("--hidden", qpc.hidden);
  qpc_cmd->add_option("--word-dim", qpc.word_dim);
  qpc_cmd->add_option("--mlp-hidden", qpc.mlp_hidden);
  qpc_cmd->add_option("--dropout", qpc.dropout);

  TrainQaArgs qa;
  auto* qa_cmd = app.add_subcommand("train-qa", "train the span QA model on labeled data");
  auto* qas_cmd = app.add_subcommand("train-qa-semi",
                                     "train QA with half ground-truth, half synthetic batches");
  for (auto* cmd : {qa_cmd, qas_cmd}) {
    cmd->add_option("--train", qa.train_path)->required();
    cmd->add_option("--dev", qa.dev_path)->required();
    cmd->add_option("--out", qa.out_dir)->required();
    cmd->add_option("--seed", qa.seed);
    cmd->add_option("--epochs", qa.epochs);
    cmd->add_option("--patience", qa.patience);
    cmd->add_option("--batch-size", qa.batch);
    cmd->add_option("--lr", qa.lr);
    cmd->add_option("--hidden", qa.hidden);
    cmd->add_option("--word-dim", qa.word_dim);
    cmd->add_option("--max-span-len", qa.max_span_len);
    cmd->add_option("--dropout", qa.dropout);
  }
  qas_cmd->add_option("--synthetic", qa.synthetic_path, "scored + filtered synthetic jsonl");

  GenerateArgs gen;
  auto* gen_cmd = app.add_subcommand("generate", "generate synthetic questions with a QG checkpoint");
  gen_cmd->add_option("--checkpoint", gen.checkpoint)->required();
  gen_cmd->add_option("--data", gen.data_path)->required();
  gen_cmd->add_option("--out", gen.out_path)->required();
  gen_cmd->add_option("--source", gen.source, "existing|new");
  gen_cmd->add_option("--qa", gen.qa_ckpt, "QA checkpoint for QAP scoring");
  gen_cmd->add_option("--beam", gen.beam);
  gen_cmd->add_option("--max-len", gen.max_len);
  gen_cmd->add_option("--top-k", gen.top_k, "questions kept per record for --source new");
  gen_cmd->add_option("--diverse", gen.diverse, "diverse beam sibling penalty (0 = standard)");
  gen_cmd->add_option("--block-ngram", gen.block_ngram, "0|2|3");

  FilterArgs flt;
  auto* flt_cmd = app.add_subcommand("filter", "QAP-threshold filter for synthetic data");
  flt_cmd->add_option("--data", flt.data_path)->required();
  flt_cmd->add_option("--out", flt.out_path)->required();
  flt_cmd->add_option("--epsilon", flt.epsilon, "keep examples with QAP >= epsilon");
  flt_cmd->add_option("--ground-truth", flt.ground_truth, "gold data for echo dedup");
  flt_cmd->add_flag("--sweep", flt.sweep, "report the 0.0/0.2/0.4/0.6/0.8 grid");
  flt_cmd->add_flag("--no-dedup", flt.no_dedup);

  EvalQgArgs eqg;
  auto* eqg_cmd = app.add_subcommand("eval-qg", "BLEU4/ROUGE-L/Q-BLEU1 (+QPP/QAP) for a QG checkpoint");
  eqg_cmd->add_option("--checkpoint", eqg.checkpoint)->required();
  eqg_cmd->add_option("--data", eqg.data_path)->required();
  eqg_cmd->add_option("--out", eqg.out_path)->required();
  eqg_cmd->add_option("--qpc", eqg.qpc_ckpt);
  eqg_cmd->add_option("--qa", eqg.qa_ckpt);
  eqg_cmd->add_option("--max-len", eqg.max_len);
  eqg_cmd->add_option("--block-ngram", eqg.block_ngram);

  EvalQaArgs eqa;
  auto* eqa_cmd = app.add_subcommand("eval-qa", "EM/F1 for a QA checkpoint");
  eqa_cmd->add_option("--checkpoint", eqa.checkpoint)->required();
  eqa_cmd->add_option("--data", eqa.data_path)->required();
  eqa_cmd->add_option("--out", eqa.out_path)->required();
  eqa_cmd->add_option("--predictions", eqa.predictions, "write per-example predictions jsonl");

  QaBasedEvalArgs qbe;
  auto* qbe_cmd = app.add_subcommand("qa-based-eval",
                                     "score a QG checkpoint by training QA on its annotations");
  qbe_cmd->add_option("--qg", qbe.qg_ckpt)->required();
  qbe_cmd->add_option("--unlabeled", qbe.unlabeled_path)->required();
  qbe_cmd->add_option("--dev", qbe.dev_path)->required();
  qbe_cmd->add_option("--out", qbe.out_path)->required();
  qbe_cmd->add_option("--seed", qbe.seed);
  qbe_cmd->add_option("--epochs", qbe.epochs);
  qbe_cmd->add_option("--patience", qbe.patience);
  qbe_cmd->add_option("--lr", qbe.lr);
  qbe_cmd->add_option("--qa-hidden", qbe.qa_hidden);
  qbe_cmd->add_option("--qa-word-dim", qbe.qa_word_dim);

  GradCheckArgs gc;
  auto* gc_cmd = app.add_subcommand("grad-check", "finite-difference gradient audit");
  gc_cmd->add_option("--seed", gc.seed);
  gc_cmd->add_option("--trials", gc.trials);
  gc_cmd->add_option("--tolerance", gc.tolerance);

  try {
    app.parse(argc, argv);
    nn::kernels::set_threads(threads);
    if (*toy_cmd) return cmd_make_toy_data(toy);
    if (*squad_cmd) return cmd_import_squad(squad);
    if (*qg_cmd) return cmd_train_qg(qg);
    if (*qpc_cmd) return cmd_train_qpc(qpc);
    if (*qa_cmd) return cmd_train_qa(qa, false);
    if (*qas_cmd) return cmd_train_qa(qa, true);
    if (*gen_cmd) return cmd_generate(gen);
    if (*flt_cmd) return cmd_filter(flt);
    if (*eqg_cmd) return cmd_eval_qg(eqg);
    if (*eqa_cmd) return cmd_eval_qa(eqa);
    if (*qbe_cmd) return cmd_qa_based_eval(qbe);
    if (*gc_cmd) return cmd_grad_check(gc);
    throw UsageError("no command selected");
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
