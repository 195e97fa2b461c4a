#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "qgen/model/checkpoint.hpp"
#include "qgen/model/qg.hpp"
#include "qgen/nn/blocks.hpp"
#include "qgen/text/toy.hpp"

using namespace qgen;
using namespace qgen::model;

namespace {
std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}
}  // namespace

TEST_SUITE_BEGIN("checkpoint");

TEST_CASE("load then re-save is byte-identical") {
  nn::Rng rng(3);
  nn::ParameterSet ps;
  ps.add("alpha", nn::init_uniform({3, 4}, 4, rng));
  ps.add("beta", nn::init_uniform({7}, 1, rng), /*train=*/false);
  nlohmann::json header{{"type", "qg"}, {"config", {{"hidden", 4}}}};

  const std::string p1 = "build/tmp_ck1.bin", p2 = "build/tmp_ck2.bin";
  write_checkpoint(p1, "QGCK", header, ps);
  Checkpoint ck = read_checkpoint(p1, "QGCK");
  CHECK(ck.params.tensors.size() == 2);
  CHECK_FALSE(ck.params.is_trainable("beta"));
  CHECK(ck.params.is_trainable("alpha"));
  write_checkpoint(p2, "QGCK", ck.header, ck.params);
  CHECK(slurp(p1) == slurp(p2));
  std::remove(p1.c_str());
  std::remove(p2.c_str());
}

TEST_CASE("magic mismatch and truncation are rejected") {
  nn::ParameterSet ps;
  ps.add("w", nn::Tensor::vec({1.0}));
  const std::string p = "build/tmp_ck3.bin";
  write_checkpoint(p, "QPCK", nlohmann::json::object(), ps);
  CHECK_THROWS_AS(read_checkpoint(p, "QGCK"), DataError);
  {
    std::ofstream out(p, std::ios::binary);
    out << "QG";
  }
  CHECK_THROWS_AS(read_checkpoint(p, "QGCK"), DataError);
  std::remove(p.c_str());
}

TEST_CASE("QG model round trips through its checkpoint") {
  text::ToyLanguageSpec spec = text::ToyLanguageSpec::builtin();
  text::ToyCorpus corpus = text::make_toy_corpus(spec, 10, 0, 0);
  text::Vocabulary vocab = text::build_vocab(corpus.train);
  nn::Rng rng(5);
  QGConfig cfg;
  cfg.word_dim = 4;
  cfg.ans_dim = 2;
  cfg.pos_dim = 2;
  cfg.ner_dim = 2;
  cfg.hidden = 4;
  QGModel m = QGModel::init(cfg, vocab, rng);
  const std::string p1 = "build/tmp_qg1.ckpt", p2 = "build/tmp_qg2.ckpt";
  m.save(p1);
  QGModel loaded = QGModel::load(p1);
  CHECK(loaded.vocab.size() == vocab.size());
  CHECK(loaded.cfg.hidden == cfg.hidden);
  CHECK_FALSE(loaded.params.is_trainable("emb.word"));
  loaded.save(p2);
  CHECK(slurp(p1) == slurp(p2));

  // Values survive the f32 round trip exactly after the first save.
  QGModel again = QGModel::load(p2);
  CHECK(again.params.get("attn.Wu").v == loaded.params.get("attn.Wu").v);
  std::remove(p1.c_str());
  std::remove(p2.c_str());
}

TEST_SUITE_END();
