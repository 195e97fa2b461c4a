#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "qgen/augment/augment.hpp"
#include "qgen/reward/qa.hpp"
#include "qgen/reward/qpc.hpp"
#include "qgen/train/trainer.hpp"

namespace accept {

namespace fs = std::filesystem;

// Deterministic artifacts shared by the heavy criteria. Everything is a pure
// function of fixed seeds, so cached checkpoints can be reused across runs
// and criteria (ctest serializes acceptance tests on a resource lock).
struct World {
  fs::path cache{"acceptance_cache"};
  qgen::text::ToyLanguageSpec spec;
  qgen::text::ToyCorpus corpus;  // 200 train / 100 dev / 400 unlabeled, seed 7
  std::shared_ptr<qgen::text::RuleTagger> tagger;

  World();

  qgen::model::QGConfig qg_config() const;   // desk defaults, dropout 0
  qgen::reward::QAConfig qa_config() const;

  // Teacher-forced to >= 0.95 next-token accuracy (cached).
  qgen::model::QGModel qg_converged();
  // One teacher-forcing epoch only (cached).
  qgen::model::QGModel qg_1epoch();
  // QA trained on the ground-truth split only (cached per seed).
  qgen::reward::QAModel qa_gt(uint64_t seed);
  // QPC trained on the toy paraphrase pairs (cached).
  qgen::reward::QPCModel qpc();

  // Top-1 questions for the unlabeled pool from a QG checkpoint, QAP-scored
  // with the ground-truth-only QA model.
  std::vector<qgen::augment::SyntheticExample> scored_synthetic(qgen::model::QGModel& qg,
                                                                uint64_t qa_seed);

  qgen::train::PreparedCorpus prep(const std::vector<qgen::text::QAExample>& data,
                                   const qgen::model::QGModel& m, bool require_question = true) const;
};

}  // namespace accept
