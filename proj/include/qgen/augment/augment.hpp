#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qgen/decode/decode.hpp"
#include "qgen/model/qg.hpp"
#include "qgen/reward/qa.hpp"

namespace qgen::augment {

struct SyntheticExample {
  text::QAExample ex;  // question = generated
  std::optional<double> qap_score;
  std::string source;  // "existing" | "new"
  int beam_rank = 1;
  std::string generator_id;
};

struct FilterConfig {
  double epsilon = 0.0;
  bool dedup = true;

  void validate() const;
};

struct FilterReport {
  double epsilon = 0.0;
  int kept = 0;
  int dropped = 0;
  double mean_qap = 0.0;  // over kept examples

  nlohmann::json to_json() const;
};

struct GenerateOptions {
  decode::DecodeConfig decode;  // beam size, max len, diversity, blocking
  int top_k = 1;                // for generate_from_new
  std::string generator_id;
  bool dedup = true;            // drop gold-question echoes and exact duplicates
};

// All beam hypotheses per labeled (context, answer) pair; gold questions are
// used only to drop echoes when dedup is on.
std::vector<SyntheticExample> generate_from_existing(const model::QGModel& qg,
                                                     const std::vector<text::QAExample>& labeled,
                                                     const text::Tagger& tagger,
                                                     const GenerateOptions& opt);

// Top-k questions per unlabeled record; rejects records that already carry a
// question (leakage guard).
std::vector<SyntheticExample> generate_from_new(const model::QGModel& qg,
                                                const std::vector<text::QAExample>& unlabeled,
                                                const text::Tagger& tagger,
                                                const GenerateOptions& opt);

// Annotates every example with qap(context, question, span); pure and
// order-independent.
void qap_score_all(std::vector<SyntheticExample>& synthetic, const reward::QAModel& qa);

// Keeps {x : qap >= epsilon}; errors on unscored examples. Dedup removes
// candidates equal (normalized) to the gold question of the same
// (context, answer) and exact duplicate (context, answer, question) triples.
std::vector<SyntheticExample> filter(const std::vector<SyntheticExample>& synthetic,
                                     const FilterConfig& cfg,
                                     const std::vector<text::QAExample>* gold = nullptr,
                                     FilterReport* report = nullptr);

struct SemiDataset {
  std::vector<text::QAExample> ground_truth;
  std::vector<text::QAExample> synthetic;

  int total_size() const {
    return static_cast<int>(ground_truth.size() + synthetic.size());
  }
};

// Keeps the two pools separate (the mixing iterator needs the distinction);
// errors on id collisions across pools.
SemiDataset build_semi_dataset(const std::vector<text::QAExample>& ground_truth,
                               const std::vector<SyntheticExample>& kept_synthetic);

// JSON-lines persistence with the extra fields {qap_score, source, beam_rank,
// generator_id}.
std::vector<SyntheticExample> load_synthetic_jsonl(const std::string& path);
void save_synthetic_jsonl(const std::string& path, const std::vector<SyntheticExample>& synthetic);

}  // namespace qgen::augment
