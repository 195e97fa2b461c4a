#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "qgen/text/data.hpp"
#include "qgen/text/tags.hpp"

namespace qgen::text {

enum class AnswerType { Person, Location, Date, Topic, Unknown };

std::string answer_type_name(AnswerType t);

// A closed QA world: people described by two facts (birth / move / study),
// questions rendered from two paraphrase templates per (fact, slot). Every
// generated question is answerable by its span, and generation is a pure
// function of the seed.
struct ToyLanguageSpec {
  std::vector<std::string> first_names, last_names, cities, subjects;
  int year_min = 1800;
  int year_max = 1879;
  uint64_t seed = 7;

  static ToyLanguageSpec builtin();
  // Plain config: `key = value` lines plus [names]/[cities]/[subjects]
  // lexicon sections (one entry per line).
  static ToyLanguageSpec load(const std::string& path);
  void validate() const;

  // Rule tagger preloaded with this spec's entity lexicons.
  std::shared_ptr<RuleTagger> make_tagger() const;

  AnswerType answer_type(const std::string& answer_text) const;
};

struct ToyCorpus {
  std::vector<QAExample> train, dev, unlabeled;
};

// Splits share no context strings; the unlabeled split carries answer spans
// but no questions. Throws if the requested sizes exceed template capacity.
ToyCorpus make_toy_corpus(const ToyLanguageSpec& spec, int n_train, int n_dev, int n_unlabeled);

struct ParaphrasePair {
  std::string id;
  std::string question_a;
  std::string question_b;
  int label = 0;  // 1 = paraphrases
};

// Positives render one (fact, slot) with both templates; negatives pair
// questions about different facts. Balanced half and half.
std::vector<ParaphrasePair> make_paraphrase_pairs(const ToyLanguageSpec& spec, int n_pairs);

std::vector<ParaphrasePair> load_pairs_jsonl(const std::string& path);
void save_pairs_jsonl(const std::string& path, const std::vector<ParaphrasePair>& pairs);

// Wh-word type implied by a question (wh-word and type-noun cues). Used by
// the programmatic wh-match reward.
AnswerType question_wh_type(const std::vector<std::string>& question_tokens);

}  // namespace qgen::text
