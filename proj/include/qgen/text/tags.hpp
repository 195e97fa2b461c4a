#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "qgen/text/tokenizer.hpp"
#include "qgen/text/vocab.hpp"

namespace qgen::text {

// Answer-span BIO tags: B at span start, I inside, O elsewhere.
std::vector<int> bio_tag(int num_tokens, int span_start, int span_end);

// Pluggable POS/NER tagger. Deterministic and total: every token receives
// exactly one tag from each closed set.
class Tagger {
 public:
  virtual ~Tagger() = default;
  virtual void tag(const std::vector<Token>& toks, std::vector<int>* pos_out,
                   std::vector<int>* ner_out) const = 0;
};

// Rule + lexicon tagger. Entity lexicons may hold multi-word entries, matched
// greedily longest-first. Four-digit numbers in [1000, 2999] tag as DATE.
class RuleTagger : public Tagger {
 public:
  RuleTagger();

  void add_entity(const std::string& phrase, const std::string& ner_tag);

  void tag(const std::vector<Token>& toks, std::vector<int>* pos_out,
           std::vector<int>* ner_out) const override;

 private:
  // first token -> (remaining tokens, ner id), longest entries first
  std::map<std::string, std::vector<std::pair<std::vector<std::string>, int>>> entities_;
  std::set<std::string> determiners_, adpositions_, verbs_, wh_words_, pronouns_;
};

bool is_year_token(const std::string& tok);

}  // namespace qgen::text
