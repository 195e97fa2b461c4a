#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qgen/text/tags.hpp"
#include "qgen/text/tokenizer.hpp"
#include "qgen/text/vocab.hpp"

namespace qgen::text {

// The universal record: a paragraph, an answer sub-span, optionally a question.
struct QAExample {
  std::string id;
  std::string context;
  std::optional<std::string> question;
  std::string answer_text;
  int answer_start = 0;

  void validate() const;  // answer_text must occur at answer_start
};

struct TokenizedExample {
  std::vector<std::string> context_tokens;
  std::vector<std::string> question_tokens;  // empty when no question
  bool has_question = false;
  int answer_tok_start = 0;  // inclusive
  int answer_tok_end = 0;    // inclusive
  std::vector<int> bio_tags, pos_tags, ner_tags;
  std::vector<int> context_ids, question_ids;
  bool span_snapped = false;

  void validate() const;
};

TokenizedExample tokenize_example(const QAExample& ex, const Vocabulary& vocab, const Tagger& tagger);

// JSON lines IO; save∘load is the identity, order preserving.
std::vector<QAExample> load_jsonl(const std::string& path);
void save_jsonl(const std::string& path, const std::vector<QAExample>& examples);

struct SquadImport {
  std::vector<QAExample> examples;
  int warnings = 0;  // records skipped for offset/text mismatch
};

// SQuAD v1.1 nesting (data -> paragraphs -> qas -> answers); one example per
// (question, first answer) pair.
SquadImport import_squad(const std::string& path);

// Builds the word vocabulary from context + question tokens in corpus order.
Vocabulary build_vocab(const std::vector<QAExample>& examples);

}  // namespace qgen::text
