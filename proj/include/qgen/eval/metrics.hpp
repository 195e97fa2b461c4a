#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "qgen/common.hpp"

namespace qgen::eval {

struct BleuDetail {
  double precisions[4] = {0, 0, 0, 0};
  double brevity_penalty = 1.0;
  double score = 0.0;  // [0,100]
};

// Corpus BLEU4: geometric mean of modified 1..4-gram precisions times the
// brevity penalty, no smoothing.
BleuDetail bleu4_corpus_detail(const std::vector<std::vector<std::string>>& hyps,
                               const std::vector<std::vector<std::string>>& refs);
double bleu4_corpus(const std::vector<std::vector<std::string>>& hyps,
                    const std::vector<std::vector<std::string>>& refs);

// Sentence BLEU4 with add-1 smoothing on the order >= 2 counts (reward use).
double bleu4_sentence(const std::vector<std::string>& hyp, const std::vector<std::string>& ref);

// Sentence BLEU1 (modified unigram precision x brevity penalty), [0,100].
double bleu1_sentence(const std::vector<std::string>& hyp, const std::vector<std::string>& ref);

// LCS F-measure, beta defaults to 1.2; [0,100].
double rouge_l(const std::vector<std::string>& hyp, const std::vector<std::string>& ref,
               double beta = 1.2);

struct QBleuWeights {
  double question_words = 0.25;
  double named_entities = 0.25;
  double content_words = 0.25;
  double function_words = 0.25;
};

// delta * answerability + (1 - delta) * BLEU1/100, in [0,1]. Answerability is
// the weighted multiset-F1 over the four token channels; the entity channel
// uses `is_entity` when provided, else a capitalization/digit heuristic.
double q_bleu1(const std::vector<std::string>& hyp, const std::vector<std::string>& ref,
               const QBleuWeights& weights, double delta,
               const std::function<bool(const std::string&)>& is_entity = nullptr);

// SQuAD answer normalization: lowercase, strip punctuation, drop articles,
// collapse whitespace.
std::string squad_normalize(const std::string& text);

// Exact match and token-overlap F1 on normalized text, max over gold answers.
std::pair<double, double> em_f1(const std::string& prediction,
                                const std::vector<std::string>& gold_answers);

}  // namespace qgen::eval
