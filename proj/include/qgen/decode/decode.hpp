#pragma once

#include <utility>
#include <vector>

#include "qgen/common.hpp"
#include "qgen/nn/rng.hpp"

namespace qgen::decode {

struct DecodeConfig {
  int beam_size = 10;
  int max_len = 20;
  int min_len = 1;          // EOS is masked (not renormalized) before this length
  double diversity_gamma = 0.0;
  int block_ngram = 0;      // 0 = off, else 2 or 3
  double temperature = 1.0; // fixed 1 for RL sampling

  void validate() const {
    if (beam_size < 1) throw DataError("decode: beam size must be >= 1");
    if (max_len < 1) throw DataError("decode: max length must be >= 1");
    if (min_len < 0 || min_len > max_len) throw DataError("decode: bad min length");
    if (diversity_gamma < 0.0) throw DataError("decode: diversity penalty must be >= 0");
    if (block_ngram != 0 && block_ngram != 2 && block_ngram != 3)
      throw DataError("decode: repetition block must be 0, 2 or 3");
  }
};

struct BeamHypothesis {
  std::vector<int> tokens;        // generated ids, EOS not included
  double log_prob = 0.0;          // includes the EOS step when finished
  bool finished = false;          // ended with EOS (vs truncated at max_len)
  std::vector<int> parent_ranks;  // sibling rank per step (diversity trace)
};

// Incremental model interface. States are immutable and addressed by handle,
// so beam branching can extend one state many ways. Implementations own all
// graph/tensor storage for the episode.
class StepScorer {
 public:
  virtual ~StepScorer() = default;
  virtual int dist_size() const = 0;
  virtual int bos() const = 0;
  virtual int eos() const = 0;
  virtual int init_state() = 0;
  // Returns log-probabilities over dist_size() tokens and the successor state.
  virtual std::pair<std::vector<double>, int> step(int state, int prev_token) = 0;
};

// Blocks every token that would complete an n-gram already present in
// `history`, then renormalizes. If everything is blocked, returns the input
// unchanged and bumps *fallbacks.
std::vector<double> apply_ngram_block(const std::vector<double>& log_probs,
                                      const std::vector<int>& history, int n, int* fallbacks);

BeamHypothesis greedy_decode(StepScorer& scorer, const DecodeConfig& cfg);

// Multinomial sample; second member holds the per-step log-probabilities
// (including the EOS step) exactly as needed by the RL loss.
std::pair<BeamHypothesis, std::vector<double>> sample_decode(StepScorer& scorer,
                                                             const DecodeConfig& cfg, nn::Rng& rng);

// Standard length-bounded beam search; returns all beam_size hypotheses
// sorted by descending cumulative log-probability.
std::vector<BeamHypothesis> beam_search(StepScorer& scorer, const DecodeConfig& cfg);

// Sibling-rank penalized variant: the r-th ranked expansion of a parent
// (1-based) is penalized by diversity_gamma * r for pruning; stored scores
// stay unpenalized. gamma 0 reproduces beam_search exactly.
std::vector<BeamHypothesis> diverse_beam_search(StepScorer& scorer, const DecodeConfig& cfg);

}  // namespace qgen::decode
