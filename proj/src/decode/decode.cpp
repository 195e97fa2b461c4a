#include "qgen/decode/decode.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>

namespace qgen::decode {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Lexicographic compare of (parent tokens + appended token) without
// materializing the sequences; used as a deterministic tie-break.
struct CandSeq {
  const std::vector<int>* parent;
  int token;   // -1 when the candidate is a carried (already finished) hypothesis
};

bool seq_less(const CandSeq& a, const CandSeq& b) {
  const size_t la = a.parent->size() + (a.token >= 0 ? 1 : 0);
  const size_t lb = b.parent->size() + (b.token >= 0 ? 1 : 0);
  const size_t n = std::min(la, lb);
  for (size_t i = 0; i < n; ++i) {
    int xa = i < a.parent->size() ? (*a.parent)[i] : a.token;
    int xb = i < b.parent->size() ? (*b.parent)[i] : b.token;
    if (xa != xb) return xa < xb;
  }
  return la < lb;
}
}  // namespace

std::vector<double> apply_ngram_block(const std::vector<double>& log_probs,
                                      const std::vector<int>& history, int n, int* fallbacks) {
  if (n == 0) return log_probs;
  if (n != 2 && n != 3) throw DataError("ngram block: n must be 2 or 3");
  if (static_cast<int>(history.size()) < n - 1) return log_probs;

  std::vector<double> out = log_probs;
  const int ctx = n - 1;
  bool any_alive = false;
  // Collect banned continuations: token v is banned if history already
  // contains the n-gram (history[-ctx:], v).
  for (int i = 0; i + n <= static_cast<int>(history.size()); ++i) {
    bool match = true;
    for (int k = 0; k < ctx; ++k)
      if (history[static_cast<size_t>(i + k)] !=
          history[history.size() - static_cast<size_t>(ctx) + static_cast<size_t>(k)]) {
        match = false;
        break;
      }
    if (match) {
      int banned = history[static_cast<size_t>(i + ctx)];
      if (banned >= 0 && banned < static_cast<int>(out.size())) out[static_cast<size_t>(banned)] = kNegInf;
    }
  }
  double lse = kNegInf;
  for (double lp : out)
    if (lp != kNegInf) {
      any_alive = true;
      lse = lse == kNegInf ? lp : std::max(lse, lp) + std::log1p(std::exp(-std::fabs(lse - lp)));
    }
  if (!any_alive) {
    if (fallbacks) ++*fallbacks;
    return log_probs;
  }
  for (double& lp : out)
    if (lp != kNegInf) lp -= lse;
  return out;
}

namespace {

// One decoding step's constrained log-probabilities: min-length EOS mask
// (no renormalization) plus optional n-gram blocking (renormalized).
std::vector<double> constrained_logp(StepScorer& scorer, int state, int prev,
                                     const std::vector<int>& history, const DecodeConfig& cfg,
                                     int* next_state, int* fallbacks) {
  auto [lp, ns] = scorer.step(state, prev);
  *next_state = ns;
  if (cfg.block_ngram > 0) lp = apply_ngram_block(lp, history, cfg.block_ngram, fallbacks);
  if (static_cast<int>(history.size()) < cfg.min_len) lp[static_cast<size_t>(scorer.eos())] = kNegInf;
  return lp;
}

// Finished hypotheses are frozen into a completed pool and compete by final
// score; live slots hold only unfinished prefixes. For history-independent
// scorers this finds the exact top-k: if k prefixes outscore prefix p at some
// step, their EOS completions at that step outscore p's too.
std::vector<BeamHypothesis> run_beam(StepScorer& scorer, const DecodeConfig& cfg, double gamma) {
  cfg.validate();
  const int k = cfg.beam_size;
  const int eos = scorer.eos();

  struct Item {
    BeamHypothesis hyp;
    int state = -1;
  };
  std::vector<Item> live;
  live.push_back({BeamHypothesis{}, scorer.init_state()});
  std::vector<BeamHypothesis> pool;  // finished

  auto hyp_less = [](const BeamHypothesis& a, const BeamHypothesis& b) {
    if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
    return a.tokens < b.tokens;
  };

  int fallbacks = 0;
  for (int t = 0; t < cfg.max_len && !live.empty(); ++t) {
    struct Cand {
      int parent;
      int token;
      double log_prob;   // true cumulative score
      double penalized;  // pruning score
      int next_state;
      int sibling_rank;  // 1-based among the parent's expansions
    };
    std::vector<Cand> cands;
    cands.reserve(live.size() * static_cast<size_t>(scorer.dist_size()));

    for (int p = 0; p < static_cast<int>(live.size()); ++p) {
      Item& it = live[static_cast<size_t>(p)];
      const int prev = it.hyp.tokens.empty() ? scorer.bos() : it.hyp.tokens.back();
      int ns = -1;
      std::vector<double> lp =
          constrained_logp(scorer, it.state, prev, it.hyp.tokens, cfg, &ns, &fallbacks);
      size_t first = cands.size();
      for (int v = 0; v < static_cast<int>(lp.size()); ++v) {
        const double s = lp[static_cast<size_t>(v)];
        if (s == kNegInf) continue;
        cands.push_back({p, v, it.hyp.log_prob + s, 0.0, ns, 0});
      }
      // Sibling ranks, best expansion first.
      std::sort(cands.begin() + static_cast<std::ptrdiff_t>(first), cands.end(),
                [](const Cand& a, const Cand& b) {
                  if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
                  return a.token < b.token;
                });
      int rank = 1;
      for (size_t i = first; i < cands.size(); ++i, ++rank) {
        cands[i].sibling_rank = rank;
        cands[i].penalized = cands[i].log_prob - gamma * rank;
      }
    }

    // EOS expansions freeze into the pool; everything else competes for the
    // k live slots under the (possibly penalized) pruning score.
    std::vector<Cand> expansions;
    expansions.reserve(cands.size());
    for (const Cand& c : cands) {
      if (c.token == eos) {
        const Item& par = live[static_cast<size_t>(c.parent)];
        BeamHypothesis done;
        done.tokens = par.hyp.tokens;
        done.parent_ranks = par.hyp.parent_ranks;
        done.parent_ranks.push_back(c.sibling_rank);
        done.log_prob = c.log_prob;
        done.finished = true;
        pool.push_back(std::move(done));
      } else {
        expansions.push_back(c);
      }
    }
    if (static_cast<int>(pool.size()) > k) {
      std::sort(pool.begin(), pool.end(), hyp_less);
      pool.resize(static_cast<size_t>(k));
    }

    auto better = [&live](const Cand& a, const Cand& b) {
      if (a.penalized != b.penalized) return a.penalized > b.penalized;
      CandSeq sa{&live[static_cast<size_t>(a.parent)].hyp.tokens, a.token};
      CandSeq sb{&live[static_cast<size_t>(b.parent)].hyp.tokens, b.token};
      return seq_less(sa, sb);
    };
    const size_t keep = std::min(static_cast<size_t>(k), expansions.size());
    std::partial_sort(expansions.begin(), expansions.begin() + static_cast<std::ptrdiff_t>(keep),
                      expansions.end(), better);
    expansions.resize(keep);

    std::vector<Item> next;
    next.reserve(expansions.size());
    for (const Cand& c : expansions) {
      const Item& par = live[static_cast<size_t>(c.parent)];
      Item it;
      it.hyp.tokens = par.hyp.tokens;
      it.hyp.tokens.push_back(c.token);
      it.hyp.parent_ranks = par.hyp.parent_ranks;
      it.hyp.parent_ranks.push_back(c.sibling_rank);
      it.hyp.log_prob = c.log_prob;
      it.state = c.next_state;
      next.push_back(std::move(it));
    }
    live = std::move(next);
  }

  std::vector<BeamHypothesis> out = std::move(pool);
  for (Item& it : live) out.push_back(std::move(it.hyp));  // truncated at max_len
  std::sort(out.begin(), out.end(), hyp_less);
  if (static_cast<int>(out.size()) > k) out.resize(static_cast<size_t>(k));
  return out;
}

}  // namespace

BeamHypothesis greedy_decode(StepScorer& scorer, const DecodeConfig& cfg) {
  cfg.validate();
  BeamHypothesis hyp;
  int state = scorer.init_state();
  int fallbacks = 0;
  for (int t = 0; t < cfg.max_len; ++t) {
    const int prev = hyp.tokens.empty() ? scorer.bos() : hyp.tokens.back();
    int ns = -1;
    std::vector<double> lp = constrained_logp(scorer, state, prev, hyp.tokens, cfg, &ns, &fallbacks);
    state = ns;
    int best = 0;
    for (int v = 1; v < static_cast<int>(lp.size()); ++v)
      if (lp[static_cast<size_t>(v)] > lp[static_cast<size_t>(best)]) best = v;
    hyp.log_prob += lp[static_cast<size_t>(best)];
    if (best == scorer.eos()) {
      hyp.finished = true;
      break;
    }
    hyp.tokens.push_back(best);
  }
  return hyp;
}

std::pair<BeamHypothesis, std::vector<double>> sample_decode(StepScorer& scorer,
                                                             const DecodeConfig& cfg, nn::Rng& rng) {
  cfg.validate();
  BeamHypothesis hyp;
  std::vector<double> step_logps;
  int state = scorer.init_state();
  int fallbacks = 0;
  for (int t = 0; t < cfg.max_len; ++t) {
    const int prev = hyp.tokens.empty() ? scorer.bos() : hyp.tokens.back();
    int ns = -1;
    std::vector<double> lp = constrained_logp(scorer, state, prev, hyp.tokens, cfg, &ns, &fallbacks);
    state = ns;
    std::vector<double> probs(lp.size(), 0.0);
    for (size_t v = 0; v < lp.size(); ++v) probs[v] = lp[v] == kNegInf ? 0.0 : std::exp(lp[v]);
    const int drawn = rng.categorical(probs);
    hyp.log_prob += lp[static_cast<size_t>(drawn)];
    step_logps.push_back(lp[static_cast<size_t>(drawn)]);
    if (drawn == scorer.eos()) {
      hyp.finished = true;
      break;
    }
    hyp.tokens.push_back(drawn);
  }
  return {hyp, step_logps};
}

std::vector<BeamHypothesis> beam_search(StepScorer& scorer, const DecodeConfig& cfg) {
  return run_beam(scorer, cfg, 0.0);
}

std::vector<BeamHypothesis> diverse_beam_search(StepScorer& scorer, const DecodeConfig& cfg) {
  return run_beam(scorer, cfg, cfg.diversity_gamma);
}

}  // namespace qgen::decode
