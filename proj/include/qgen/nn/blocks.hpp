#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "qgen/nn/graph.hpp"
#include "qgen/nn/rng.hpp"

namespace qgen::nn {

// Binds named parameters into a graph, one node per name no matter how many
// times it is referenced (the LSTM weights recur across time steps and the
// word table doubles as the output projection).
class ParamBinder {
 public:
  ParamBinder(Graph& g, const ParameterSet& ps) : g_(g), ps_(ps) {}

  Val operator()(const std::string& name) {
    auto it = cache_.find(name);
    if (it != cache_.end()) return it->second;
    Val v = g_.param(name, ps_.get(name));
    cache_.emplace(name, v);
    return v;
  }

  Graph& graph() { return g_; }
  const ParameterSet& params() const { return ps_; }

 private:
  Graph& g_;
  const ParameterSet& ps_;
  std::map<std::string, Val> cache_;
};

inline Val affine(Graph& g, Val W, Val x, Val b) { return g.add(g.matvec(W, x), b); }

// Gated recurrence, gate order [input, forget, output, candidate]:
// gates = Wx·x + Wh·h_prev + b; c = σ(f)∘c_prev + σ(i)∘tanh(g̃); h = σ(o)∘tanh(c).
std::pair<Val, Val> lstm_step(Graph& g, Val x, Val h_prev, Val c_prev, Val Wx, Val Wh, Val b);

// Inverted dropout: at train time kept units are scaled by 1/(1-rate) so
// inference applies no rescale. rate 0 (or eval mode) is the identity.
Val dropout(Graph& g, Val x, double rate, Rng& rng, bool train);

Val max_pool_over_time(Graph& g, const std::vector<Val>& xs);

// Parameter initialization: uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)].
Tensor init_uniform(std::vector<int> shape, int fan_in, Rng& rng);

// LSTM bias with the forget gate section preset to 1.
Tensor init_lstm_bias(int hidden);

}  // namespace qgen::nn
