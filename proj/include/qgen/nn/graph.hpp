#pragma once

#include <deque>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "qgen/nn/tensor.hpp"

namespace qgen::nn {

// Named parameter tensors with per-parameter trainability. The tied output
// projection is stored once and flagged trainable=false.
struct ParameterSet {
  std::map<std::string, Tensor> tensors;
  std::map<std::string, bool> trainable;

  Tensor& add(const std::string& name, Tensor t, bool train = true) {
    if (tensors.count(name)) throw DataError("parameter already defined: " + name);
    trainable[name] = train;
    return tensors[name] = std::move(t);
  }
  Tensor& get(const std::string& name) {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw DataError("unknown parameter: " + name);
    return it->second;
  }
  const Tensor& get(const std::string& name) const {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw DataError("unknown parameter: " + name);
    return it->second;
  }
  bool is_trainable(const std::string& name) const {
    auto it = trainable.find(name);
    return it != trainable.end() && it->second;
  }
  int64_t total_values() const {
    int64_t n = 0;
    for (auto& [k, t] : tensors) n += t.numel();
    return n;
  }
};

// Gradient accumulators keyed by parameter name.
using GradMap = std::map<std::string, Tensor>;

// Reverse-mode tape. Ops append nodes in forward order (already a topological
// order); backward() walks the tape in reverse. A graph is single-threaded
// and short-lived: one per example pass.
class Graph {
 public:
  struct Val {
    int i = -1;
    bool ok() const { return i >= 0; }
  };

  // Leaves -----------------------------------------------------------------
  Val input(Tensor t);                                    // constant, no grad
  Val param(const std::string& name, const Tensor& t);    // grad collected by name

  // Elementwise ------------------------------------------------------------
  Val add(Val a, Val b);
  Val sub(Val a, Val b);
  Val mul(Val a, Val b);
  Val scale(Val a, double s);
  Val tanh_(Val a);
  Val sigmoid_(Val a);
  Val abs_(Val a);
  Val max_(Val a, Val b);

  // Linear algebra ---------------------------------------------------------
  Val matvec(Val W, Val x);    // [m,k]·[k] -> [m]
  Val matvec_t(Val W, Val x);  // [m,k]^T·[m] -> [k]

  // Structure --------------------------------------------------------------
  Val concat(const std::vector<Val>& xs);      // 1-D concat
  Val slice(Val a, int from, int len);         // 1-D slice
  Val stack_rows(const std::vector<Val>& xs);  // M vectors [k] -> [M,k]
  Val row(Val m, int r);                       // matrix row as vector (embedding lookup)

  // Probability / reductions -------------------------------------------------
  Val softmax(Val x);      // 1-D, max-shifted
  Val log_softmax(Val x);  // 1-D
  Val pick(Val x, int idx);
  Val log_(Val x);  // elementwise log clamped at 1e-300
  Val sum(Val x);
  Val mean(Val x);
  Val maxout_pairs(Val x);                       // [2k] -> [k], o[j]=max(x[2j],x[2j+1])
  Val max_over_time(const std::vector<Val>& xs); // elementwise max of M vectors

  // Copy-mixture output: out[0..V) = gate·pv, then out[slot[i]] += (1-gate)·alpha[i].
  // slot maps each source position to an id in the extended vocabulary [0, ext_size).
  Val mix_copy(Val pv, Val alpha, Val gate, const std::vector<int>& slot, int ext_size);

  // Fused gated-recurrence cell (gate order input/forget/output/candidate);
  // returns [h; c] stacked as one 2*hidden vector.
  Val lstm_cell(Val x, Val h_prev, Val c_prev, Val Wx, Val Wh, Val b);

  // Access -------------------------------------------------------------------
  const Tensor& value(Val v) const { return nodes_[static_cast<size_t>(v.i)].val; }
  const Tensor& grad(Val v) const { return nodes_[static_cast<size_t>(v.i)].grad; }
  size_t size() const { return nodes_.size(); }

  // Runs reverse-mode accumulation from a scalar loss and collects parameter
  // gradients into `out` (adding to any existing accumulation).
  void backward(Val loss, GradMap& out);

  double scalar(Val v) const {
    const Tensor& t = value(v);
    if (t.numel() != 1) throw NumericError("graph: expected scalar");
    return t.v[0];
  }

 private:
  struct Node {
    Tensor val;
    Tensor grad;  // allocated before backward when needs_grad
    bool needs_grad = false;
    std::function<void(Graph&, Node&)> back;  // may be empty (leaves)
  };

  struct ParamRef {
    std::string name;
    int node = -1;
  };

  // deque keeps value()/grad() references stable as the tape grows
  std::deque<Node> nodes_;
  std::vector<ParamRef> params_;

  Node& node(Val v) { return nodes_[static_cast<size_t>(v.i)]; }
  const Node& node(Val v) const { return nodes_[static_cast<size_t>(v.i)]; }
  Val push(Tensor val, bool needs_grad, std::function<void(Graph&, Node&)> back);
  void require_vec(Val v, const char* op) const;
};

using Val = Graph::Val;

}  // namespace qgen::nn
