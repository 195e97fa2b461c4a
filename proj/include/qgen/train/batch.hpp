#pragma once

#include <vector>

#include "qgen/nn/graph.hpp"
#include "qgen/nn/kernels.hpp"

namespace qgen::train {

// Runs per_example over a batch (in parallel when threads allow), averages
// losses and gradients. Per-example gradient maps are reduced in batch index
// order, so results are bit-identical for any thread count.
template <class F>
double batch_gradients(int batch_size, nn::GradMap& grads, F&& per_example) {
  std::vector<nn::GradMap> slot_grads(static_cast<size_t>(batch_size));
  std::vector<double> slot_loss(static_cast<size_t>(batch_size), 0.0);
  nn::kernels::for_each_index(batch_size, [&](int i) {
    slot_loss[static_cast<size_t>(i)] = per_example(i, slot_grads[static_cast<size_t>(i)]);
  });
  double total = 0.0;
  for (int i = 0; i < batch_size; ++i) {
    total += slot_loss[static_cast<size_t>(i)];
    for (auto& [name, g] : slot_grads[static_cast<size_t>(i)]) {
      auto it = grads.find(name);
      if (it == grads.end()) {
        grads.emplace(name, std::move(g));
      } else {
        for (size_t k = 0; k < g.v.size(); ++k) it->second.v[k] += g.v[k];
      }
    }
  }
  const double inv = 1.0 / static_cast<double>(batch_size);
  for (auto& [name, g] : grads)
    for (double& x : g.v) x *= inv;
  return total * inv;
}

inline std::vector<int> shuffled_indices(int n, nn::Rng& rng) {
  std::vector<int> idx(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = i;
  rng.shuffle(idx);
  return idx;
}

}  // namespace qgen::train
