#pragma once

#include <cstdint>
#include <vector>

#include "qgen/nn/rng.hpp"

namespace qgen::train {

// Half ground-truth, half synthetic mini-batches regardless of pool sizes.
// One epoch is one pass over the ground truth; the synthetic pool cycles
// independently (reshuffled on wrap). Full batches take ceil(B/2) ground
// truth and floor(B/2) synthetic; the final ragged batch keeps the same
// ratio: s = floor(g * floor(B/2) / ceil(B/2)).
struct MixedBatch {
  std::vector<int> gt;   // indices into the ground-truth pool
  std::vector<int> syn;  // indices into the synthetic pool
};

class MixingIterator {
 public:
  MixingIterator(int gt_size, int syn_size, int batch_size, uint64_t seed);

  std::vector<MixedBatch> next_epoch();

  int gt_half() const { return (batch_ + 1) / 2; }
  int syn_half() const { return batch_ / 2; }

  // The composition rule a batch must satisfy; used by the mixing audit.
  bool composition_ok(const MixedBatch& b, bool is_last) const;

 private:
  int gt_size_, syn_size_, batch_;
  nn::Rng gt_rng_, syn_rng_;
  std::vector<int> syn_order_;
  size_t syn_cursor_ = 0;

  int draw_synthetic();
};

}  // namespace qgen::train
