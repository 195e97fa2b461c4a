#include "qgen/train/mixing.hpp"

#include "qgen/common.hpp"
#include "qgen/train/batch.hpp"

namespace qgen::train {

MixingIterator::MixingIterator(int gt_size, int syn_size, int batch_size, uint64_t seed)
    : gt_size_(gt_size),
      syn_size_(syn_size),
      batch_(batch_size),
      gt_rng_(nn::Rng::mix(seed, 0x6d697847ull)),
      syn_rng_(nn::Rng::mix(seed, 0x6d697853ull)) {
  if (gt_size_ <= 0) throw DataError("mixing iterator: ground-truth pool must be non-empty");
  if (batch_ <= 0) throw DataError("mixing iterator: batch size must be positive");
  if (syn_size_ > 0) {
    syn_order_ = shuffled_indices(syn_size_, syn_rng_);
  }
}

int MixingIterator::draw_synthetic() {
  if (syn_cursor_ >= syn_order_.size()) {
    syn_order_ = shuffled_indices(syn_size_, syn_rng_);
    syn_cursor_ = 0;
  }
  return syn_order_[syn_cursor_++];
}

std::vector<MixedBatch> MixingIterator::next_epoch() {
  std::vector<int> gt_order = shuffled_indices(gt_size_, gt_rng_);
  std::vector<MixedBatch> out;
  const int g_full = syn_size_ > 0 ? gt_half() : batch_;
  size_t pos = 0;
  while (pos < gt_order.size()) {
    MixedBatch b;
    const int g = static_cast<int>(std::min<size_t>(static_cast<size_t>(g_full), gt_order.size() - pos));
    for (int i = 0; i < g; ++i) b.gt.push_back(gt_order[pos++]);
    if (syn_size_ > 0) {
      const int s = g == gt_half() ? syn_half() : (g * syn_half()) / gt_half();
      for (int i = 0; i < s; ++i) b.syn.push_back(draw_synthetic());
    }
    out.push_back(std::move(b));
  }
  return out;
}

bool MixingIterator::composition_ok(const MixedBatch& b, bool is_last) const {
  const int g = static_cast<int>(b.gt.size());
  const int s = static_cast<int>(b.syn.size());
  if (syn_size_ == 0) return s == 0 && g > 0 && g <= batch_ && (g == batch_ || is_last);
  if (!is_last && g != gt_half()) return false;
  if (is_last && (g < 1 || g > gt_half())) return false;
  const int expect_s = g == gt_half() ? syn_half() : (g * syn_half()) / gt_half();
  return s == expect_s;
}

}  // namespace qgen::train
