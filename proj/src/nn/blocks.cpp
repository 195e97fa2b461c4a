#include "qgen/nn/blocks.hpp"

#include <cmath>

namespace qgen::nn {

std::pair<Val, Val> lstm_step(Graph& g, Val x, Val h_prev, Val c_prev, Val Wx, Val Wh, Val b) {
  const Tensor& tb = g.value(b);
  if (tb.ndim() != 1 || tb.dim(0) % 4 != 0) throw DataError("lstm_step: bad bias shape");
  const int hidden = tb.dim(0) / 4;
  Val hc = g.lstm_cell(x, h_prev, c_prev, Wx, Wh, b);
  return {g.slice(hc, 0, hidden), g.slice(hc, hidden, hidden)};
}

Val dropout(Graph& g, Val x, double rate, Rng& rng, bool train) {
  if (!train || rate == 0.0) return x;
  if (rate < 0.0 || rate >= 1.0) throw DataError("dropout: rate must be in [0,1)");
  const Tensor& tx = g.value(x);
  Tensor mask = Tensor::zeros(tx.shape);
  const double keep = 1.0 - rate;
  for (double& m : mask.v) m = rng.uniform() < keep ? 1.0 / keep : 0.0;
  return g.mul(x, g.input(std::move(mask)));
}

Val max_pool_over_time(Graph& g, const std::vector<Val>& xs) { return g.max_over_time(xs); }

Tensor init_uniform(std::vector<int> shape, int fan_in, Rng& rng) {
  Tensor t = Tensor::zeros(std::move(shape));
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in > 0 ? fan_in : 1));
  for (double& x : t.v) x = rng.uniform(-bound, bound);
  return t;
}

Tensor init_lstm_bias(int hidden) {
  Tensor b = Tensor::zeros({4 * hidden});
  for (int j = hidden; j < 2 * hidden; ++j) b.v[static_cast<size_t>(j)] = 1.0;
  return b;
}

}  // namespace qgen::nn
