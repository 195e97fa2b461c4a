#include "qgen/nn/optim.hpp"

#include <cmath>

namespace qgen::nn {

void adam_step(ParameterSet& params, const GradMap& grads, OptimState& state) {
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (auto& [name, g] : grads) {
    if (!params.is_trainable(name)) continue;
    Tensor& p = params.get(name);
    if (!p.same_shape(g)) throw DataError("adam: gradient shape mismatch for " + name);
    for (double x : g.v)
      if (!std::isfinite(x)) throw NumericError("adam: non-finite gradient for parameter " + name);
    auto mit = state.m.find(name);
    if (mit == state.m.end()) {
      mit = state.m.emplace(name, Tensor::zeros(p.shape)).first;
      state.v.emplace(name, Tensor::zeros(p.shape));
    }
    Tensor& m = mit->second;
    Tensor& v = state.v.at(name);
    for (size_t i = 0; i < p.v.size(); ++i) {
      m.v[i] = state.beta1 * m.v[i] + (1.0 - state.beta1) * g.v[i];
      v.v[i] = state.beta2 * v.v[i] + (1.0 - state.beta2) * g.v[i] * g.v[i];
      const double mhat = m.v[i] / bc1;
      const double vhat = v.v[i] / bc2;
      p.v[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

double clip_grad_norm(GradMap& grads, double max_norm) {
  double sq = 0.0;
  for (auto& [name, g] : grads)
    for (double x : g.v) sq += x * x;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto& [name, g] : grads)
      for (double& x : g.v) x *= scale;
  }
  return norm;
}

}  // namespace qgen::nn
