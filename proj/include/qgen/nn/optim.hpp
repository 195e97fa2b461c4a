#pragma once

#include <map>
#include <string>

#include "qgen/nn/graph.hpp"

namespace qgen::nn {

// Adam with bias correction. Frozen (trainable=false) parameters are never
// touched; a non-finite gradient aborts with the offending parameter name.
struct OptimState {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int64_t step = 0;
  std::map<std::string, Tensor> m;
  std::map<std::string, Tensor> v;
};

void adam_step(ParameterSet& params, const GradMap& grads, OptimState& state);

// Optional global-norm clipping applied before the update; max_norm <= 0 is a
// no-op. Returns the pre-clip norm.
double clip_grad_norm(GradMap& grads, double max_norm);

}  // namespace qgen::nn
