#pragma once

#include <functional>
#include <map>
#include <string>

#include "qgen/nn/graph.hpp"

namespace qgen::nn {

// A differentiable scalar block: builds a loss from the current parameter
// values. Called many times with perturbed parameters, so it must be a pure
// function of `params` (fix any randomness outside).
using LossFn = std::function<double(const ParameterSet& params, GradMap* grads)>;

struct GradCheckReport {
  std::map<std::string, double> max_rel_err;  // per parameter
  double worst = 0.0;
  std::string worst_param;
  bool pass = false;
  double tolerance = 0.0;
};

// Central finite differences against the analytic gradients, h = 1e-5 scaled
// by the entry magnitude. Relative error uses |a - n| / max(|a| + |n|, 1e-6).
GradCheckReport grad_check(ParameterSet params, const LossFn& loss, double tolerance = 1e-4);

}  // namespace qgen::nn
