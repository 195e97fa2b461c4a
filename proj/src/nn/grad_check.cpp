#include "qgen/nn/grad_check.hpp"

#include <cmath>

namespace qgen::nn {

GradCheckReport grad_check(ParameterSet params, const LossFn& loss, double tolerance) {
  GradCheckReport rep;
  rep.tolerance = tolerance;

  GradMap analytic;
  const double base = loss(params, &analytic);
  if (!std::isfinite(base)) throw NumericError("grad_check: non-finite loss");

  for (auto& [name, p] : params.tensors) {
    double worst = 0.0;
    const Tensor* ag = nullptr;
    auto it = analytic.find(name);
    if (it != analytic.end()) ag = &it->second;
    for (size_t i = 0; i < p.v.size(); ++i) {
      const double orig = p.v[i];
      const double h = 1e-5 * std::max(1.0, std::fabs(orig));
      p.v[i] = orig + h;
      const double up = loss(params, nullptr);
      p.v[i] = orig - h;
      const double down = loss(params, nullptr);
      p.v[i] = orig;
      if (!std::isfinite(up) || !std::isfinite(down))
        throw NumericError("grad_check: non-finite loss while perturbing " + name);
      const double numeric = (up - down) / (2.0 * h);
      const double a = ag ? ag->v[i] : 0.0;
      const double denom = std::max(std::fabs(a) + std::fabs(numeric), 1e-6);
      const double rel = std::fabs(a - numeric) / denom;
      worst = std::max(worst, rel);
    }
    rep.max_rel_err[name] = worst;
    if (worst > rep.worst) {
      rep.worst = worst;
      rep.worst_param = name;
    }
  }
  rep.pass = rep.worst <= tolerance;
  return rep;
}

}  // namespace qgen::nn
