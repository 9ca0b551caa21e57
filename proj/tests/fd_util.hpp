#pragma once

// Central finite-difference oracle used to validate reverse-mode gradients.
// Works in double so the h = 1e-4 stencil stays well above roundoff.

#include <functional>
#include <vector>

#include "psrl/ad.hpp"

namespace fd {

using psrl::ad::MatX;
using psrl::ad::ParamT;

// Evaluates the analytic gradient once, then compares every entry of every
// parameter against (f(p+h) - f(p-h)) / 2h. Returns the max relative error.
inline double max_rel_grad_err(std::vector<ParamT<double>*> params,
                               const std::function<double()>& loss_fn,
                               const std::function<void()>& grad_fn, double h = 1e-4) {
  for (auto* p : params) p->zero_grad();
  grad_fn();
  std::vector<MatX<double>> grads;
  grads.reserve(params.size());
  for (auto* p : params) grads.push_back(p->grad);

  double worst = 0;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    auto* p = params[pi];
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      double orig = p->value.data()[i];
      p->value.data()[i] = orig + h;
      double up = loss_fn();
      p->value.data()[i] = orig - h;
      double down = loss_fn();
      p->value.data()[i] = orig;
      double fdg = (up - down) / (2 * h);
      double ref = std::max({std::abs(fdg), std::abs(grads[pi].data()[i]), 1e-3});
      double rel = std::abs(grads[pi].data()[i] - fdg) / ref;
      worst = std::max(worst, rel);
    }
    p->zero_grad();
  }
  return worst;
}

}  // namespace fd
