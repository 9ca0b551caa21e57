#pragma once

// Adam with decoupled weight decay over a group of parameters, plus global
// gradient-norm clipping.

#include <cmath>
#include <vector>

#include "psrl/ad.hpp"
#include "psrl/check.hpp"

namespace psrl {

template <typename S>
class AdamWT {
 public:
  AdamWT() = default;
  AdamWT(std::vector<ad::ParamT<S>*> params, S lr, S weight_decay = S(0), S clip_norm = S(1))
      : params_(std::move(params)), lr_(lr), wd_(weight_decay), clip_(clip_norm) {
    for (auto* p : params_) slots_.push_back({ad::MatX<S>::Zero(p->value.rows(), p->value.cols()),
                                              ad::MatX<S>::Zero(p->value.rows(), p->value.cols())});
  }

  // Applies one update from the accumulated gradients, then zeroes them.
  void step() {
    ++t_;
    S scale = S(1);
    if (clip_ > S(0)) {
      double sq = 0;
      for (auto* p : params_) sq += static_cast<double>(p->grad.squaredNorm());
      double norm = std::sqrt(sq);
      if (norm > static_cast<double>(clip_)) scale = S(static_cast<double>(clip_) / norm);
    }
    const S bc1 = S(1) - std::pow(b1_, S(t_));
    const S bc2 = S(1) - std::pow(b2_, S(t_));
    for (size_t i = 0; i < params_.size(); ++i) {
      auto* p = params_[i];
      auto& s = slots_[i];
      s.m = b1_ * s.m + (S(1) - b1_) * (p->grad * scale);
      s.v = (b2_ * s.v).array() + (S(1) - b2_) * (p->grad * scale).array().square();
      p->value.array() -= lr_ * (s.m.array() / bc1) / ((s.v.array() / bc2).sqrt() + eps_);
      if (wd_ != S(0)) p->value *= (S(1) - lr_ * wd_);
      p->zero_grad();
      PSRL_CHECK(p->value.allFinite(), "optimizer produced non-finite values in " << p->name);
    }
  }

  void set_lr(S lr) { lr_ = lr; }
  S lr() const { return lr_; }
  long step_count() const { return t_; }

 private:
  struct Slot {
    ad::MatX<S> m, v;
  };
  std::vector<ad::ParamT<S>*> params_;
  std::vector<Slot> slots_;
  S lr_ = S(1e-3);
  S wd_ = S(0);
  S clip_ = S(1);
  S b1_ = S(0.9);
  S b2_ = S(0.999);
  S eps_ = S(1e-8);
  long t_ = 0;
};

using AdamW = AdamWT<float>;

}  // namespace psrl
