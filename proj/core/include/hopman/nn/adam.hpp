#pragma once

#include "hopman/nn/layers.hpp"

namespace hopman::nn {

template <typename T>
class Adam {
 public:
  explicit Adam(ParamStore<T>& ps, double lr, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : ps_(ps), lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {
    for (auto& [name, p] : ps.params()) {
      st_[name].m = Tensor<T>::zeros(p->val.shape);
      st_[name].v = Tensor<T>::zeros(p->val.shape);
    }
  }

  void set_lr(double lr) { lr_ = lr; }
  double lr() const { return lr_; }

  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(b1_, t_);
    const double bc2 = 1.0 - std::pow(b2_, t_);
    for (auto& [name, p] : ps_.params()) {
      if (!p->grad_alloc) continue;
      auto& s = st_[name];
      const i64 n = p->val.numel();
      for (i64 i = 0; i < n; ++i) {
        const double g = double(p->grad.v[size_t(i)]);
        const double m = b1_ * double(s.m.v[size_t(i)]) + (1 - b1_) * g;
        const double v = b2_ * double(s.v.v[size_t(i)]) + (1 - b2_) * g * g;
        s.m.v[size_t(i)] = T(m);
        s.v.v[size_t(i)] = T(v);
        p->val.v[size_t(i)] -= T(lr_ * (m / bc1) / (std::sqrt(v / bc2) + eps_));
      }
    }
  }

 private:
  struct State {
    Tensor<T> m, v;
  };
  ParamStore<T>& ps_;
  std::map<std::string, State> st_;
  double lr_, b1_, b2_, eps_;
  int t_ = 0;
};

// Exponential moving average of parameters; sampling uses the shadow weights.
template <typename T>
class Ema {
 public:
  Ema(const ParamStore<T>& ps, double decay) : decay_(decay) {
    for (const auto& [name, p] : ps.params()) shadow_[name] = p->val;
  }

  void update(const ParamStore<T>& ps) {
    for (const auto& [name, p] : ps.params()) {
      auto& s = shadow_[name];
      for (i64 i = 0; i < s.numel(); ++i)
        s.v[size_t(i)] = T(decay_ * double(s.v[size_t(i)]) + (1 - decay_) * double(p->val.v[size_t(i)]));
    }
  }

  void copy_to(ParamStore<T>& ps) const {
    for (auto& [name, p] : ps.params()) p->val = shadow_.at(name);
  }

 private:
  std::map<std::string, Tensor<T>> shadow_;
  double decay_;
};

}  // namespace hopman::nn
