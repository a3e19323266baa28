#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "hopman/nn/tensor.hpp"

namespace hopman::nn {

// Reverse-mode autodiff over whole tensors. Nodes are created in topological
// order on a tape; backward replays the tape in reverse. Parameters are leaf
// nodes owned by a ParamStore and outlive any tape.
template <typename T>
struct Node {
  Tensor<T> val;
  Tensor<T> grad;
  bool requires_grad = false;
  bool grad_alloc = false;
  std::function<void()> back;

  Tensor<T>& ensure_grad() {
    if (!grad_alloc) {
      grad = Tensor<T>::zeros(val.shape);
      grad_alloc = true;
    }
    return grad;
  }
  void zero_grad() {
    if (grad_alloc) std::fill(grad.v.begin(), grad.v.end(), T(0));
  }
};

template <typename T>
using Var = std::shared_ptr<Node<T>>;

template <typename T>
inline Var<T> make_leaf(Tensor<T> v, bool requires_grad = false) {
  auto n = std::make_shared<Node<T>>();
  n->val = std::move(v);
  n->requires_grad = requires_grad;
  return n;
}

template <typename T>
class Tape {
 public:
  Var<T> leaf(Tensor<T> v) { return make_leaf(std::move(v), false); }

  Var<T> record(Tensor<T> v, bool requires_grad, std::function<void()> back) {
    auto n = std::make_shared<Node<T>>();
    n->val = std::move(v);
    n->requires_grad = requires_grad;
    if (requires_grad) n->back = std::move(back);
    if (requires_grad) order_.push_back(n);
    return n;
  }

  void backward(const Var<T>& loss) {
    if (loss->val.numel() != 1) throw NumericError("backward: loss must be scalar");
    loss->ensure_grad().v[0] = T(1);
    for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
      Node<T>& n = **it;
      if (n.grad_alloc && n.back) n.back();
    }
  }

  size_t size() const { return order_.size(); }
  void clear() { order_.clear(); }

  bool training = false;  // enables dropout

 private:
  std::vector<Var<T>> order_;
};

}  // namespace hopman::nn
