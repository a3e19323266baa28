#pragma once

#include <map>
#include <string>

#include "hopman/nn/ops.hpp"

namespace hopman::nn {

// Named parameter registry. Creation order is deterministic (model ctors run
// in a fixed order), so a single seed reproduces initialization exactly.
template <typename T>
class ParamStore {
 public:
  explicit ParamStore(u64 seed) : rng_(seed) {}

  Var<T> create(const std::string& name, std::vector<int> shape, double stddev) {
    check_new(name);
    auto v = make_leaf(stddev == 0.0 ? Tensor<T>::zeros(shape)
                                     : Tensor<T>::randn(shape, rng_, stddev),
                       true);
    m_.emplace(name, v);
    return v;
  }

  Var<T> create_const(const std::string& name, std::vector<int> shape, double value) {
    check_new(name);
    auto v = make_leaf(Tensor<T>::full(shape, T(value)), true);
    m_.emplace(name, v);
    return v;
  }

  Var<T> get(const std::string& name) const {
    auto it = m_.find(name);
    if (it == m_.end()) throw NumericError("ParamStore: unknown param " + name);
    return it->second;
  }

  void zero_grads() {
    for (auto& [k, v] : m_) v->zero_grad();
  }

  i64 total_params() const {
    i64 n = 0;
    for (const auto& [k, v] : m_) n += v->val.numel();
    return n;
  }

  bool any_nonfinite() const {
    for (const auto& [k, v] : m_)
      if (has_nonfinite(v->val)) return true;
    return false;
  }

  std::map<std::string, Var<T>>& params() { return m_; }
  const std::map<std::string, Var<T>>& params() const { return m_; }

 private:
  void check_new(const std::string& name) {
    if (m_.count(name)) throw NumericError("ParamStore: duplicate param " + name);
  }
  std::map<std::string, Var<T>> m_;
  Rng rng_;
};

template <typename T>
struct LinearLayer {
  Var<T> W, b;

  LinearLayer() = default;
  LinearLayer(ParamStore<T>& ps, const std::string& name, int din, int dout,
              bool zero_init = false, double scale = 1.0) {
    W = ps.create(name + ".w", {dout, din}, zero_init ? 0.0 : scale * std::sqrt(1.0 / din));
    b = ps.create(name + ".b", {dout}, 0.0);
  }
  Var<T> fwd(Tape<T>& t, Var<T> x) const { return linear(t, x, W, b); }
};

template <typename T>
struct Conv2dLayer {
  Var<T> W, b;
  int stride = 1, pad = 1;

  Conv2dLayer() = default;
  Conv2dLayer(ParamStore<T>& ps, const std::string& name, int cin, int cout, int k, int stride_,
              int pad_, bool zero_init = false) {
    W = ps.create(name + ".w", {cout, cin, k, k},
                  zero_init ? 0.0 : std::sqrt(2.0 / (double(cin) * k * k)));
    b = ps.create(name + ".b", {cout}, 0.0);
    stride = stride_;
    pad = pad_;
  }
  Var<T> fwd(Tape<T>& t, Var<T> x) const { return conv2d(t, x, W, b, stride, pad); }
};

template <typename T>
struct GroupNormLayer {
  Var<T> g, b;
  int groups = 8;

  GroupNormLayer() = default;
  GroupNormLayer(ParamStore<T>& ps, const std::string& name, int channels, int groups_ = 8) {
    groups = std::min(groups_, channels);
    while (channels % groups != 0) --groups;
    g = ps.create_const(name + ".g", {channels}, 1.0);
    b = ps.create(name + ".b", {channels}, 0.0);
  }
  Var<T> fwd(Tape<T>& t, Var<T> x) const { return group_norm(t, x, groups, g, b); }
};

template <typename T>
struct LayerNormLayer {
  Var<T> g, b;

  LayerNormLayer() = default;
  LayerNormLayer(ParamStore<T>& ps, const std::string& name, int dim) {
    g = ps.create_const(name + ".g", {dim}, 1.0);
    b = ps.create(name + ".b", {dim}, 0.0);
  }
  Var<T> fwd(Tape<T>& t, Var<T> x) const { return layer_norm(t, x, g, b); }
};

// Multi-head attention. Self-attention uses a fused qkv projection; cross
// attention projects queries and context separately.
template <typename T>
struct MhaLayer {
  int heads = 4, dim = 0;
  LinearLayer<T> qkv, q, kv, proj;
  bool cross = false;

  MhaLayer() = default;
  MhaLayer(ParamStore<T>& ps, const std::string& name, int dim_, int heads_, bool cross_,
           bool zero_proj = false) {
    dim = dim_;
    heads = heads_;
    cross = cross_;
    if (cross) {
      q = LinearLayer<T>(ps, name + ".q", dim, dim);
      kv = LinearLayer<T>(ps, name + ".kv", dim, 2 * dim);
    } else {
      qkv = LinearLayer<T>(ps, name + ".qkv", dim, 3 * dim);
    }
    proj = LinearLayer<T>(ps, name + ".proj", dim, dim, zero_proj);
  }

  // x: [B,N,D] -> [B,N,D]
  Var<T> self_attn(Tape<T>& t, Var<T> x) const {
    auto parts = split_lastdim(t, qkv.fwd(t, x), 3);
    return attend(t, parts[0], parts[1], parts[2]);
  }

  // queries [B,M,D] attend over ctx [B,N,D]
  Var<T> cross_attn(Tape<T>& t, Var<T> queries, Var<T> ctx) const {
    auto qq = q.fwd(t, queries);
    auto parts = split_lastdim(t, kv.fwd(t, ctx), 2);
    return attend(t, qq, parts[0], parts[1]);
  }

 private:
  Var<T> attend(Tape<T>& t, Var<T> qv, Var<T> kv_, Var<T> vv) const {
    const int B = qv->val.dim(0), M = qv->val.dim(1);
    const int N = kv_->val.dim(1);
    const int dh = dim / heads;
    auto to_heads = [&](Var<T> v, int len) {
      auto r = reshape(t, v, {B, len, heads, dh});
      auto p = permute0213(t, r);  // [B,h,len,dh]
      return reshape(t, p, {B * heads, len, dh});
    };
    auto qh = to_heads(qv, M);
    auto kh = to_heads(kv_, N);
    auto vh = to_heads(vv, N);
    auto scores = softmax_rows(t, bmm_nt(t, qh, kh, 1.0 / std::sqrt(double(dh))));
    auto out = bmm(t, scores, vh);  // [B*h, M, dh]
    auto merged = reshape(t, permute0213(t, reshape(t, out, {B, heads, M, dh})), {B, M, dim});
    return proj.fwd(t, merged);
  }
};

// Pre-LN transformer MLP: Linear -> GELU -> Linear.
template <typename T>
struct MlpLayer {
  LinearLayer<T> fc1, fc2;

  MlpLayer() = default;
  MlpLayer(ParamStore<T>& ps, const std::string& name, int dim, int hidden) {
    fc1 = LinearLayer<T>(ps, name + ".fc1", dim, hidden);
    fc2 = LinearLayer<T>(ps, name + ".fc2", hidden, dim);
  }
  Var<T> fwd(Tape<T>& t, Var<T> x) const { return fc2.fwd(t, gelu(t, fc1.fwd(t, x))); }
};

}  // namespace hopman::nn
