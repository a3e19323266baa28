#pragma once

#include <cblas.h>

#include <cmath>
#include <vector>

#include "hopman/nn/graph.hpp"

namespace hopman::nn {

// ---------------------------------------------------------------- gemm ----

inline void gemm_impl(CBLAS_TRANSPOSE ta, CBLAS_TRANSPOSE tb, int m, int n, int k, float alpha,
                      const float* a, int lda, const float* b, int ldb, float beta, float* c,
                      int ldc) {
  cblas_sgemm(CblasRowMajor, ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}
inline void gemm_impl(CBLAS_TRANSPOSE ta, CBLAS_TRANSPOSE tb, int m, int n, int k, double alpha,
                      const double* a, int lda, const double* b, int ldb, double beta, double* c,
                      int ldc) {
  cblas_dgemm(CblasRowMajor, ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

// C = alpha * op(A) op(B) + beta * C, row-major, leading dims = row strides.
template <typename T>
void gemm(bool trans_a, bool trans_b, int m, int n, int k, double alpha, const T* a, int lda,
          const T* b, int ldb, double beta, T* c, int ldc) {
  gemm_impl(trans_a ? CblasTrans : CblasNoTrans, trans_b ? CblasTrans : CblasNoTrans, m, n, k,
            T(alpha), a, lda, b, ldb, T(beta), c, ldc);
}

template <typename T>
bool any_rg(const std::vector<Var<T>>& vs) {
  for (const auto& v : vs)
    if (v->requires_grad) return true;
  return false;
}

// --------------------------------------------------------- elementwise ----

template <typename T>
Var<T> add(Tape<T>& tape, Var<T> a, Var<T> b) {
  if (!a->val.same_shape(b->val)) throw NumericError("add: shape mismatch");
  Tensor<T> out = a->val;
  const T* pb = b->val.data();
  for (i64 i = 0; i < out.numel(); ++i) out.v[size_t(i)] += pb[i];
  const bool rg = a->requires_grad || b->requires_grad;
  if (!rg) return tape.leaf(std::move(out));
  auto node = tape.record(std::move(out), true, nullptr);
  node->back = [node, a, b] {
    const Tensor<T>& g = node->grad;
    if (a->requires_grad) {
      T* d = a->ensure_grad().data();
      for (i64 i = 0; i < g.numel(); ++i) d[i] += g.v[size_t(i)];
    }
    if (b->requires_grad) {
      T* d = b->ensure_grad().data();
      for (i64 i = 0; i < g.numel(); ++i) d[i] += g.v[size_t(i)];
    }
  };
  return node;
}

template <typename T>
Var<T> add_scaled(Tape<T>& tape, Var<T> a, Var<T> b, double sa, double sb) {
  if (!a->val.same_shape(b->val)) throw NumericError("add_scaled: shape mismatch");
  Tensor<T> out(a->val.shape);
  for (i64 i = 0; i < out.numel(); ++i)
    out.v[size_t(i)] = T(sa) * a->val.v[size_t(i)] + T(sb) * b->val.v[size_t(i)];
  const bool rg = a->requires_grad || b->requires_grad;
  if (!rg) return tape.leaf(std::move(out));
  auto node = tape.record(std::move(out), true, nullptr);
  node->back = [node, a, b, sa, sb] {
    const Tensor<T>& g = node->grad;
    if (a->requires_grad) {
      T* d = a->ensure_grad().data();
      for (i64 i = 0; i < g.numel(); ++i) d[i] += T(sa) * g.v[size_t(i)];
    }
    if (b->requires_grad) {
      T* d = b->ensure_grad().data();
      for (i64 i = 0; i < g.numel(); ++i) d[i] += T(sb) * g.v[size_t(i)];
    }
  };
  return node;
}

template <typename T>
Var<T> mul(Tape<T>& tape, Var<T> a, Var<T> b) {
  if (!a->val.same_shape(b->val)) throw NumericError("mul: shape mismatch");
  Tensor<T> out(a->val.shape);
  for (i64 i = 0; i < out.numel(); ++i) out.v[size_t(i)] = a->val.v[size_t(i)] * b->val.v[size_t(i)];
  const bool rg = a->requires_grad || b->requires_grad;
  if (!rg) return tape.leaf(std::move(out));
  auto node = tape.record(std::move(out), true, nullptr);
  node->back = [node, a, b] {
    const Tensor<T>& g = node->grad;
    if (a->requires_grad) {
      T* d = a->ensure_grad().data();
      for (i64 i = 0; i < g.numel(); ++i) d[i] += g.v[size_t(i)] * b->val.v[size_t(i)];
    }
    if (b->requires_grad) {
      T* d = b->ensure_grad().data();
      for (i64 i = 0; i < g.numel(); ++i) d[i] += g.v[size_t(i)] * a->val.v[size_t(i)];
    }
  };
  return node;
}

template <typename T>
Var<T> scale(Tape<T>& tape, Var<T> a, double s) {
  Tensor<T> out(a->val.shape);
  for (i64 i = 0; i < out.numel(); ++i) out.v[size_t(i)] = T(s) * a->val.v[size_t(i)];
  if (!a->requires_grad) return tape.leaf(std::move(out));
  auto node = tape.record(std::move(out), true, nullptr);
  node->back = [node, a, s] {
    T* d = a->ensure_grad().data();
    for (i64 i = 0; i < node->grad.numel(); ++i) d[i] += T(s) * node->grad.v[size_t(i)];
  };
  return node;
}

template <typename T>
Var<T> silu(Tape<T>& tape, Var<T> a) {
  Tensor<T> out(a->val.shape);
  for (i64 i = 0; i < out.numel(); ++i) {
    const double x = double(a->val.v[size_t(i)]);
    out.v[size_t(i)] = T(x / (1.0 + std::exp(-x)));
  }
  if (!a->requires_grad) return tape.leaf(std::move(out));
  auto node = tape.record(std::move(out), true, nullptr);
  node->back = [node, a] {
    T* d = a->ensure_grad().data();
    for (i64 i = 0; i < node->grad.numel(); ++i) {
      const double x = double(a->val.v[size_t(i)]);
      const double s = 1.0 / (1.0 + std::exp(-x));
      d[i] += node->grad.v[size_t(i)] * T(s * (1.0 + x * (1.0 - s)));
    }
  };
  return node;
}

template <typename T>
Var<T> gelu(Tape<T>& tape, Var<T> a) {
  constexpr double c = 0.7978845608028654;  // sqrt(2/pi)
  constexpr double k = 0.044715;
  Tensor<T> out(a->val.shape);
  for (i64 i = 0; i < out.numel(); ++i) {
    const double x = double(a->val.v[size_t(i)]);
    out.v[size_t(i)] = T(0.5 * x * (1.0 + std::tanh(c * (x + k * x * x * x))));
  }
  if (!a->requires_grad) return tape.leaf(std::move(out));
  auto node = tape.record(std::move(out), true, nullptr);
  node->back = [node, a] {
    T* d = a->ensure_grad().data();
    for (i64 i = 0; i < node->grad.numel(); ++i) {
      const double x = double(a->val.v[size_t(i)]);
      const double u = c * (x + k * x * x * x);
      const double t = std::tanh(u);
      const double sech2 = 1.0 - t * t;
      const double g = 0.5 * (1.0 + t) + 0.5 * x * sech2 * c * (1.0 + 3.0 * k * x * x);
      d[i] += node->grad.v[size_t(i)] * T(g);
    }
  };
  return node;
}

template <typename T>
Var<T> tanh_act(Tape<T>& tape, Var<T> a) {
  Tensor<T> out(a->val.shape);
  for (i64 i = 0; i < out.numel(); ++i) out.v[size_t(i)] = T(std::tanh(double(a->val.v[size_t(i)])));
  if (!a->requires_grad) return tape.leaf(std::move(out));
  auto node = tape.record(std::move(out), true, nullptr);
  node->back = [node, a] {
    T* d = a->ensure_grad().data();
    for (i64 i = 0; i < node->grad.numel(); ++i) {
      const T y = node->val.v[size_t(i)];
      d[i] += node->grad.v[size_t(i)] * (T(1) - y * y);
    }
  };
  return node;
}

template <typename T>
Var<T> dropout(Tape<T>& tape, Var<T> a, double p, Rng& rng, bool training) {
  if (!training || p <= 0.0) return a;
  auto mask = std::make_shared<std::vector<T>>(size_t(a->val.numel()));
  const double keep = 1.0 - p;
  for (auto& m : *mask) m = rng.uniform() < keep ? T(1.0 / keep) : T(0);
  Tensor<T> out(a->val.shape);
  for (i64 i = 0; i < out.numel(); ++i) out.v[size_t(i)] = a->val.v[size_t(i)] * (*mask)[size_t(i)];
  if (!a->requires_grad) return tape.leaf(std::move(out));
  auto node = tape.record(std::move(out), true, nullptr);
  node->back = [node, a, mask] {
    T* d = a->ensure_grad().data();
    for (i64 i = 0; i < node->grad.numel(); ++i) d[i] += node->grad.v[size_t(i)] * (*mask)[size_t(i)];
  };
  return node;
}

// --------------------------------------------------------------- shape ----

template <typename T>
Var<T> reshape(Tape<T>& tape, Var<T> a, std::vector<int> shape) {
  Tensor<T> out = a->val.reshaped(shape);
  if (!a->requires_grad) return tape.leaf(std::move(out));
  auto node = tape.record(std::move(out), true, nullptr);
  node->back = [node, a] {
    T* d = a->ensure_grad().data();
    for (i64 i = 0; i < node->grad.numel(); ++i) d[i] += node->grad.v[size_t(i)];
  };
  return node;
}

// [A,B,C] -> [A,C,B]
template <typename T>
Var<T> permute021(Tape<T>& tape, Var<T> x) {
  const int A = x->val.dim(0), B = x->val.dim(1), C = x->val.dim(2);
  Tensor<T> out({A, C, B});
  for (int a = 0; a < A; ++a)
    for (int b = 0; b < B; ++b)
      for (int c = 0; c < C; ++c)
        out.v[size_t((i64(a) * C + c) * B + b)] = x->val.v[size_t((i64(a) * B + b) * C + c)];
  if (!x->requires_grad) return tape.leaf(std::move(out));
  auto node = tape.record(std::move(out), true, nullptr);
  node->back = [node, x, A, B, C] {
    T* d = x->ensure_grad().data();
    for (int a = 0; a < A; ++a)
      for (int b = 0; b < B; ++b)
        for (int c = 0; c < C; ++c)
          d[(i64(a) * B + b) * C + c] += node->grad.v[size_t((i64(a) * C + c) * B + b)];
  };
  return node;
}

// [A,B,C,D] -> [A,C,B,D]
template <typename T>
Var<T> permute0213(Tape<T>& tape, Var<T> x) {
  const int A = x->val.dim(0), B = x->val.dim(1), C = x->val.dim(2), D = x->val.dim(3);
  Tensor<T> out({A, C, B, D});
  for (int a = 0; a < A; ++a)
    for (int b = 0; b < B; ++b)
      for (int c = 0; c < C; ++c) {
        const T* src = x->val.data() + ((i64(a) * B + b) * C + c) * D;
        T* dst = out.data() + ((i64(a) * C + c) * B + b) * D;
        for (int d = 0; d < D; ++d) dst[d] = src[d];
      }
  if (!x->requires_grad) return tape.leaf(std::move(out));
  auto node = tape.record(std::move(out), true, nullptr);
  node->back = [node, x, A, B, C, D] {
    T* g = x->ensure_grad().data();
    for (int a = 0; a < A; ++a)
      for (int b = 0; b < B; ++b)
        for (int c = 0; c < C; ++c) {
          const T* src = node->grad.data() + ((i64(a) * C + c) * B + b) * D;
          T* dst = g + ((i64(a) * B + b) * C + c) * D;
          for (int d = 0; d < D; ++d) dst[d] += src[d];
        }
  };
  return node;
}

// Concatenate along dim 1 of [B, C, ...spatial] tensors with equal trailing dims.
template <typename T>
Var<T> concat_ch(Tape<T>& tape, Var<T> a, Var<T> b) {
  const auto& sa = a->val.shape;
  const auto& sb = b->val.shape;
  if (sa.size() != sb.size() || sa[0] != sb[0]) throw NumericError("concat_ch: shape mismatch");
  i64 inner = 1;
  for (size_t i = 2; i < sa.size(); ++i) {
    if (sa[i] != sb[i]) throw NumericError("concat_ch: trailing shape mismatch");
    inner *= sa[i];
  }
  const int B = sa[0], Ca = sa[1], Cb = sb[1];
  std::vector<int> os = sa;
  os[1] = Ca + Cb;
  Tensor<T> out(os);
  for (int n = 0; n < B; ++n) {
    std::copy_n(a->val.data() + i64(n) * Ca * inner, Ca * inner,
                out.data() + i64(n) * (Ca + Cb) * inner);
    std::copy_n(b->val.data() + i64(n) * Cb * inner, Cb * inner,
                out.data() + i64(n) * (Ca + Cb) * inner + Ca * inner);
  }
  const bool rg = a->requires_grad || b->requires_grad;
  if (!rg) return tape.leaf(std::move(out));
  auto node = tape.record(std::move(out), true, nullptr);
  node->back = [node, a, b, B, Ca, Cb, inner] {
    for (int n = 0; n < B; ++n) {
      const T* g = node->grad.data() + i64(n) * (Ca + Cb) * inner;
      if (a->requires_grad) {
        T* d = a->ensure_grad().data() + i64(n) * Ca * inner;
        for (i64 i = 0; i < Ca * inner; ++i) d[i] += g[i];
      }
      if (b->requires_grad) {
        T* d = b->ensure_grad().data() + i64(n) * Cb * inner;
        for (i64 i = 0; i < Cb * inner; ++i) d[i] += g[Ca * inner + i];
      }
    }
  };
  return node;
}

// n tensors [B, D] -> [B, n, D]
template <typename T>
Var<T> stack_tokens(Tape<T>& tape, const std::vector<Var<T>>& xs) {
  const int B = xs[0]->val.dim(0), D = xs[0]->val.dim(1);
  const int N = int(xs.size());
  Tensor<T> out({B, N, D});
  for (int i = 0; i < N; ++i) {
    if (xs[size_t(i)]->val.dim(0) != B || xs[size_t(i)]->val.dim(1) != D)
      throw NumericError("stack_tokens: shape mismatch");
    for (int b = 0; b < B; ++b)
      std::copy_n(xs[size_t(i)]->val.data() + i64(b) * D, D,
                  out.data() + (i64(b) * N + i) * D);
  }
  if (!any_rg(xs)) return tape.leaf(std::move(out));
  auto node = tape.record(std::move(out), true, nullptr);
  node->back = [node, xs, B, N, D] {
    for (int i = 0; i < N; ++i) {
      if (!xs[size_t(i)]->requires_grad) continue;
      T* d = xs[size_t(i)]->ensure_grad().data();
      for (int b = 0; b < B; ++b) {
        const T* g = node->grad.data() + (i64(b) * N + i) * D;
        for (int k = 0; k < D; ++k) d[i64(b) * D + k] += g[k];
      }
    }
  };
  return node;
}

// Split the last dim into `parts` equal chunks.
template <typename T>
std::vector<Var<T>> split_lastdim(Tape<T>& tape, Var<T> x, int parts) {
  const auto& s = x->val.shape;
  const int D = s.back();
  if (D % parts != 0) throw NumericError("split_lastdim: indivisible");
  const int Dp = D / parts;
  const i64 rows = x->val.numel() / D;
  std::vector<Var<T>> out;
  for (int p = 0; p < parts; ++p) {
    std::vector<int> os = s;
    os.back() = Dp;
    Tensor<T> t(os);
    for (i64 r = 0; r < rows; ++r)
      std::copy_n(x->val.data() + r * D + i64(p) * Dp, Dp, t.data() + r * Dp);
    if (!x->requires_grad) {
      out.push_back(tape.leaf(std::move(t)));
      continue;
    }
    auto node = tape.record(std::move(t), true, nullptr);
    node->back = [node, x, rows, D, Dp, p] {
      T* d = x->ensure_grad().data();
      for (i64 r = 0; r < rows; ++r) {
        const T* g = node->grad.data() + r * Dp;
        for (int k = 0; k < Dp; ++k) d[r * D + i64(p) * Dp + k] += g[k];
      }
    };
    out.push_back(node);
  }
  return out;
}

// ------------------------------------------------------------- matmuls ----

// x [..., Din] times W^T [Din, Dout] plus b -> [..., Dout]
template <typename T>
Var<T> linear(Tape<T>& tape, Var<T> x, Var<T> W, Var<T> b) {
  const int Din = x->val.shape.back();
  if (W->val.dim(1) != Din) throw NumericError("linear: fan-in mismatch");
  const int Dout = W->val.dim(0);
  const i64 R = x->val.numel() / Din;
  std::vector<int> os = x->val.shape;
  os.back() = Dout;
  Tensor<T> out(os);
  gemm<T>(false, true, int(R), Dout, Din, 1.0, x->val.data(), Din, W->val.data(), Din, 0.0,
          out.data(), Dout);
  if (b) {
    for (i64 r = 0; r < R; ++r)
      for (int j = 0; j < Dout; ++j) out.v[size_t(r * Dout + j)] += b->val.v[size_t(j)];
  }
  const bool rg = x->requires_grad || W->requires_grad || (b && b->requires_grad);
  if (!rg) return tape.leaf(std::move(out));
  auto node = tape.record(std::move(out), true, nullptr);
  node->back = [node, x, W, b, R, Din, Dout] {
    const T* g = node->grad.data();
    if (x->requires_grad)
      gemm<T>(false, false, int(R), Din, Dout, 1.0, g, Dout, W->val.data(), Din, 1.0,
              x->ensure_grad().data(), Din);
    if (W->requires_grad)
      gemm<T>(true, false, Dout, Din, int(R), 1.0, g, Dout, x->val.data(), Din, 1.0,
              W->ensure_grad().data(), Din);
    if (b && b->requires_grad) {
      T* d = b->ensure_grad().data();
      for (i64 r = 0; r < R; ++r)
        for (int j = 0; j < Dout; ++j) d[j] += g[r * Dout + j];
    }
  };
  return node;
}

// a [B,M,K] @ b [B,K,N] * alpha
template <typename T>
Var<T> bmm(Tape<T>& tape, Var<T> a, Var<T> b, double alpha = 1.0) {
  const int B = a->val.dim(0), M = a->val.dim(1), K = a->val.dim(2), N = b->val.dim(2);
  if (b->val.dim(0) != B || b->val.dim(1) != K) throw NumericError("bmm: shape mismatch");
  Tensor<T> out({B, M, N});
  for (int i = 0; i < B; ++i)
    gemm<T>(false, false, M, N, K, alpha, a->val.data() + i64(i) * M * K, K,
            b->val.data() + i64(i) * K * N, N, 0.0, out.data() + i64(i) * M * N, N);
  const bool rg = a->requires_grad || b->requires_grad;
  if (!rg) return tape.leaf(std::move(out));
  auto node = tape.record(std::move(out), true, nullptr);
  node->back = [node, a, b, B, M, K, N, alpha] {
    for (int i = 0; i < B; ++i) {
      const T* g = node->grad.data() + i64(i) * M * N;
      if (a->requires_grad)
        gemm<T>(false, true, M, K, N, alpha, g, N, b->val.data() + i64(i) * K * N, N, 1.0,
                a->ensure_grad().data() + i64(i) * M * K, K);
      if (b->requires_grad)
        gemm<T>(true, false, K, N, M, alpha, a->val.data() + i64(i) * M * K, K, g, N, 1.0,
                b->ensure_grad().data() + i64(i) * K * N, N);
    }
  };
  return node;
}

// a [B,M,K] @ b^T where b is [B,N,K]; result [B,M,N] * alpha
template <typename T>
Var<T> bmm_nt(Tape<T>& tape, Var<T> a, Var<T> b, double alpha = 1.0) {
  const int B = a->val.dim(0), M = a->val.dim(1), K = a->val.dim(2), N = b->val.dim(1);
  if (b->val.dim(0) != B || b->val.dim(2) != K) throw NumericError("bmm_nt: shape mismatch");
  Tensor<T> out({B, M, N});
  for (int i = 0; i < B; ++i)
    gemm<T>(false, true, M, N, K, alpha, a->val.data() + i64(i) * M * K, K,
            b->val.data() + i64(i) * N * K, K, 0.0, out.data() + i64(i) * M * N, N);
  const bool rg = a->requires_grad || b->requires_grad;
  if (!rg) return tape.leaf(std::move(out));
  auto node = tape.record(std::move(out), true, nullptr);
  node->back = [node, a, b, B, M, K, N, alpha] {
    for (int i = 0; i < B; ++i) {
      const T* g = node->grad.data() + i64(i) * M * N;
      if (a->requires_grad)
        gemm<T>(false, false, M, K, N, alpha, g, N, b->val.data() + i64(i) * N * K, K, 1.0,
                a->ensure_grad().data() + i64(i) * M * K, K);
      if (b->requires_grad)
        gemm<T>(true, false, N, K, M, alpha, g, N, a->val.data() + i64(i) * M * K, K, 1.0,
                b->ensure_grad().data() + i64(i) * N * K, K);
    }
  };
  return node;
}

template <typename T>
Var<T> softmax_rows(Tape<T>& tape, Var<T> x) {
  const int N = x->val.shape.back();
  const i64 R = x->val.numel() / N;
  Tensor<T> out(x->val.shape);
  for (i64 r = 0; r < R; ++r) {
    const T* in = x->val.data() + r * N;
    T* o = out.data() + r * N;
    double mx = double(in[0]);
    for (int j = 1; j < N; ++j) mx = std::max(mx, double(in[j]));
    double sum = 0;
    for (int j = 0; j < N; ++j) {
      const double e = std::exp(double(in[j]) - mx);
      o[j] = T(e);
      sum += e;
    }
    const double inv = 1.0 / sum;
    for (int j = 0; j < N; ++j) o[j] = T(double(o[j]) * inv);
  }
  if (!x->requires_grad) return tape.leaf(std::move(out));
  auto node = tape.record(std::move(out), true, nullptr);
  node->back = [node, x, R, N] {
    T* d = x->ensure_grad().data();
    for (i64 r = 0; r < R; ++r) {
      const T* y = node->val.data() + r * N;
      const T* g = node->grad.data() + r * N;
      double dot = 0;
      for (int j = 0; j < N; ++j) dot += double(y[j]) * double(g[j]);
      for (int j = 0; j < N; ++j) d[r * N + j] += T((double(g[j]) - dot) * double(y[j]));
    }
  };
  return node;
}

// ------------------------------------------------------------- conv2d ----

namespace detail {

template <typename T>
void im2col(const T* x, int C, int H, int W, int kh, int kw, int stride, int pad, int OH, int OW,
            T* col) {
  for (int c = 0; c < C; ++c)
    for (int ky = 0; ky < kh; ++ky)
      for (int kx = 0; kx < kw; ++kx) {
        T* dst = col + (i64(c) * kh * kw + i64(ky) * kw + kx) * OH * OW;
        for (int oy = 0; oy < OH; ++oy) {
          const int y = oy * stride + ky - pad;
          if (y < 0 || y >= H) {
            for (int ox = 0; ox < OW; ++ox) dst[i64(oy) * OW + ox] = T(0);
            continue;
          }
          const T* src = x + (i64(c) * H + y) * W;
          for (int ox = 0; ox < OW; ++ox) {
            const int xx = ox * stride + kx - pad;
            dst[i64(oy) * OW + ox] = (xx >= 0 && xx < W) ? src[xx] : T(0);
          }
        }
      }
}

template <typename T>
void col2im_add(const T* col, int C, int H, int W, int kh, int kw, int stride, int pad, int OH,
                int OW, T* dx) {
  for (int c = 0; c < C; ++c)
    for (int ky = 0; ky < kh; ++ky)
      for (int kx = 0; kx < kw; ++kx) {
        const T* src = col + (i64(c) * kh * kw + i64(ky) * kw + kx) * OH * OW;
        for (int oy = 0; oy < OH; ++oy) {
          const int y = oy * stride + ky - pad;
          if (y < 0 || y >= H) continue;
          T* dst = dx + (i64(c) * H + y) * W;
          for (int ox = 0; ox < OW; ++ox) {
            const int xx = ox * stride + kx - pad;
            if (xx >= 0 && xx < W) dst[xx] += src[i64(oy) * OW + ox];
          }
        }
      }
}

}  // namespace detail

template <typename T>
Var<T> conv2d(Tape<T>& tape, Var<T> x, Var<T> W, Var<T> b, int stride = 1, int pad = 1) {
  const int B = x->val.dim(0), Ci = x->val.dim(1), H = x->val.dim(2), Wd = x->val.dim(3);
  const int Co = W->val.dim(0), kh = W->val.dim(2), kw = W->val.dim(3);
  if (W->val.dim(1) != Ci) throw NumericError("conv2d: channel mismatch");
  const int OH = (H + 2 * pad - kh) / stride + 1;
  const int OW = (Wd + 2 * pad - kw) / stride + 1;
  const int K = Ci * kh * kw;
  Tensor<T> out({B, Co, OH, OW});
  std::vector<T> col(size_t(K) * OH * OW);
  for (int n = 0; n < B; ++n) {
    detail::im2col(x->val.data() + i64(n) * Ci * H * Wd, Ci, H, Wd, kh, kw, stride, pad, OH, OW,
                   col.data());
    gemm<T>(false, false, Co, OH * OW, K, 1.0, W->val.data(), K, col.data(), OH * OW, 0.0,
            out.data() + i64(n) * Co * OH * OW, OH * OW);
  }
  if (b) {
    for (int n = 0; n < B; ++n)
      for (int c = 0; c < Co; ++c) {
        T* o = out.data() + (i64(n) * Co + c) * OH * OW;
        const T bias = b->val.v[size_t(c)];
        for (i64 i = 0; i < i64(OH) * OW; ++i) o[i] += bias;
      }
  }
  const bool rg = x->requires_grad || W->requires_grad || (b && b->requires_grad);
  if (!rg) return tape.leaf(std::move(out));
  auto node = tape.record(std::move(out), true, nullptr);
  node->back = [node, x, W, b, B, Ci, H, Wd, Co, kh, kw, stride, pad, OH, OW, K] {
    std::vector<T> col(size_t(K) * OH * OW);
    std::vector<T> dcol(size_t(K) * OH * OW);
    for (int n = 0; n < B; ++n) {
      const T* g = node->grad.data() + i64(n) * Co * OH * OW;
      if (W->requires_grad) {
        detail::im2col(x->val.data() + i64(n) * Ci * H * Wd, Ci, H, Wd, kh, kw, stride, pad, OH,
                       OW, col.data());
        gemm<T>(false, true, Co, K, OH * OW, 1.0, g, OH * OW, col.data(), OH * OW, 1.0,
                W->ensure_grad().data(), K);
      }
      if (x->requires_grad) {
        gemm<T>(true, false, K, OH * OW, Co, 1.0, W->val.data(), K, g, OH * OW, 0.0, dcol.data(),
                OH * OW);
        detail::col2im_add(dcol.data(), Ci, H, Wd, kh, kw, stride, pad, OH, OW,
                           x->ensure_grad().data() + i64(n) * Ci * H * Wd);
      }
      if (b && b->requires_grad) {
        T* d = b->ensure_grad().data();
        for (int c = 0; c < Co; ++c) {
          double s = 0;
          for (i64 i = 0; i < i64(OH) * OW; ++i) s += double(g[i64(c) * OH * OW + i]);
          d[c] += T(s);
        }
      }
    }
  };
  return node;
}

// ---------------------------------------------------------------- norm ----

// GroupNorm over [B,C,H,W]; gamma/beta may be null for the non-affine variant.
template <typename T>
Var<T> group_norm(Tape<T>& tape, Var<T> x, int groups, Var<T> gamma, Var<T> beta,
                  double eps = 1e-5) {
  const int B = x->val.dim(0), C = x->val.dim(1);
  const i64 HW = x->val.numel() / (i64(B) * C);
  if (C % groups != 0) throw NumericError("group_norm: C % groups != 0");
  const int Cg = C / groups;
  const i64 n = i64(Cg) * HW;
  auto stats = std::make_shared<std::vector<double>>(size_t(B) * groups * 2);
  Tensor<T> out(x->val.shape);
  for (int b = 0; b < B; ++b)
    for (int g = 0; g < groups; ++g) {
      const T* in = x->val.data() + (i64(b) * C + i64(g) * Cg) * HW;
      double mean = 0;
      for (i64 i = 0; i < n; ++i) mean += double(in[i]);
      mean /= double(n);
      double var = 0;
      for (i64 i = 0; i < n; ++i) {
        const double d = double(in[i]) - mean;
        var += d * d;
      }
      var /= double(n);
      const double istd = 1.0 / std::sqrt(var + eps);
      (*stats)[size_t(b * groups + g) * 2] = mean;
      (*stats)[size_t(b * groups + g) * 2 + 1] = istd;
      T* o = out.data() + (i64(b) * C + i64(g) * Cg) * HW;
      for (int cc = 0; cc < Cg; ++cc) {
        const int c = g * Cg + cc;
        const double ga = gamma ? double(gamma->val.v[size_t(c)]) : 1.0;
        const double be = beta ? double(beta->val.v[size_t(c)]) : 0.0;
        for (i64 i = 0; i < HW; ++i) {
          const double xh = (double(in[i64(cc) * HW + i]) - mean) * istd;
          o[i64(cc) * HW + i] = T(xh * ga + be);
        }
      }
    }
  const bool rg =
      x->requires_grad || (gamma && gamma->requires_grad) || (beta && beta->requires_grad);
  if (!rg) return tape.leaf(std::move(out));
  auto node = tape.record(std::move(out), true, nullptr);
  node->back = [node, x, gamma, beta, stats, B, C, HW, groups, Cg, n] {
    for (int b = 0; b < B; ++b)
      for (int g = 0; g < groups; ++g) {
        const double mean = (*stats)[size_t(b * groups + g) * 2];
        const double istd = (*stats)[size_t(b * groups + g) * 2 + 1];
        const T* in = x->val.data() + (i64(b) * C + i64(g) * Cg) * HW;
        const T* gr = node->grad.data() + (i64(b) * C + i64(g) * Cg) * HW;
        // Accumulate the two reduction terms of the normalization backward.
        double sum_dxh = 0, sum_dxh_xh = 0;
        for (int cc = 0; cc < Cg; ++cc) {
          const int c = g * Cg + cc;
          const double ga = gamma ? double(gamma->val.v[size_t(c)]) : 1.0;
          for (i64 i = 0; i < HW; ++i) {
            const double xh = (double(in[i64(cc) * HW + i]) - mean) * istd;
            const double dxh = double(gr[i64(cc) * HW + i]) * ga;
            sum_dxh += dxh;
            sum_dxh_xh += dxh * xh;
          }
        }
        if (x->requires_grad) {
          T* dx = x->ensure_grad().data() + (i64(b) * C + i64(g) * Cg) * HW;
          for (int cc = 0; cc < Cg; ++cc) {
            const int c = g * Cg + cc;
            const double ga = gamma ? double(gamma->val.v[size_t(c)]) : 1.0;
            for (i64 i = 0; i < HW; ++i) {
              const double xh = (double(in[i64(cc) * HW + i]) - mean) * istd;
              const double dxh = double(gr[i64(cc) * HW + i]) * ga;
              dx[i64(cc) * HW + i] +=
                  T(istd * (dxh - sum_dxh / double(n) - xh * sum_dxh_xh / double(n)));
            }
          }
        }
        if (gamma && gamma->requires_grad) {
          T* dg = gamma->ensure_grad().data();
          for (int cc = 0; cc < Cg; ++cc) {
            const int c = g * Cg + cc;
            double s = 0;
            for (i64 i = 0; i < HW; ++i) {
              const double xh = (double(in[i64(cc) * HW + i]) - mean) * istd;
              s += double(gr[i64(cc) * HW + i]) * xh;
            }
            dg[c] += T(s);
          }
        }
        if (beta && beta->requires_grad) {
          T* db = beta->ensure_grad().data();
          for (int cc = 0; cc < Cg; ++cc) {
            const int c = g * Cg + cc;
            double s = 0;
            for (i64 i = 0; i < HW; ++i) s += double(gr[i64(cc) * HW + i]);
            db[c] += T(s);
          }
        }
      }
  };
  return node;
}

// y = x * (1 + s[b,c]) + t[b,c]; the AdaGN conditioning path.
template <typename T>
Var<T> scale_shift_chw(Tape<T>& tape, Var<T> x, Var<T> s, Var<T> t) {
  const int B = x->val.dim(0), C = x->val.dim(1);
  const i64 HW = x->val.numel() / (i64(B) * C);
  if (s->val.dim(0) != B || s->val.dim(1) != C) throw NumericError("scale_shift: shape");
  Tensor<T> out(x->val.shape);
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c) {
      const T sc = T(1) + s->val.v[size_t(i64(b) * C + c)];
      const T sh = t->val.v[size_t(i64(b) * C + c)];
      const T* in = x->val.data() + (i64(b) * C + c) * HW;
      T* o = out.data() + (i64(b) * C + c) * HW;
      for (i64 i = 0; i < HW; ++i) o[i] = in[i] * sc + sh;
    }
  const bool rg = x->requires_grad || s->requires_grad || t->requires_grad;
  if (!rg) return tape.leaf(std::move(out));
  auto node = tape.record(std::move(out), true, nullptr);
  node->back = [node, x, s, t, B, C, HW] {
    for (int b = 0; b < B; ++b)
      for (int c = 0; c < C; ++c) {
        const i64 off = (i64(b) * C + c) * HW;
        const T* g = node->grad.data() + off;
        if (x->requires_grad) {
          const T sc = T(1) + s->val.v[size_t(i64(b) * C + c)];
          T* dx = x->ensure_grad().data() + off;
          for (i64 i = 0; i < HW; ++i) dx[i] += g[i] * sc;
        }
        if (s->requires_grad) {
          const T* in = x->val.data() + off;
          double acc = 0;
          for (i64 i = 0; i < HW; ++i) acc += double(g[i]) * double(in[i]);
          s->ensure_grad().v[size_t(i64(b) * C + c)] += T(acc);
        }
        if (t->requires_grad) {
          double acc = 0;
          for (i64 i = 0; i < HW; ++i) acc += double(g[i]);
          t->ensure_grad().v[size_t(i64(b) * C + c)] += T(acc);
        }
      }
  };
  return node;
}

template <typename T>
Var<T> layer_norm(Tape<T>& tape, Var<T> x, Var<T> gamma, Var<T> beta, double eps = 1e-5) {
  const int D = x->val.shape.back();
  const i64 R = x->val.numel() / D;
  auto stats = std::make_shared<std::vector<double>>(size_t(R) * 2);
  Tensor<T> out(x->val.shape);
  for (i64 r = 0; r < R; ++r) {
    const T* in = x->val.data() + r * D;
    double mean = 0;
    for (int j = 0; j < D; ++j) mean += double(in[j]);
    mean /= D;
    double var = 0;
    for (int j = 0; j < D; ++j) {
      const double d = double(in[j]) - mean;
      var += d * d;
    }
    var /= D;
    const double istd = 1.0 / std::sqrt(var + eps);
    (*stats)[size_t(r) * 2] = mean;
    (*stats)[size_t(r) * 2 + 1] = istd;
    T* o = out.data() + r * D;
    for (int j = 0; j < D; ++j) {
      const double xh = (double(in[j]) - mean) * istd;
      o[j] = T(xh * double(gamma->val.v[size_t(j)]) + double(beta->val.v[size_t(j)]));
    }
  }
  const bool rg = x->requires_grad || gamma->requires_grad || beta->requires_grad;
  if (!rg) return tape.leaf(std::move(out));
  auto node = tape.record(std::move(out), true, nullptr);
  node->back = [node, x, gamma, beta, stats, R, D] {
    for (i64 r = 0; r < R; ++r) {
      const double mean = (*stats)[size_t(r) * 2];
      const double istd = (*stats)[size_t(r) * 2 + 1];
      const T* in = x->val.data() + r * D;
      const T* g = node->grad.data() + r * D;
      double sum_dxh = 0, sum_dxh_xh = 0;
      for (int j = 0; j < D; ++j) {
        const double xh = (double(in[j]) - mean) * istd;
        const double dxh = double(g[j]) * double(gamma->val.v[size_t(j)]);
        sum_dxh += dxh;
        sum_dxh_xh += dxh * xh;
      }
      if (x->requires_grad) {
        T* dx = x->ensure_grad().data() + r * D;
        for (int j = 0; j < D; ++j) {
          const double xh = (double(in[j]) - mean) * istd;
          const double dxh = double(g[j]) * double(gamma->val.v[size_t(j)]);
          dx[j] += T(istd * (dxh - sum_dxh / D - xh * sum_dxh_xh / D));
        }
      }
      if (gamma->requires_grad) {
        T* dg = gamma->ensure_grad().data();
        for (int j = 0; j < D; ++j) {
          const double xh = (double(in[j]) - mean) * istd;
          dg[j] += T(double(g[j]) * xh);
        }
      }
      if (beta->requires_grad) {
        T* db = beta->ensure_grad().data();
        for (int j = 0; j < D; ++j) db[j] += g[j];
      }
    }
  };
  return node;
}

// ------------------------------------------------------ pooling/resize ----

template <typename T>
Var<T> upsample2x(Tape<T>& tape, Var<T> x) {
  const int B = x->val.dim(0), C = x->val.dim(1), H = x->val.dim(2), W = x->val.dim(3);
  Tensor<T> out({B, C, 2 * H, 2 * W});
  for (i64 bc = 0; bc < i64(B) * C; ++bc)
    for (int y = 0; y < H; ++y)
      for (int xx = 0; xx < W; ++xx) {
        const T v = x->val.v[size_t((bc * H + y) * W + xx)];
        T* o = out.data() + (bc * 2 * H + 2 * y) * 2 * W + 2 * xx;
        o[0] = v;
        o[1] = v;
        o[2 * W] = v;
        o[2 * W + 1] = v;
      }
  if (!x->requires_grad) return tape.leaf(std::move(out));
  auto node = tape.record(std::move(out), true, nullptr);
  node->back = [node, x, B, C, H, W] {
    T* d = x->ensure_grad().data();
    for (i64 bc = 0; bc < i64(B) * C; ++bc)
      for (int y = 0; y < H; ++y)
        for (int xx = 0; xx < W; ++xx) {
          const T* g = node->grad.data() + (bc * 2 * H + 2 * y) * 2 * W + 2 * xx;
          d[(bc * H + y) * W + xx] += g[0] + g[1] + g[2 * W] + g[2 * W + 1];
        }
  };
  return node;
}

template <typename T>
Var<T> global_avg_pool(Tape<T>& tape, Var<T> x) {
  const int B = x->val.dim(0), C = x->val.dim(1);
  const i64 HW = x->val.numel() / (i64(B) * C);
  Tensor<T> out({B, C});
  for (i64 bc = 0; bc < i64(B) * C; ++bc) {
    double s = 0;
    const T* in = x->val.data() + bc * HW;
    for (i64 i = 0; i < HW; ++i) s += double(in[i]);
    out.v[size_t(bc)] = T(s / double(HW));
  }
  if (!x->requires_grad) return tape.leaf(std::move(out));
  auto node = tape.record(std::move(out), true, nullptr);
  node->back = [node, x, B, C, HW] {
    T* d = x->ensure_grad().data();
    for (i64 bc = 0; bc < i64(B) * C; ++bc) {
      const T g = node->grad.v[size_t(bc)] / T(double(HW));
      for (i64 i = 0; i < HW; ++i) d[bc * HW + i] += g;
    }
  };
  return node;
}

// e [N,D] replicated over a batch -> [B,N,D].
template <typename T>
Var<T> broadcast_rows(Tape<T>& tape, Var<T> e, int B) {
  const int N = e->val.dim(0), D = e->val.dim(1);
  Tensor<T> out({B, N, D});
  for (int b = 0; b < B; ++b)
    std::copy_n(e->val.data(), i64(N) * D, out.data() + i64(b) * N * D);
  if (!e->requires_grad) return tape.leaf(std::move(out));
  auto node = tape.record(std::move(out), true, nullptr);
  node->back = [node, e, B, N, D] {
    T* d = e->ensure_grad().data();
    for (int b = 0; b < B; ++b) {
      const T* g = node->grad.data() + i64(b) * N * D;
      for (i64 i = 0; i < i64(N) * D; ++i) d[i] += g[i];
    }
  };
  return node;
}

// x [B,N,D] + e [N,D], broadcast over batch.
template <typename T>
Var<T> add_bias_tokens(Tape<T>& tape, Var<T> x, Var<T> e) {
  const int B = x->val.dim(0), N = x->val.dim(1), D = x->val.dim(2);
  if (e->val.dim(0) != N || e->val.dim(1) != D) throw NumericError("add_bias_tokens: shape");
  Tensor<T> out = x->val;
  for (int b = 0; b < B; ++b)
    for (i64 i = 0; i < i64(N) * D; ++i) out.v[size_t(i64(b) * N * D + i)] += e->val.v[size_t(i)];
  const bool rg = x->requires_grad || e->requires_grad;
  if (!rg) return tape.leaf(std::move(out));
  auto node = tape.record(std::move(out), true, nullptr);
  node->back = [node, x, e, B, N, D] {
    if (x->requires_grad) {
      T* d = x->ensure_grad().data();
      for (i64 i = 0; i < node->grad.numel(); ++i) d[i] += node->grad.v[size_t(i)];
    }
    if (e->requires_grad) {
      T* d = e->ensure_grad().data();
      for (int b = 0; b < B; ++b)
        for (i64 i = 0; i < i64(N) * D; ++i) d[i] += node->grad.v[size_t(i64(b) * N * D + i)];
    }
  };
  return node;
}

// x [B,N,D] with per-token scalar flags [B*N]: y[b,n] = x[b,n] + flags[b,n] * e.
template <typename T>
Var<T> add_flag_embed(Tape<T>& tape, Var<T> x, std::shared_ptr<std::vector<float>> flags,
                      Var<T> e) {
  const int B = x->val.dim(0), N = x->val.dim(1), D = x->val.dim(2);
  if (i64(flags->size()) != i64(B) * N) throw NumericError("add_flag_embed: flags size");
  Tensor<T> out = x->val;
  for (i64 bn = 0; bn < i64(B) * N; ++bn) {
    const T f = T((*flags)[size_t(bn)]);
    if (f == T(0)) continue;
    T* o = out.data() + bn * D;
    for (int j = 0; j < D; ++j) o[j] += f * e->val.v[size_t(j)];
  }
  const bool rg = x->requires_grad || e->requires_grad;
  if (!rg) return tape.leaf(std::move(out));
  auto node = tape.record(std::move(out), true, nullptr);
  node->back = [node, x, e, flags, B, N, D] {
    if (x->requires_grad) {
      T* d = x->ensure_grad().data();
      for (i64 i = 0; i < node->grad.numel(); ++i) d[i] += node->grad.v[size_t(i)];
    }
    if (e->requires_grad) {
      T* d = e->ensure_grad().data();
      for (i64 bn = 0; bn < i64(B) * N; ++bn) {
        const T f = T((*flags)[size_t(bn)]);
        if (f == T(0)) continue;
        const T* g = node->grad.data() + bn * D;
        for (int j = 0; j < D; ++j) d[j] += f * g[j];
      }
    }
  };
  return node;
}

// ------------------------------------------------------------- losses ----

template <typename T>
Var<T> mean_all(Tape<T>& tape, Var<T> x) {
  const i64 n = x->val.numel();
  double s = 0;
  for (i64 i = 0; i < n; ++i) s += double(x->val.v[size_t(i)]);
  Tensor<T> out({1});
  out.v[0] = T(s / double(n));
  if (!x->requires_grad) return tape.leaf(std::move(out));
  auto node = tape.record(std::move(out), true, nullptr);
  node->back = [node, x, n] {
    const T g = node->grad.v[0] / T(double(n));
    T* d = x->ensure_grad().data();
    for (i64 i = 0; i < n; ++i) d[i] += g;
  };
  return node;
}

// Mean squared error against a constant target.
template <typename T>
Var<T> mse(Tape<T>& tape, Var<T> pred, const Tensor<T>& target) {
  if (!pred->val.same_shape(target)) throw NumericError("mse: shape mismatch");
  const i64 n = pred->val.numel();
  double s = 0;
  for (i64 i = 0; i < n; ++i) {
    const double d = double(pred->val.v[size_t(i)]) - double(target.v[size_t(i)]);
    s += d * d;
  }
  Tensor<T> out({1});
  out.v[0] = T(s / double(n));
  if (!pred->requires_grad) return tape.leaf(std::move(out));
  auto tgt = std::make_shared<Tensor<T>>(target);
  auto node = tape.record(std::move(out), true, nullptr);
  node->back = [node, pred, tgt, n] {
    const T g = node->grad.v[0];
    T* d = pred->ensure_grad().data();
    for (i64 i = 0; i < n; ++i)
      d[i] += g * T(2.0 / double(n)) * (pred->val.v[size_t(i)] - tgt->v[size_t(i)]);
  };
  return node;
}

// Smooth-L1 (Huber, transition delta) with optional per-element weights;
// normalized by the weight sum.
template <typename T>
Var<T> huber_masked(Tape<T>& tape, Var<T> pred, const Tensor<T>& target,
                    const std::vector<T>* weights, double delta = 1.0) {
  if (!pred->val.same_shape(target)) throw NumericError("huber: shape mismatch");
  const i64 n = pred->val.numel();
  double wsum = 0, s = 0;
  for (i64 i = 0; i < n; ++i) {
    const double w = weights ? double((*weights)[size_t(i)]) : 1.0;
    if (w == 0) continue;
    wsum += w;
    const double d = double(pred->val.v[size_t(i)]) - double(target.v[size_t(i)]);
    const double ad = std::fabs(d);
    s += w * (ad <= delta ? 0.5 * d * d : delta * (ad - 0.5 * delta));
  }
  if (wsum <= 0) throw NumericError("huber: empty mask");
  Tensor<T> out({1});
  out.v[0] = T(s / wsum);
  if (!pred->requires_grad) return tape.leaf(std::move(out));
  auto tgt = std::make_shared<Tensor<T>>(target);
  auto w = weights ? std::make_shared<std::vector<T>>(*weights) : nullptr;
  auto node = tape.record(std::move(out), true, nullptr);
  node->back = [node, pred, tgt, w, n, wsum, delta] {
    const T g = node->grad.v[0];
    T* dp = pred->ensure_grad().data();
    for (i64 i = 0; i < n; ++i) {
      const double wi = w ? double((*w)[size_t(i)]) : 1.0;
      if (wi == 0) continue;
      const double d = double(pred->val.v[size_t(i)]) - double(tgt->v[size_t(i)]);
      const double dd = std::fabs(d) <= delta ? d : (d > 0 ? delta : -delta);
      dp[i] += g * T(wi * dd / wsum);
    }
  };
  return node;
}

}  // namespace hopman::nn
