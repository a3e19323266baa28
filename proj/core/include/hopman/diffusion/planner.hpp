#pragma once

#include <functional>
#include <optional>

#include "hopman/diffusion/unet.hpp"
#include "hopman/image.hpp"
#include "hopman/tensorize.hpp"
#include "hopman/train_curve.hpp"

namespace hopman::diffusion {

// Forward corruption: sqrt(abar_t) * M + sqrt(1 - abar_t) * eps.
template <typename T>
nn::Tensor<T> q_sample(const nn::Tensor<T>& M, int t, const nn::Tensor<T>& eps,
                       const NoiseSchedule& sched) {
  if (!M.same_shape(eps)) throw NumericError("q_sample: shape mismatch");
  if (t < 1 || t > sched.T) throw NumericError("q_sample: step out of range");
  const double ab = sched.alpha_bar_at(t);
  const double a = std::sqrt(ab), b = std::sqrt(1.0 - ab);
  nn::Tensor<T> out(M.shape);
  for (i64 i = 0; i < M.numel(); ++i)
    out.v[size_t(i)] = T(a * double(M.v[size_t(i)]) + b * double(eps.v[size_t(i)]));
  return out;
}

// Batched variant with a per-sample step.
template <typename T>
nn::Tensor<T> q_sample_batch(const nn::Tensor<T>& M, const std::vector<int>& ts,
                             const nn::Tensor<T>& eps, const NoiseSchedule& sched) {
  if (!M.same_shape(eps)) throw NumericError("q_sample: shape mismatch");
  const int B = M.dim(0);
  if (int(ts.size()) != B) throw NumericError("q_sample: step count mismatch");
  const i64 per = M.numel() / B;
  nn::Tensor<T> out(M.shape);
  for (int n = 0; n < B; ++n) {
    const double ab = sched.alpha_bar_at(ts[size_t(n)]);
    const double a = std::sqrt(ab), b = std::sqrt(1.0 - ab);
    const T* m = M.data() + i64(n) * per;
    const T* e = eps.data() + i64(n) * per;
    T* o = out.data() + i64(n) * per;
    for (i64 i = 0; i < per; ++i) o[i] = T(a * double(m[i]) + b * double(e[i]));
  }
  return out;
}

// One example, already scaled to [-1,1] at the model resolution.
template <typename T>
struct PlannerExample {
  nn::Tensor<T> cond;   // [cond_channels, R, R]
  nn::Tensor<T> masks;  // [3K, R, R]
};

template <typename T>
struct PlannerBatch {
  nn::Tensor<T> cond;   // [B, cond_channels, R, R]
  nn::Tensor<T> masks;  // [B, 3K, R, R]
};

// Denoising objective: per example draw t ~ U[1,T] and eps ~ N(0,I) from the
// seed, corrupt the masks and regress the noise.
template <typename T>
nn::Var<T> planner_loss(nn::Tape<T>& tape, UNet<T>& model, const PlannerBatch<T>& batch,
                        const NoiseSchedule& sched, u64 noise_seed, Rng* drop_rng = nullptr) {
  const int B = batch.masks.dim(0);
  Rng rng(noise_seed);
  std::vector<int> ts(size_t(B));
  for (auto& t : ts) t = rng.uniform_int(1, sched.T);
  nn::Tensor<T> eps(batch.masks.shape);
  rng.fill_normal(eps.data(), eps.numel());
  nn::Tensor<T> noisy = q_sample_batch(batch.masks, ts, eps, sched);
  auto pred = model.forward(tape, batch.cond, tape.leaf(std::move(noisy)), ts, drop_rng);
  return nn::mse(tape, pred, eps);
}

// Ancestral sampling step: x <- (x - beta_t/sqrt(1-abar_t) * eps_hat)/sqrt(alpha_t)
// + sigma_t * z, sigma_t = sqrt(beta_t); z = 0 at t = 1. The running sample is
// clamped to [-3,3] for numerical safety.
template <typename T>
void reverse_step(nn::Tensor<T>& x, const nn::Tensor<T>& eps_hat, int t, const NoiseSchedule& sched,
                  const nn::Tensor<T>* z) {
  const double beta = sched.beta_at(t);
  const double inv_sqrt_alpha = 1.0 / std::sqrt(sched.alpha_at(t));
  const double coef = beta / std::sqrt(1.0 - sched.alpha_bar_at(t));
  const double sigma = std::sqrt(beta);
  for (i64 i = 0; i < x.numel(); ++i) {
    double v = inv_sqrt_alpha * (double(x.v[size_t(i)]) - coef * double(eps_hat.v[size_t(i)]));
    if (z) v += sigma * double(z->v[size_t(i)]);
    x.v[size_t(i)] = T(std::clamp(v, -3.0, 3.0));
  }
}

// Per-pixel nearest anchor color; the mask space is categorical.
std::vector<Image> decode_mask_stack(const nn::Tensor<float>& stack, int k_frames);

// Reverse diffusion from (X0[, Xg]) to K decoded mask frames.
std::vector<Image> sample_plan(UNet<float>& model, const Image& x0, const Image* xg,
                               const NoiseSchedule& sched, u64 seed);

struct PlannerTrainOptions {
  int batch_size = 32;
  double lr = 1e-4;
  int max_steps = 100000;
  u64 seed = 0;
  double ema_decay = 0.999;
  int smooth_window = 500;
  std::string checkpoint_path;  // empty = no checkpointing
  int checkpoint_every = 2000;
  nlohmann::json checkpoint_meta;
  std::optional<double> stop_below_loss;  // early stop for overfit runs
  std::function<void(int, double)> progress;
};

// Seeded shuffling, Adam, EMA shadow for sampling, divergence abort
// (loss > 10x the initial average for 1000 consecutive steps).
TrainCurve train_planner(UNet<float>& model, const std::vector<PlannerExample<float>>& data,
                         const NoiseSchedule& sched, const PlannerTrainOptions& opts);

}  // namespace hopman::diffusion
