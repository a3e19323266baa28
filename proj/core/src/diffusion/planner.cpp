#include "hopman/diffusion/planner.hpp"

#include <fstream>

#include "hopman/nn/serialize.hpp"

namespace hopman::diffusion {

std::vector<Image> decode_mask_stack(const nn::Tensor<float>& stack, int k_frames) {
  const int C = stack.dim(0);
  if (C != 3 * k_frames) throw NumericError("decode_mask_stack: channel mismatch");
  const int H = stack.dim(1), W = stack.dim(2);
  const i64 hw = i64(H) * W;
  // Anchors in scaled space: green, red, black.
  static const double anchors[3][3] = {{-1, 1, -1}, {1, -1, -1}, {-1, -1, -1}};
  static const Rgb colors[3] = {{0, 255, 0}, {255, 0, 0}, {0, 0, 0}};
  std::vector<Image> out;
  for (int k = 0; k < k_frames; ++k) {
    Image img(W, H);
    const float* r = stack.data() + (i64(3 * k) + 0) * hw;
    const float* g = stack.data() + (i64(3 * k) + 1) * hw;
    const float* b = stack.data() + (i64(3 * k) + 2) * hw;
    for (i64 i = 0; i < hw; ++i) {
      int best = 0;
      double best_d = 1e30;
      for (int a = 0; a < 3; ++a) {
        const double dr = double(r[i]) - anchors[a][0];
        const double dg = double(g[i]) - anchors[a][1];
        const double db = double(b[i]) - anchors[a][2];
        const double d = dr * dr + dg * dg + db * db;
        if (d < best_d) {
          best_d = d;
          best = a;
        }
      }
      img.px[size_t(3 * i)] = colors[best].r;
      img.px[size_t(3 * i + 1)] = colors[best].g;
      img.px[size_t(3 * i + 2)] = colors[best].b;
    }
    out.push_back(std::move(img));
  }
  return out;
}

std::vector<Image> sample_plan(UNet<float>& model, const Image& x0, const Image* xg,
                               const NoiseSchedule& sched, u64 seed) {
  const PlannerConfig& cfg = model.cfg;
  if (x0.w != cfg.resolution || x0.h != cfg.resolution)
    throw ConfigError("sample_plan: conditioning image resolution mismatch");
  if (cfg.goal_conditioned && !xg)
    throw ConfigError("sample_plan: goal-conditioned model needs a goal image");
  if (model.params().any_nonfinite())
    throw NumericError("sample_plan: model parameters contain non-finite values");

  nn::Tensor<float> cond({1, cfg.cond_channels(), cfg.resolution, cfg.resolution});
  copy_image_scaled(x0, cond.data());
  if (cfg.goal_conditioned)
    copy_image_scaled(*xg, cond.data() + i64(3) * cfg.resolution * cfg.resolution);

  Rng rng(seed);
  nn::Tensor<float> x({1, cfg.out_channels(), cfg.resolution, cfg.resolution});
  rng.fill_normal(x.data(), x.numel());

  for (int t = sched.T; t >= 1; --t) {
    nn::Tape<float> tape;
    auto eps_hat = model.forward(tape, cond, tape.leaf(x), {t});
    if (nn::has_nonfinite(eps_hat->val))
      throw NumericError("sample_plan: non-finite prediction at step " + std::to_string(t) +
                         " (untrained or diverged model?)");
    if (t > 1) {
      nn::Tensor<float> z(x.shape);
      rng.fill_normal(z.data(), z.numel());
      reverse_step(x, eps_hat->val, t, sched, &z);
    } else {
      reverse_step(x, eps_hat->val, t, sched, nullptr);
    }
  }
  for (auto& v : x.v) v = std::clamp(v, -1.0f, 1.0f);
  return decode_mask_stack(x.reshaped({cfg.out_channels(), cfg.resolution, cfg.resolution}),
                           cfg.k_frames);
}

TrainCurve train_planner(UNet<float>& model, const std::vector<PlannerExample<float>>& data,
                         const NoiseSchedule& sched, const PlannerTrainOptions& opts) {
  if (data.empty()) throw ConfigError("train_planner: empty dataset");
  const PlannerConfig& cfg = model.cfg;
  const int B = std::min<int>(opts.batch_size, int(data.size()));

  nn::Adam<float> adam(model.params(), opts.lr);
  nn::Ema<float> ema(model.params(), opts.ema_decay);
  Rng order_rng(hash_mix(opts.seed, 0x9d1));
  Rng drop_rng(hash_mix(opts.seed, 0x7c3));

  std::vector<int> order(data.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = int(i);
  size_t cursor = order.size();  // triggers reshuffle on first use

  TrainCurve curve;
  std::vector<double> window;
  double smooth_sum = 0;
  double initial_loss = -1;
  int diverged_streak = 0;

  PlannerBatch<float> batch;
  batch.cond = nn::Tensor<float>({B, cfg.cond_channels(), cfg.resolution, cfg.resolution});
  batch.masks = nn::Tensor<float>({B, cfg.out_channels(), cfg.resolution, cfg.resolution});
  const i64 cond_n = batch.cond.numel() / B;
  const i64 mask_n = batch.masks.numel() / B;

  for (int step = 1; step <= opts.max_steps; ++step) {
    for (int j = 0; j < B; ++j) {
      if (cursor >= order.size()) {
        for (size_t i = order.size(); i > 1; --i)
          std::swap(order[i - 1], order[size_t(order_rng.next_u64() % i)]);
        cursor = 0;
      }
      const auto& ex = data[size_t(order[cursor++])];
      std::copy_n(ex.cond.data(), cond_n, batch.cond.data() + i64(j) * cond_n);
      std::copy_n(ex.masks.data(), mask_n, batch.masks.data() + i64(j) * mask_n);
    }

    nn::Tape<float> tape;
    tape.training = true;
    auto loss = planner_loss(tape, model, batch, sched, hash_mix(opts.seed, u64(step)), &drop_rng);
    const double loss_v = double(loss->val.v[0]);
    model.params().zero_grads();
    tape.backward(loss);
    adam.step();
    ema.update(model.params());

    window.push_back(loss_v);
    smooth_sum += loss_v;
    if (int(window.size()) > opts.smooth_window) {
      smooth_sum -= window[window.size() - size_t(opts.smooth_window) - 1];
    }
    const double smoothed =
        smooth_sum / double(std::min<int>(opts.smooth_window, int(window.size())));
    curve.points.push_back({step, loss_v, smoothed});

    if (initial_loss < 0 && step == 1) initial_loss = loss_v;
    if (loss_v > 10.0 * initial_loss) {
      if (++diverged_streak >= 1000)
        throw NumericError("train_planner: diverged (loss " + std::to_string(loss_v) + " > 10x " +
                           std::to_string(initial_loss) + " for 1000 consecutive steps)");
    } else {
      diverged_streak = 0;
    }

    if (opts.progress) opts.progress(step, loss_v);
    if (!opts.checkpoint_path.empty() && opts.checkpoint_every > 0 &&
        (step % opts.checkpoint_every == 0 || step == opts.max_steps)) {
      auto shadow = model;  // snapshot with EMA weights
      ema.copy_to(shadow.params());
      nn::save_checkpoint(opts.checkpoint_path, shadow.params(), opts.checkpoint_meta);
    }
    if (opts.stop_below_loss && curve.points.back().smoothed < *opts.stop_below_loss &&
        int(window.size()) >= std::min(opts.smooth_window, 200)) {
      break;
    }
  }
  ema.copy_to(model.params());
  if (!opts.checkpoint_path.empty())
    nn::save_checkpoint(opts.checkpoint_path, model.params(), opts.checkpoint_meta);
  return curve;
}

}  // namespace hopman::diffusion
