#include "hopman/translation/policy.hpp"

#include <cmath>

#include "hopman/nn/serialize.hpp"

namespace hopman::translation {

double chunk_loss_value(const nn::Tensor<double>& pred, const nn::Tensor<double>& target,
                        const std::vector<double>* weights) {
  nn::Tape<double> tape;
  auto p = tape.leaf(pred);
  return chunk_loss(tape, p, target, weights)->val.v[0];
}

PolicyBatch<float> make_policy_batch(const PolicyConfig& cfg, int batch) {
  const int R = cfg.obs_resolution;
  PolicyBatch<float> b;
  b.obs = nn::Tensor<float>({batch, cfg.history, 3, R, R});
  b.goal = nn::Tensor<float>({batch, 3, R, R});
  b.plans = nn::Tensor<float>({batch, cfg.plan_tokens ? cfg.k_frames : 1, 3, R, R});
  b.past_actions = nn::Tensor<float>({batch, cfg.past_actions(), cfg.action_dim});
  b.pad_flags.assign(size_t(batch) * cfg.n_tokens(), 0.f);
  b.goal_null.assign(size_t(batch), 0.f);
  b.target = nn::Tensor<float>({batch, cfg.chunk, cfg.action_dim});
  b.target_mask.assign(size_t(batch) * cfg.chunk * cfg.action_dim, 1.f);
  return b;
}

namespace {

void copy_image_at_res(const Image& img, int res, float* dst) {
  if (img.w == res && img.h == res) {
    copy_image_scaled(img, dst);
  } else {
    copy_image_scaled(resize_bilinear(img, res, res), dst);
  }
}

}  // namespace

void fill_policy_slot(const PolicyConfig& cfg, const RawWindow& w, PolicyBatch<float>& batch,
                      int slot, bool goal_null) {
  const int R = cfg.obs_resolution;
  const i64 per = i64(3) * R * R;
  const int h = cfg.history;
  float* pads = batch.pad_flags.data() + size_t(slot) * cfg.n_tokens();
  std::fill_n(pads, cfg.n_tokens(), 0.f);

  // Observations, oldest first, padded by repeating the oldest available.
  const int m = int(w.obs.size());
  if (m < 1 || m > h) throw DataError("policy window: need 1..history observations");
  for (int s = 0; s < h; ++s) {
    const int src = std::max(0, m - 1 - (h - 1 - s));
    copy_image_at_res(*w.obs[size_t(src)], R,
                      batch.obs.data() + (i64(slot) * h + s) * per);
    if (s < h - m) pads[s] = 1.f;
  }

  if (!w.goal) throw DataError("policy window: missing goal image");
  copy_image_at_res(*w.goal, R, batch.goal.data() + i64(slot) * per);

  if (cfg.plan_tokens) {
    if (int(w.plan.size()) != cfg.k_frames)
      throw DataError("policy window: expected " + std::to_string(cfg.k_frames) +
                      " plan frames, got " + std::to_string(w.plan.size()));
    for (int k = 0; k < cfg.k_frames; ++k)
      copy_image_at_res(*w.plan[size_t(k)], R,
                        batch.plans.data() + (i64(slot) * cfg.k_frames + k) * per);
  }

  // Executed past actions, padded by repeating the oldest (zeros when none).
  const int p = int(w.past_actions.size());
  if (p > cfg.past_actions()) throw DataError("policy window: too many past actions");
  for (int a = 0; a < cfg.past_actions(); ++a) {
    float* dst =
        batch.past_actions.data() + (i64(slot) * cfg.past_actions() + a) * cfg.action_dim;
    const int miss = cfg.past_actions() - p;
    const int tok = h + 1 + (cfg.plan_tokens ? cfg.k_frames : 0) + a;
    if (a < miss) {
      if (p > 0) {
        for (int j = 0; j < cfg.action_dim && j < 4; ++j)
          dst[j] = w.past_actions.front().v[size_t(j)];
      } else {
        std::fill_n(dst, cfg.action_dim, 0.f);
      }
      pads[tok] = 1.f;
    } else {
      for (int j = 0; j < cfg.action_dim && j < 4; ++j)
        dst[j] = w.past_actions[size_t(a - miss)].v[size_t(j)];
    }
  }
  batch.goal_null[size_t(slot)] = goal_null ? 1.f : 0.f;
}

TrainCurve train_policy(PolicyNet<float>& net, const std::vector<PolicyTrajectory>& corpus,
                        const PolicyTrainOptions& opts) {
  if (corpus.empty()) throw ConfigError("train_policy: empty corpus");
  const PolicyConfig& cfg = net.cfg;
  for (const auto& tr : corpus) {
    if (tr.obs.empty() || tr.obs.size() != tr.actions.size())
      throw DataError("train_policy: trajectory length mismatch");
    if (cfg.plan_tokens && int(tr.plan.size()) != cfg.k_frames)
      throw DataError("train_policy: plan frames missing from paired trajectory");
  }

  std::vector<std::pair<int, int>> samples;  // (traj, t)
  for (size_t i = 0; i < corpus.size(); ++i)
    for (size_t t = 0; t < corpus[i].obs.size(); ++t) samples.emplace_back(int(i), int(t));

  const int B = std::min<int>(opts.batch_size, int(samples.size()));
  nn::Adam<float> adam(net.params(), opts.lr);
  Rng order_rng(hash_mix(opts.seed, 0x51));
  Rng drop_rng(hash_mix(opts.seed, 0x52));
  Rng goal_rng(hash_mix(opts.seed, 0x53));
  size_t cursor = samples.size();

  PolicyBatch<float> batch = make_policy_batch(cfg, B);
  TrainCurve curve;
  std::vector<double> window;
  double smooth_sum = 0;

  for (int step = 1; step <= opts.max_steps; ++step) {
    for (int j = 0; j < B; ++j) {
      if (cursor >= samples.size()) {
        for (size_t i = samples.size(); i > 1; --i)
          std::swap(samples[i - 1], samples[size_t(order_rng.next_u64() % i)]);
        cursor = 0;
      }
      const auto [ti, t] = samples[cursor++];
      const PolicyTrajectory& tr = corpus[size_t(ti)];
      const int L = int(tr.obs.size());

      RawWindow w;
      for (int s = std::max(0, t - (cfg.history - 1)); s <= t; ++s)
        w.obs.push_back(&tr.obs[size_t(s)]);
      for (int s = std::max(0, t - cfg.past_actions()); s < t; ++s)
        w.past_actions.push_back(tr.actions[size_t(s)]);
      w.goal = &tr.goal;
      if (cfg.plan_tokens)
        for (const auto& f : tr.plan) w.plan.push_back(&f);
      const bool gnull =
          cfg.plan_tokens && cfg.goal_token_dropout > 0 && goal_rng.uniform() < cfg.goal_token_dropout;
      fill_policy_slot(cfg, w, batch, j, gnull);

      for (int i = 0; i < cfg.chunk; ++i) {
        float* dst = batch.target.data() + (i64(j) * cfg.chunk + i) * cfg.action_dim;
        float* msk = batch.target_mask.data() + (i64(j) * cfg.chunk + i) * cfg.action_dim;
        if (t + i < L) {
          for (int d = 0; d < cfg.action_dim && d < 4; ++d)
            dst[d] = tr.actions[size_t(t + i)].v[size_t(d)];
          std::fill_n(msk, cfg.action_dim, 1.f);
        } else {
          std::fill_n(dst, cfg.action_dim, 0.f);
          std::fill_n(msk, cfg.action_dim, 0.f);
        }
      }
    }

    nn::Tape<float> tape;
    tape.training = true;
    auto pred = net.forward(tape, batch, &drop_rng);
    auto loss = chunk_loss(tape, pred, batch.target, &batch.target_mask);
    const double loss_v = double(loss->val.v[0]);
    net.params().zero_grads();
    tape.backward(loss);
    adam.step();

    window.push_back(loss_v);
    smooth_sum += loss_v;
    if (int(window.size()) > opts.smooth_window)
      smooth_sum -= window[window.size() - size_t(opts.smooth_window) - 1];
    const double smoothed =
        smooth_sum / double(std::min<int>(opts.smooth_window, int(window.size())));
    curve.points.push_back({step, loss_v, smoothed});

    if (opts.progress) opts.progress(step, loss_v);
    if (!opts.checkpoint_path.empty() && opts.checkpoint_every > 0 &&
        (step % opts.checkpoint_every == 0 || step == opts.max_steps))
      nn::save_checkpoint(opts.checkpoint_path, net.params(), opts.checkpoint_meta);
    if (opts.stop_below_loss && smoothed < *opts.stop_below_loss &&
        int(window.size()) >= std::min(opts.smooth_window, 100))
      break;
  }
  if (!opts.checkpoint_path.empty())
    nn::save_checkpoint(opts.checkpoint_path, net.params(), opts.checkpoint_meta);
  return curve;
}

nn::Tensor<float> predict_chunk(PolicyNet<float>& net, const RawWindow& window) {
  PolicyBatch<float> batch = make_policy_batch(net.cfg, 1);
  fill_policy_slot(net.cfg, window, batch, 0, /*goal_null=*/false);
  nn::Tape<float> tape;
  tape.training = false;
  auto out = net.forward(tape, batch);
  if (nn::has_nonfinite(out->val)) throw NumericError("policy_forward: non-finite activations");
  return out->val.reshaped({net.cfg.chunk, net.cfg.action_dim});
}

}  // namespace hopman::translation
