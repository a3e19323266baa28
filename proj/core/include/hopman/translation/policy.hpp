#pragma once

#include <deque>
#include <functional>
#include <optional>

#include <json.hpp>

#include "hopman/image.hpp"
#include "hopman/nn/adam.hpp"
#include "hopman/tensorize.hpp"
#include "hopman/train_curve.hpp"
#include "hopman/world/types.hpp"

namespace hopman::translation {

struct PolicyConfig {
  int obs_resolution = 96;  // desk-fast profile uses 64
  int history = 3;          // current plus the past two observations
  int chunk = 10;           // H
  int hidden = 128;
  int encoder_blocks = 4;
  int decoder_blocks = 7;
  int heads = 4;
  double dropout = 0.1;
  int action_dim = 4;
  int k_frames = 7;
  bool plan_tokens = true;        // false = BC baseline (no plan conditioning)
  double goal_token_dropout = 0.5;  // training-time goal blanking, keeps the plan live

  int past_actions() const { return history - 1; }
  int n_tokens() const {
    return history + 1 + (plan_tokens ? k_frames : 0) + past_actions();
  }
  void validate() const {
    if (history < 1) throw ConfigError("policy: history must be >= 1");
    if (chunk < 1) throw ConfigError("policy: chunk must be >= 1");
    if (hidden < 8 || hidden % heads != 0)
      throw ConfigError("policy: hidden must be a positive multiple of heads");
    if (obs_resolution % 16 != 0) throw ConfigError("policy: obs_resolution must be 16-divisible");
  }
};

// Inputs for one policy query, already scaled to [-1,1].
// Token order: obs_0..obs_{h-1} (oldest first), goal, plan_0..plan_{K-1},
// act_0..act_{h-2}. pad_flags mark repeated/missing entries at episode start;
// goal_null replaces the goal token with a learned null embedding.
template <typename T>
struct PolicyBatch {
  nn::Tensor<T> obs;           // [B, history, 3, R, R]
  nn::Tensor<T> goal;          // [B, 3, R, R]
  nn::Tensor<T> plans;         // [B, K, 3, R, R] (ignored when !plan_tokens)
  nn::Tensor<T> past_actions;  // [B, history-1, A]
  std::vector<float> pad_flags;  // [B * n_tokens]
  std::vector<float> goal_null;  // [B], 1 = blank the goal token
  nn::Tensor<T> target;          // [B, H, A] (training only)
  std::vector<T> target_mask;    // [B * H * A] weights, 0 past episode end
};

namespace detail {

// Small residual conv encoder: one image -> one token.
template <typename T>
struct ImageEncoder {
  nn::Conv2dLayer<T> stem;
  nn::GroupNormLayer<T> stem_gn;
  struct Block {
    nn::Conv2dLayer<T> c1, c2, sk;
    nn::GroupNormLayer<T> n1, n2;
  };
  std::vector<Block> blocks;
  nn::LinearLayer<T> proj;

  ImageEncoder() = default;
  ImageEncoder(nn::ParamStore<T>& ps, const std::string& name, int hidden) {
    static const int widths[4] = {16, 24, 48, 96};
    stem = nn::Conv2dLayer<T>(ps, name + ".stem", 3, widths[0], 3, 2, 1);
    stem_gn = nn::GroupNormLayer<T>(ps, name + ".stem_gn", widths[0]);
    for (int i = 0; i < 3; ++i) {
      Block b;
      const std::string bn = name + ".b" + std::to_string(i);
      b.c1 = nn::Conv2dLayer<T>(ps, bn + ".c1", widths[i], widths[i + 1], 3, 2, 1);
      b.n1 = nn::GroupNormLayer<T>(ps, bn + ".n1", widths[i + 1]);
      b.c2 = nn::Conv2dLayer<T>(ps, bn + ".c2", widths[i + 1], widths[i + 1], 3, 1, 1);
      b.n2 = nn::GroupNormLayer<T>(ps, bn + ".n2", widths[i + 1]);
      b.sk = nn::Conv2dLayer<T>(ps, bn + ".sk", widths[i], widths[i + 1], 1, 2, 0);
      blocks.push_back(std::move(b));
    }
    proj = nn::LinearLayer<T>(ps, name + ".proj", widths[3], hidden);
  }

  // x: [N, 3, R, R] -> [N, hidden]
  nn::Var<T> fwd(nn::Tape<T>& t, nn::Var<T> x) const {
    auto h = nn::silu(t, stem_gn.fwd(t, stem.fwd(t, x)));
    for (const auto& b : blocks) {
      auto m = nn::silu(t, b.n1.fwd(t, b.c1.fwd(t, h)));
      m = b.n2.fwd(t, b.c2.fwd(t, m));
      h = nn::silu(t, nn::add(t, m, b.sk.fwd(t, h)));
    }
    return proj.fwd(t, nn::global_avg_pool(t, h));
  }
};

template <typename T>
struct EncoderBlock {
  nn::LayerNormLayer<T> ln1, ln2;
  nn::MhaLayer<T> mha;
  nn::MlpLayer<T> mlp;

  EncoderBlock() = default;
  EncoderBlock(nn::ParamStore<T>& ps, const std::string& name, int dim, int heads) {
    ln1 = nn::LayerNormLayer<T>(ps, name + ".ln1", dim);
    mha = nn::MhaLayer<T>(ps, name + ".mha", dim, heads, false);
    ln2 = nn::LayerNormLayer<T>(ps, name + ".ln2", dim);
    mlp = nn::MlpLayer<T>(ps, name + ".mlp", dim, 4 * dim);
  }

  nn::Var<T> fwd(nn::Tape<T>& t, nn::Var<T> x, double drop, Rng* rng) const {
    auto a = mha.self_attn(t, ln1.fwd(t, x));
    if (rng) a = nn::dropout(t, a, drop, *rng, t.training);
    x = nn::add(t, x, a);
    auto m = mlp.fwd(t, ln2.fwd(t, x));
    if (rng) m = nn::dropout(t, m, drop, *rng, t.training);
    return nn::add(t, x, m);
  }
};

template <typename T>
struct DecoderBlock {
  nn::LayerNormLayer<T> lnq, ln2;
  nn::MhaLayer<T> mha;
  nn::MlpLayer<T> mlp;

  DecoderBlock() = default;
  DecoderBlock(nn::ParamStore<T>& ps, const std::string& name, int dim, int heads) {
    lnq = nn::LayerNormLayer<T>(ps, name + ".lnq", dim);
    mha = nn::MhaLayer<T>(ps, name + ".mha", dim, heads, true);
    ln2 = nn::LayerNormLayer<T>(ps, name + ".ln2", dim);
    mlp = nn::MlpLayer<T>(ps, name + ".mlp", dim, 4 * dim);
  }

  nn::Var<T> fwd(nn::Tape<T>& t, nn::Var<T> q, nn::Var<T> ctx, double drop, Rng* rng) const {
    auto a = mha.cross_attn(t, lnq.fwd(t, q), ctx);
    if (rng) a = nn::dropout(t, a, drop, *rng, t.training);
    q = nn::add(t, q, a);
    auto m = mlp.fwd(t, ln2.fwd(t, q));
    if (rng) m = nn::dropout(t, m, drop, *rng, t.training);
    return nn::add(t, q, m);
  }
};

}  // namespace detail

// Plan-conditioned action-chunk policy: residual conv encoders tokenize the
// observations, the goal image and the (upsampled) plan frames; a transformer
// encoder followed by cross-attention decoder blocks over H learned queries
// emits an H-step action chunk squashed by tanh.
template <typename T>
class PolicyNet {
 public:
  PolicyConfig cfg;

  PolicyNet(const PolicyConfig& config, u64 param_seed) : cfg(config), ps_(param_seed) {
    cfg.validate();
    enc_rgb_ = detail::ImageEncoder<T>(ps_, "enc_rgb", cfg.hidden);
    if (cfg.plan_tokens) enc_plan_ = detail::ImageEncoder<T>(ps_, "enc_plan", cfg.hidden);
    act_embed_ = nn::LinearLayer<T>(ps_, "act_embed", cfg.action_dim, cfg.hidden);
    pos_embed_ = ps_.create("pos_embed", {cfg.n_tokens(), cfg.hidden}, 0.02);
    pad_embed_ = ps_.create("pad_embed", {cfg.hidden}, 0.02);
    null_goal_ = ps_.create("null_goal", {cfg.hidden}, 0.02);
    queries_ = ps_.create("queries", {cfg.chunk, cfg.hidden}, 0.02);
    for (int i = 0; i < cfg.encoder_blocks; ++i)
      enc_blocks_.emplace_back(ps_, "enc." + std::to_string(i), cfg.hidden, cfg.heads);
    for (int i = 0; i < cfg.decoder_blocks; ++i)
      dec_blocks_.emplace_back(ps_, "dec." + std::to_string(i), cfg.hidden, cfg.heads);
    ln_ctx_ = nn::LayerNormLayer<T>(ps_, "ln_ctx", cfg.hidden);
    ln_out_ = nn::LayerNormLayer<T>(ps_, "ln_out", cfg.hidden);
    head_ = nn::LinearLayer<T>(ps_, "head", cfg.hidden, cfg.action_dim);
  }

  nn::ParamStore<T>& params() { return ps_; }
  const nn::ParamStore<T>& params() const { return ps_; }

  // Token sequence [B, n_tokens, hidden] from one batch of windows + plans.
  nn::Var<T> encode_inputs(nn::Tape<T>& tape, const PolicyBatch<T>& batch) {
    const int B = batch.obs.dim(0);
    const int R = cfg.obs_resolution;
    if (batch.obs.dim(1) != cfg.history || batch.obs.dim(3) != R)
      throw NumericError("policy: observation window shape mismatch");
    if (int(batch.pad_flags.size()) != B * cfg.n_tokens())
      throw NumericError("policy: pad flag count mismatch");

    std::vector<nn::Var<T>> tokens;
    // Observation and goal tokens through the shared RGB encoder.
    {
      nn::Tensor<T> imgs({B * (cfg.history + 1), 3, R, R});
      const i64 per = i64(3) * R * R;
      for (int b = 0; b < B; ++b) {
        std::copy_n(batch.obs.data() + i64(b) * cfg.history * per, cfg.history * per,
                    imgs.data() + i64(b) * (cfg.history + 1) * per);
        std::copy_n(batch.goal.data() + i64(b) * per, per,
                    imgs.data() + (i64(b) * (cfg.history + 1) + cfg.history) * per);
      }
      auto feats = enc_rgb_.fwd(tape, tape.leaf(std::move(imgs)));  // [B*(h+1), D]
      auto grid = nn::reshape(tape, feats, {B, cfg.history + 1, cfg.hidden});
      for (int s = 0; s < cfg.history + 1; ++s) tokens.push_back(slot_select(tape, grid, s));
    }
    // Plan tokens through the separate mask encoder.
    if (cfg.plan_tokens) {
      auto flat = tape.leaf(batch.plans.reshaped({B * cfg.k_frames, 3, R, R}));
      auto feats = enc_plan_.fwd(tape, flat);
      auto grid = nn::reshape(tape, feats, {B, cfg.k_frames, cfg.hidden});
      for (int k = 0; k < cfg.k_frames; ++k) tokens.push_back(slot_select(tape, grid, k));
    }
    // Past executed actions through an affine map.
    {
      auto grid = act_embed_.fwd(tape, tape.leaf(batch.past_actions));  // [B, h-1, D]
      for (int a = 0; a < cfg.past_actions(); ++a) tokens.push_back(slot_select(tape, grid, a));
    }

    auto x = nn::stack_tokens(tape, tokens);  // [B, N, D]
    // Learned null embedding replaces the goal token when flagged.
    if (!batch.goal_null.empty()) {
      auto flags = std::make_shared<std::vector<float>>(size_t(B) * cfg.n_tokens(), 0.f);
      auto keep = std::make_shared<std::vector<float>>();  // goal token scale mask
      bool any = false;
      for (int b = 0; b < B; ++b)
        if (batch.goal_null[size_t(b)] > 0.5f) any = true;
      if (any) {
        nn::Tensor<T> scale_mask({B, cfg.n_tokens(), cfg.hidden});
        std::fill(scale_mask.v.begin(), scale_mask.v.end(), T(1));
        for (int b = 0; b < B; ++b)
          if (batch.goal_null[size_t(b)] > 0.5f) {
            (*flags)[size_t(b * cfg.n_tokens() + cfg.history)] = 1.f;
            T* row = scale_mask.data() + (i64(b) * cfg.n_tokens() + cfg.history) * cfg.hidden;
            std::fill_n(row, cfg.hidden, T(0));
          }
        x = nn::mul(tape, x, tape.leaf(std::move(scale_mask)));
        x = nn::add_flag_embed(tape, x, flags, null_goal_);
      }
    }
    x = nn::add_bias_tokens(tape, x, pos_embed_);
    auto pads = std::make_shared<std::vector<float>>(batch.pad_flags);
    x = nn::add_flag_embed(tape, x, pads, pad_embed_);
    return x;
  }

  // Full forward pass: [B, H, action_dim] in [-1, 1].
  nn::Var<T> forward(nn::Tape<T>& tape, const PolicyBatch<T>& batch, Rng* drop_rng = nullptr) {
    auto tokens = encode_inputs(tape, batch);
    return forward_from_tokens(tape, tokens, drop_rng);
  }

  nn::Var<T> forward_from_tokens(nn::Tape<T>& tape, nn::Var<T> tokens, Rng* drop_rng = nullptr) {
    const int B = tokens->val.dim(0);
    auto x = tokens;
    for (const auto& blk : enc_blocks_) x = blk.fwd(tape, x, cfg.dropout, drop_rng);
    auto ctx = ln_ctx_.fwd(tape, x);

    // H learned queries broadcast over the batch.
    auto q = nn::broadcast_rows(tape, queries_, B);
    for (const auto& blk : dec_blocks_) q = blk.fwd(tape, q, ctx, cfg.dropout, drop_rng);
    return nn::tanh_act(tape, head_.fwd(tape, ln_out_.fwd(tape, q)));
  }

 private:
  // [B, S, D] -> token s as [B, D]
  nn::Var<T> slot_select(nn::Tape<T>& tape, nn::Var<T> grid, int s) {
    const int B = grid->val.dim(0), S = grid->val.dim(1), D = grid->val.dim(2);
    nn::Tensor<T> out({B, D});
    for (int b = 0; b < B; ++b)
      std::copy_n(grid->val.data() + (i64(b) * S + s) * D, D, out.data() + i64(b) * D);
    if (!grid->requires_grad) return tape.leaf(std::move(out));
    auto node = tape.record(std::move(out), true, nullptr);
    node->back = [node, grid, B, S, D, s] {
      T* d = grid->ensure_grad().data();
      for (int b = 0; b < B; ++b) {
        const T* g = node->grad.data() + i64(b) * D;
        for (int j = 0; j < D; ++j) d[(i64(b) * S + s) * D + j] += g[j];
      }
    };
    return node;
  }

  nn::ParamStore<T> ps_;
  detail::ImageEncoder<T> enc_rgb_, enc_plan_;
  nn::LinearLayer<T> act_embed_, head_;
  nn::Var<T> pos_embed_, pad_embed_, null_goal_, queries_;
  std::vector<detail::EncoderBlock<T>> enc_blocks_;
  std::vector<detail::DecoderBlock<T>> dec_blocks_;
  nn::LayerNormLayer<T> ln_ctx_, ln_out_;
};

// Mean smooth-L1 over chunk entries; weights zero out targets past episode end.
template <typename T>
nn::Var<T> chunk_loss(nn::Tape<T>& tape, nn::Var<T> pred, const nn::Tensor<T>& target,
                      const std::vector<T>* weights) {
  return nn::huber_masked(tape, pred, target, weights, 1.0);
}

double chunk_loss_value(const nn::Tensor<double>& pred, const nn::Tensor<double>& target,
                        const std::vector<double>* weights);

// Raw materials for one policy query. Images may come at any resolution; the
// builder resizes (bilinear) to the policy's observation resolution.
struct RawWindow {
  std::vector<const Image*> obs;            // available history, oldest -> current
  std::vector<world::Action> past_actions;  // executed actions, oldest -> newest
  const Image* goal = nullptr;
  std::vector<const Image*> plan;  // K mask frames (empty for the BC baseline)
};

PolicyBatch<float> make_policy_batch(const PolicyConfig& cfg, int batch);
void fill_policy_slot(const PolicyConfig& cfg, const RawWindow& w, PolicyBatch<float>& batch,
                      int slot, bool goal_null);

// One in-memory training trajectory (observations at the policy resolution).
struct PolicyTrajectory {
  std::vector<Image> obs;
  std::vector<world::Action> actions;
  Image goal;               // embodiment-appropriate goal image
  std::vector<Image> plan;  // paired mask frames; empty for BC
};

struct PolicyTrainOptions {
  int batch_size = 32;
  double lr = 1e-4;
  int max_steps = 30000;
  u64 seed = 0;
  int smooth_window = 200;
  std::string checkpoint_path;
  int checkpoint_every = 2000;
  nlohmann::json checkpoint_meta;
  std::optional<double> stop_below_loss;
  std::function<void(int, double)> progress;
};

TrainCurve train_policy(PolicyNet<float>& net, const std::vector<PolicyTrajectory>& corpus,
                        const PolicyTrainOptions& opts);

// Single inference query (no dropout); returns the H x action_dim chunk.
nn::Tensor<float> predict_chunk(PolicyNet<float>& net, const RawWindow& window);

}  // namespace hopman::translation
