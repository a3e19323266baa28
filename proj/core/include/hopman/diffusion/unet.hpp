#pragma once

#include <vector>

#include "hopman/diffusion/schedule.hpp"
#include "hopman/nn/adam.hpp"

namespace hopman::diffusion {

struct PlannerConfig {
  int resolution = 64;  // desk-fast profile uses 32
  int k_frames = 7;
  int base_channels = 64;
  std::vector<int> channel_mults{1, 2, 4};
  int res_blocks = 2;
  bool attention_lowest = true;
  int time_embed_dim = 256;
  double dropout = 0.1;
  bool goal_conditioned = true;
  int T = 1000;
  double beta_start = 1e-4, beta_end = 0.02;

  int cond_channels() const { return 3 * (1 + (goal_conditioned ? 1 : 0)); }
  int in_channels() const { return cond_channels() + 3 * k_frames; }
  int out_channels() const { return 3 * k_frames; }

  void validate() const {
    if (k_frames < 1) throw ConfigError("planner: k_frames must be >= 1");
    if (base_channels < 4) throw ConfigError("planner: base_channels too small");
    if (channel_mults.empty()) throw ConfigError("planner: channel_mults empty");
    if (res_blocks < 1) throw ConfigError("planner: res_blocks must be >= 1");
    int r = resolution;
    for (size_t i = 0; i + 1 < channel_mults.size(); ++i) {
      if (r % 2 != 0) throw ConfigError("planner: resolution not divisible across stages");
      r /= 2;
    }
    if (r < 4) throw ConfigError("planner: lowest stage resolution below 4");
  }
};

namespace detail {

// GroupNorm -> SiLU -> conv, with adaptive group-norm conditioning on the
// noise-level embedding before the second conv (scale and shift per channel).
template <typename T>
struct ResBlock {
  nn::GroupNormLayer<T> gn1;
  int gn2_groups = 8;
  nn::Conv2dLayer<T> conv1, conv2, skip;
  nn::LinearLayer<T> emb;
  bool has_skip = false;

  ResBlock() = default;
  ResBlock(nn::ParamStore<T>& ps, const std::string& name, int cin, int cout, int temb_dim) {
    gn1 = nn::GroupNormLayer<T>(ps, name + ".gn1", cin);
    conv1 = nn::Conv2dLayer<T>(ps, name + ".conv1", cin, cout, 3, 1, 1);
    emb = nn::LinearLayer<T>(ps, name + ".emb", temb_dim, 2 * cout);
    gn2_groups = std::min(8, cout);
    while (cout % gn2_groups != 0) --gn2_groups;
    conv2 = nn::Conv2dLayer<T>(ps, name + ".conv2", cout, cout, 3, 1, 1, /*zero_init=*/true);
    if (cin != cout) {
      skip = nn::Conv2dLayer<T>(ps, name + ".skip", cin, cout, 1, 1, 0);
      has_skip = true;
    }
  }

  nn::Var<T> fwd(nn::Tape<T>& t, nn::Var<T> x, nn::Var<T> temb_act, double drop_p, Rng* rng) const {
    auto h = conv1.fwd(t, nn::silu(t, gn1.fwd(t, x)));
    auto st = emb.fwd(t, temb_act);  // [B, 2*cout]
    auto parts = nn::split_lastdim(t, st, 2);
    auto hn = nn::group_norm<T>(t, h, gn2_groups, nullptr, nullptr);
    h = nn::scale_shift_chw(t, hn, parts[0], parts[1]);
    h = nn::silu(t, h);
    if (rng) h = nn::dropout(t, h, drop_p, *rng, t.training);
    h = conv2.fwd(t, h);
    return nn::add(t, h, has_skip ? skip.fwd(t, x) : x);
  }
};

template <typename T>
struct AttnBlock2d {
  nn::GroupNormLayer<T> gn;
  nn::MhaLayer<T> mha;

  AttnBlock2d() = default;
  AttnBlock2d(nn::ParamStore<T>& ps, const std::string& name, int channels, int heads) {
    gn = nn::GroupNormLayer<T>(ps, name + ".gn", channels);
    mha = nn::MhaLayer<T>(ps, name + ".mha", channels, heads, /*cross=*/false,
                          /*zero_proj=*/true);
  }

  nn::Var<T> fwd(nn::Tape<T>& t, nn::Var<T> x) const {
    const int B = x->val.dim(0), C = x->val.dim(1), H = x->val.dim(2), W = x->val.dim(3);
    auto tokens = nn::permute021(t, nn::reshape(t, gn.fwd(t, x), {B, C, H * W}));
    auto y = mha.self_attn(t, tokens);
    auto y4 = nn::reshape(t, nn::permute021(t, y), {B, C, H, W});
    return nn::add(t, x, y4);
  }
};

}  // namespace detail

// Time-conditioned U-Net noise predictor over the mask stack, conditioned by
// channel concatenation of [X0, (Xg), noisy masks].
template <typename T>
class UNet {
 public:
  PlannerConfig cfg;

  UNet(const PlannerConfig& config, u64 param_seed) : cfg(config), ps_(param_seed) {
    cfg.validate();
    const int base = cfg.base_channels;
    const int ted = cfg.time_embed_dim;
    const int stages = int(cfg.channel_mults.size());
    t_fc1_ = nn::LinearLayer<T>(ps_, "time.fc1", base, ted);
    t_fc2_ = nn::LinearLayer<T>(ps_, "time.fc2", ted, ted);
    conv_in_ = nn::Conv2dLayer<T>(ps_, "in.conv", cfg.in_channels(), base, 3, 1, 1);

    int ch = base;
    std::vector<int> skip_ch{ch};
    for (int i = 0; i < stages; ++i) {
      const int out = base * cfg.channel_mults[size_t(i)];
      for (int j = 0; j < cfg.res_blocks; ++j) {
        enc_.emplace_back(ps_, "enc." + std::to_string(i) + "." + std::to_string(j), ch, out, ted);
        enc_attn_.push_back(stage_attn(i));
        if (stage_attn(i))
          enc_attn_blocks_.emplace_back(
              ps_, "enc." + std::to_string(i) + "." + std::to_string(j) + ".attn", out, 4);
        ch = out;
        skip_ch.push_back(ch);
      }
      if (i + 1 < stages) {
        downs_.emplace_back(ps_, "down." + std::to_string(i), ch, ch, 3, 2, 1);
        skip_ch.push_back(ch);
      }
    }
    mid1_ = detail::ResBlock<T>(ps_, "mid.block1", ch, ch, ted);
    mid_attn_ = detail::AttnBlock2d<T>(ps_, "mid.attn", ch, 4);
    mid2_ = detail::ResBlock<T>(ps_, "mid.block2", ch, ch, ted);

    for (int i = stages - 1; i >= 0; --i) {
      const int out = base * cfg.channel_mults[size_t(i)];
      for (int j = 0; j <= cfg.res_blocks; ++j) {
        const int sc = skip_ch.back();
        skip_ch.pop_back();
        dec_.emplace_back(ps_, "dec." + std::to_string(i) + "." + std::to_string(j), ch + sc, out,
                          ted);
        dec_attn_.push_back(stage_attn(i));
        if (stage_attn(i))
          dec_attn_blocks_.emplace_back(
              ps_, "dec." + std::to_string(i) + "." + std::to_string(j) + ".attn", out, 4);
        ch = out;
      }
      if (i > 0) ups_.emplace_back(ps_, "up." + std::to_string(i), ch, ch, 3, 1, 1);
    }
    out_gn_ = nn::GroupNormLayer<T>(ps_, "out.gn", ch);
    out_conv_ = nn::Conv2dLayer<T>(ps_, "out.conv", ch, cfg.out_channels(), 3, 1, 1,
                                   /*zero_init=*/true);
  }

  nn::ParamStore<T>& params() { return ps_; }
  const nn::ParamStore<T>& params() const { return ps_; }

  // Sinusoidal embedding of the noise level p = t/T.
  nn::Tensor<T> time_embedding(const std::vector<int>& ts) const {
    const int base = cfg.base_channels;
    const int half = base / 2;
    nn::Tensor<T> e({int(ts.size()), base});
    for (size_t b = 0; b < ts.size(); ++b) {
      const double p = double(ts[b]) / double(cfg.T);
      for (int i = 0; i < half; ++i) {
        const double f =
            half > 1 ? std::exp(std::log(10000.0) * double(i) / double(half - 1)) : 1.0;
        e.v[b * size_t(base) + size_t(i)] = T(std::sin(p * f));
        e.v[b * size_t(base) + size_t(half + i)] = T(std::cos(p * f));
      }
    }
    return e;
  }

  // cond: [B, cond_channels, R, R]; noisy: [B, 3K, R, R]; ts: per-sample step.
  nn::Var<T> forward(nn::Tape<T>& tape, const nn::Tensor<T>& cond, nn::Var<T> noisy,
                     const std::vector<int>& ts, Rng* drop_rng = nullptr) {
    const int B = noisy->val.dim(0);
    if (cond.dim(0) != B || cond.dim(1) != cfg.cond_channels())
      throw NumericError("unet: conditioning shape mismatch");
    if (noisy->val.dim(1) != cfg.out_channels() || noisy->val.dim(2) != cfg.resolution ||
        noisy->val.dim(3) != cfg.resolution)
      throw NumericError("unet: mask stack does not match the configured resolution");

    auto temb =
        t_fc2_.fwd(tape, nn::silu(tape, t_fc1_.fwd(tape, tape.leaf(time_embedding(ts)))));
    auto temb_act = nn::silu(tape, temb);

    auto x = nn::concat_ch(tape, tape.leaf(cond), noisy);
    auto h = conv_in_.fwd(tape, x);
    std::vector<nn::Var<T>> skips{h};

    const int stages = int(cfg.channel_mults.size());
    size_t eb = 0, ea = 0, dn = 0;
    for (int i = 0; i < stages; ++i) {
      for (int j = 0; j < cfg.res_blocks; ++j, ++eb) {
        h = enc_[eb].fwd(tape, h, temb_act, cfg.dropout, drop_rng);
        if (enc_attn_[eb]) h = enc_attn_blocks_[ea++].fwd(tape, h);
        skips.push_back(h);
      }
      if (i + 1 < stages) {
        h = downs_[dn++].fwd(tape, h);
        skips.push_back(h);
      }
    }

    h = mid1_.fwd(tape, h, temb_act, cfg.dropout, drop_rng);
    h = mid_attn_.fwd(tape, h);
    h = mid2_.fwd(tape, h, temb_act, cfg.dropout, drop_rng);

    size_t db = 0, da = 0, up = 0;
    for (int i = stages - 1; i >= 0; --i) {
      for (int j = 0; j <= cfg.res_blocks; ++j, ++db) {
        auto skip = skips.back();
        skips.pop_back();
        h = dec_[db].fwd(tape, nn::concat_ch(tape, h, skip), temb_act, cfg.dropout, drop_rng);
        if (dec_attn_[db]) h = dec_attn_blocks_[da++].fwd(tape, h);
      }
      if (i > 0) h = ups_[up++].fwd(tape, nn::upsample2x(tape, h));
    }
    return out_conv_.fwd(tape, nn::silu(tape, out_gn_.fwd(tape, h)));
  }

 private:
  bool stage_attn(int i) const {
    return cfg.attention_lowest && i == int(cfg.channel_mults.size()) - 1;
  }

  nn::ParamStore<T> ps_;
  nn::LinearLayer<T> t_fc1_, t_fc2_;
  nn::Conv2dLayer<T> conv_in_;
  std::vector<detail::ResBlock<T>> enc_, dec_;
  std::vector<bool> enc_attn_, dec_attn_;
  std::vector<detail::AttnBlock2d<T>> enc_attn_blocks_, dec_attn_blocks_;
  std::vector<nn::Conv2dLayer<T>> downs_, ups_;
  detail::ResBlock<T> mid1_, mid2_;
  detail::AttnBlock2d<T> mid_attn_;
  nn::GroupNormLayer<T> out_gn_;
  nn::Conv2dLayer<T> out_conv_;
};

}  // namespace hopman::diffusion
