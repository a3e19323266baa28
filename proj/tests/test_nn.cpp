#include <doctest.h>

#include "hopman/nn/adam.hpp"
#include "hopman/nn/gradcheck.hpp"
#include "hopman/nn/serialize.hpp"

using namespace hopman;
using namespace hopman::nn;

namespace {

// Shared scaffold: build analytic grads once, then finite-difference probe.
template <typename BuildLoss>
double check_grads(ParamStore<double>& ps, BuildLoss build, int probes = 60, u64 seed = 5) {
  auto loss_fn = [&]() {
    Tape<double> tape;
    return build(tape)->val.v[0];
  };
  {
    Tape<double> tape;
    auto loss = build(tape);
    ps.zero_grads();
    tape.backward(loss);
  }
  return finite_diff_check(ps, loss_fn, probes, seed).max_rel_err;
}

}  // namespace

TEST_CASE("linear + activations gradcheck") {
  ParamStore<double> ps(1);
  LinearLayer<double> l1(ps, "l1", 6, 8);
  LinearLayer<double> l2(ps, "l2", 8, 3);
  Rng rng(2);
  Tensor<double> x = Tensor<double>::randn({4, 6}, rng);
  Tensor<double> target = Tensor<double>::randn({4, 3}, rng);
  const double err = check_grads(ps, [&](Tape<double>& t) {
    auto h = silu(t, l1.fwd(t, t.leaf(x)));
    auto y = tanh_act(t, l2.fwd(t, h));
    return mse(t, y, target);
  });
  CHECK(err < 1e-5);
}

TEST_CASE("gelu and huber gradcheck") {
  ParamStore<double> ps(3);
  LinearLayer<double> l1(ps, "l1", 5, 7);
  Rng rng(4);
  Tensor<double> x = Tensor<double>::randn({3, 5}, rng);
  Tensor<double> target = Tensor<double>::randn({3, 7}, rng, 2.0);
  std::vector<double> w(21, 1.0);
  w[3] = 0.0;
  w[10] = 0.0;
  const double err = check_grads(ps, [&](Tape<double>& t) {
    auto y = gelu(t, l1.fwd(t, t.leaf(x)));
    return huber_masked(t, y, target, &w, 1.0);
  });
  CHECK(err < 1e-5);
}

TEST_CASE("conv2d gradcheck (stride and padding)") {
  ParamStore<double> ps(7);
  Conv2dLayer<double> c1(ps, "c1", 2, 4, 3, 2, 1);
  Conv2dLayer<double> c2(ps, "c2", 4, 3, 1, 1, 0);
  Rng rng(6);
  Tensor<double> x = Tensor<double>::randn({2, 2, 8, 8}, rng);
  Tensor<double> target = Tensor<double>::randn({2, 3, 4, 4}, rng);
  const double err = check_grads(ps, [&](Tape<double>& t) {
    auto h = silu(t, c1.fwd(t, t.leaf(x)));
    return mse(t, c2.fwd(t, h), target);
  });
  CHECK(err < 1e-5);
}

TEST_CASE("group norm and scale-shift gradcheck") {
  ParamStore<double> ps(9);
  GroupNormLayer<double> gn(ps, "gn", 6, 3);
  auto s = ps.create("s", {2, 6}, 0.1);
  auto sh = ps.create("sh", {2, 6}, 0.1);
  Rng rng(8);
  Tensor<double> x = Tensor<double>::randn({2, 6, 5, 5}, rng);
  Tensor<double> target = Tensor<double>::randn({2, 6, 5, 5}, rng);
  const double err = check_grads(ps, [&](Tape<double>& t) {
    auto h = gn.fwd(t, t.leaf(x));
    h = scale_shift_chw(t, h, s, sh);
    return mse(t, h, target);
  });
  CHECK(err < 1e-5);
}

TEST_CASE("layer norm + softmax + bmm attention-core gradcheck") {
  ParamStore<double> ps(11);
  LayerNormLayer<double> ln(ps, "ln", 8);
  MhaLayer<double> mha(ps, "mha", 8, 2, /*cross=*/false);
  Rng rng(10);
  Tensor<double> x = Tensor<double>::randn({2, 5, 8}, rng);
  Tensor<double> target = Tensor<double>::randn({2, 5, 8}, rng);
  const double err = check_grads(ps, [&](Tape<double>& t) {
    auto h = mha.self_attn(t, ln.fwd(t, t.leaf(x)));
    return mse(t, h, target);
  });
  CHECK(err < 1e-5);
}

TEST_CASE("cross attention + broadcast rows gradcheck") {
  ParamStore<double> ps(13);
  MhaLayer<double> mha(ps, "mha", 8, 2, /*cross=*/true);
  auto queries = ps.create("q", {3, 8}, 0.5);
  Rng rng(12);
  Tensor<double> ctx = Tensor<double>::randn({2, 6, 8}, rng);
  Tensor<double> target = Tensor<double>::randn({2, 3, 8}, rng);
  const double err = check_grads(ps, [&](Tape<double>& t) {
    auto q = broadcast_rows(t, queries, 2);
    auto h = mha.cross_attn(t, q, t.leaf(ctx));
    return mse(t, h, target);
  });
  CHECK(err < 1e-5);
}

TEST_CASE("upsample, pooling, concat, token ops gradcheck") {
  ParamStore<double> ps(15);
  Conv2dLayer<double> c(ps, "c", 3, 3, 3, 1, 1);
  auto pos = ps.create("pos", {4, 6}, 0.2);
  auto pad = ps.create("pad", {6}, 0.2);
  LinearLayer<double> lt(ps, "lt", 3, 6);
  Rng rng(14);
  Tensor<double> x = Tensor<double>::randn({2, 3, 4, 4}, rng);
  Tensor<double> x2 = Tensor<double>::randn({2, 3, 8, 8}, rng);
  Tensor<double> tokens_in = Tensor<double>::randn({2, 4, 3}, rng);
  Tensor<double> target = Tensor<double>::randn({2, 4, 6}, rng);
  auto flags = std::make_shared<std::vector<float>>(8, 0.f);
  (*flags)[1] = 1.f;
  (*flags)[6] = 1.f;
  const double err = check_grads(ps, [&](Tape<double>& t) {
    auto up = upsample2x(t, c.fwd(t, t.leaf(x)));        // [2,3,8,8]
    auto cat = concat_ch(t, up, t.leaf(x2));             // [2,6,8,8]
    auto pooled = global_avg_pool(t, cat);               // [2,6]
    auto toks = lt.fwd(t, t.leaf(tokens_in));            // [2,4,6]
    toks = add_bias_tokens(t, toks, pos);
    toks = add_flag_embed(t, toks, flags, pad);
    auto pooled_tokens = stack_tokens(t, {pooled, pooled, pooled, pooled});  // [2,4,6]
    auto both = add_scaled(t, toks, pooled_tokens, 1.0, 0.5);
    return mse(t, both, target);
  });
  CHECK(err < 1e-5);
}

TEST_CASE("adam reduces a quadratic") {
  ParamStore<float> ps(1);
  auto w = ps.create("w", {16}, 1.0);
  Adam<float> adam(ps, 0.05);
  double first = 0, last = 0;
  for (int step = 0; step < 200; ++step) {
    Tape<float> tape;
    auto loss = mse(tape, w, Tensor<float>::zeros({16}));
    if (step == 0) first = loss->val.v[0];
    last = loss->val.v[0];
    ps.zero_grads();
    tape.backward(loss);
    adam.step();
  }
  CHECK(last < 0.01 * first);
}

TEST_CASE("checkpoint round trip preserves parameters and metadata") {
  ParamStore<float> ps(21);
  ps.create("a.w", {4, 3}, 0.7);
  ps.create("b", {5}, 0.7);
  nlohmann::json meta;
  meta["model"] = "test";
  meta["split_checksum"] = 12345;
  const std::string path = "/tmp/hopman_test_ckpt.ckpt";
  save_checkpoint(path, ps, meta);

  ParamStore<float> ps2(99);
  ps2.create("a.w", {4, 3}, 0.1);
  ps2.create("b", {5}, 0.1);
  const auto loaded = load_checkpoint(path, ps2);
  CHECK(loaded.at("model") == "test");
  CHECK(loaded.at("split_checksum") == 12345);
  CHECK(ps2.get("a.w")->val.v == ps.get("a.w")->val.v);
  CHECK(ps2.get("b")->val.v == ps.get("b")->val.v);

  ParamStore<float> wrong(1);
  wrong.create("a.w", {3, 4}, 0.1);
  wrong.create("b", {5}, 0.1);
  CHECK_THROWS_AS(load_checkpoint(path, wrong), DataError);
}

TEST_CASE("rng determinism and normal moments") {
  Rng a(123), b(123);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng c(7);
  double mean = 0, var = 0;
  const int n = 50000;
  std::vector<double> xs(n);
  for (auto& x : xs) x = c.normal();
  for (double x : xs) mean += x;
  mean /= n;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= n;
  CHECK(std::fabs(mean) < 0.02);
  CHECK(var == doctest::Approx(1.0).epsilon(0.03));
}
