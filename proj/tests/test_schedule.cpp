#include <doctest.h>

#include "hopman/diffusion/planner.hpp"

using namespace hopman;
using namespace hopman::diffusion;

TEST_CASE("schedule hand case T=3") {
  // beta = (0.1, 0.2, 0.3) -> abar = (0.9, 0.72, 0.504)
  const auto s = make_schedule(3, 0.1, 0.3);
  CHECK(s.beta_at(1) == doctest::Approx(0.1));
  CHECK(s.beta_at(2) == doctest::Approx(0.2));
  CHECK(s.beta_at(3) == doctest::Approx(0.3));
  CHECK(s.alpha_bar_at(1) == doctest::Approx(0.9));
  CHECK(s.alpha_bar_at(2) == doctest::Approx(0.72));
  CHECK(s.alpha_bar_at(3) == doctest::Approx(0.504));
}

TEST_CASE("default schedule midpoint and tail") {
  const auto s = make_schedule(1000, 1e-4, 0.02);
  CHECK(s.beta_at(500) == doctest::Approx(1e-4 + 499.0 / 999.0 * 0.0199).epsilon(1e-9));
  // Independent oracle: recompute the product in long double.
  long double prod = 1.0L;
  for (int t = 1; t <= 1000; ++t) {
    const long double b = 1e-4L + (long double)(t - 1) / 999.0L * (0.02L - 1e-4L);
    prod *= 1.0L - b;
  }
  CHECK(s.alpha_bar_at(1000) == doctest::Approx(double(prod)).epsilon(1e-10));
  CHECK(s.alpha_bar_at(1000) < 0.01);
  // Frozen regression constant from the oracle above.
  CHECK(s.alpha_bar_at(1000) == doctest::Approx(4.03553e-05).epsilon(1e-4));
}

TEST_CASE("schedule monotonicity properties") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const int T = rng.uniform_int(1, 200);
    const double b0 = rng.uniform(1e-5, 0.01);
    const double b1 = b0 + rng.uniform(0.0, 0.1);
    const auto s = make_schedule(T, b0, b1);
    for (int t = 1; t <= T; ++t) {
      CHECK(s.alpha_bar_at(t) > 0.0);
      CHECK(s.alpha_bar_at(t) < 1.0);
      if (t > 1) {
        CHECK(s.beta_at(t) >= s.beta_at(t - 1));
        CHECK(s.alpha_bar_at(t) < s.alpha_bar_at(t - 1));
      }
    }
  }
}

TEST_CASE("schedule parameter validation") {
  CHECK_THROWS_AS(make_schedule(0, 1e-4, 0.02), ConfigError);
  CHECK_THROWS_AS(make_schedule(10, 0.0, 0.02), ConfigError);
  CHECK_THROWS_AS(make_schedule(10, 0.03, 0.02), ConfigError);
  CHECK_THROWS_AS(make_schedule(10, 0.5, 1.0), ConfigError);
}

TEST_CASE("q_sample endpoints and formula") {
  const auto s = make_schedule(1000, 1e-4, 0.02);
  nn::Tensor<double> m({2, 3, 4, 4});
  nn::Tensor<double> eps({2, 3, 4, 4});
  Rng rng(3);
  rng.fill_normal(m.data(), m.numel());
  rng.fill_normal(eps.data(), eps.numel());

  // abar ~= 1 at t=1: output ~= M.
  const auto near_m = q_sample(m, 1, eps, s);
  for (i64 i = 0; i < m.numel(); ++i)
    CHECK(near_m.v[size_t(i)] ==
          doctest::Approx(std::sqrt(s.alpha_bar_at(1)) * m.v[size_t(i)] +
                          std::sqrt(1 - s.alpha_bar_at(1)) * eps.v[size_t(i)]));

  // Hand value: M=0.6, abar=0.25, eps=-1 -> -0.56603.
  nn::Tensor<double> m6 = nn::Tensor<double>::full({4}, 0.6);
  nn::Tensor<double> e1 = nn::Tensor<double>::full({4}, -1.0);
  NoiseSchedule fake;
  fake.T = 1;
  fake.beta = {0.0};
  fake.alpha = {1.0};
  fake.alpha_bar = {0.25};
  const auto out = q_sample(m6, 1, e1, fake);
  CHECK(out.v[0] == doctest::Approx(-0.5660254).epsilon(1e-6));

  // Degenerate endpoints via synthetic schedules.
  fake.alpha_bar = {1.0};
  const auto ident = q_sample(m, 1, eps, fake.T == 1 ? fake : fake);
  for (i64 i = 0; i < m.numel(); ++i) CHECK(ident.v[size_t(i)] == doctest::Approx(m.v[size_t(i)]));
  fake.alpha_bar = {0.0};
  const auto pure = q_sample(m, 1, eps, fake);
  for (i64 i = 0; i < m.numel(); ++i) CHECK(pure.v[size_t(i)] == doctest::Approx(eps.v[size_t(i)]));
}

TEST_CASE("q_sample affinity (superposition)") {
  const auto s = make_schedule(100, 1e-4, 0.02);
  Rng rng(11);
  nn::Tensor<double> m1({3, 8, 8}), m2({3, 8, 8}), e1({3, 8, 8}), e2({3, 8, 8});
  rng.fill_normal(m1.data(), m1.numel());
  rng.fill_normal(m2.data(), m2.numel());
  rng.fill_normal(e1.data(), e1.numel());
  rng.fill_normal(e2.data(), e2.numel());
  const int t = 37;
  nn::Tensor<double> m_sum({3, 8, 8}), e_sum({3, 8, 8});
  for (i64 i = 0; i < m1.numel(); ++i) {
    m_sum.v[size_t(i)] = 0.3 * m1.v[size_t(i)] + 0.7 * m2.v[size_t(i)];
    e_sum.v[size_t(i)] = 0.3 * e1.v[size_t(i)] + 0.7 * e2.v[size_t(i)];
  }
  const auto lhs = q_sample(m_sum, t, e_sum, s);
  const auto a = q_sample(m1, t, e1, s);
  const auto b = q_sample(m2, t, e2, s);
  for (i64 i = 0; i < lhs.numel(); ++i)
    CHECK(lhs.v[size_t(i)] ==
          doctest::Approx(0.3 * a.v[size_t(i)] + 0.7 * b.v[size_t(i)]).epsilon(1e-12));
}

TEST_CASE("q_sample shape and range validation") {
  const auto s = make_schedule(10, 1e-4, 0.02);
  nn::Tensor<double> m({2, 2});
  nn::Tensor<double> eps({2, 3});
  CHECK_THROWS_AS(q_sample(m, 1, eps, s), NumericError);
  nn::Tensor<double> e2({2, 2});
  CHECK_THROWS_AS(q_sample(m, 0, e2, s), NumericError);
  CHECK_THROWS_AS(q_sample(m, 11, e2, s), NumericError);
}

TEST_CASE("forward marginal is standard normal at t=T") {
  const auto s = make_schedule(1000, 1e-4, 0.02);
  const i64 n = 100000;
  nn::Tensor<double> m({int(n)});
  for (i64 i = 0; i < n; ++i) m.v[size_t(i)] = std::sin(double(i) * 0.01);  // fixed signal
  nn::Tensor<double> eps({int(n)});
  Rng rng(1234);
  rng.fill_normal(eps.data(), n);
  const auto out = q_sample(m, 1000, eps, s);
  double mean = 0;
  for (double v : out.v) mean += v;
  mean /= double(n);
  double var = 0;
  for (double v : out.v) var += (v - mean) * (v - mean);
  var /= double(n);
  CHECK(std::fabs(mean) <= 0.02);
  CHECK(var == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("zero predictor loss is the noise second moment") {
  // || eps - 0 ||^2 averaged over 1e5 draws ~= 1 within 2%.
  Rng rng(99);
  const i64 n = 100000;
  double acc = 0;
  for (i64 i = 0; i < n; ++i) {
    const double e = rng.normal();
    acc += e * e;
  }
  CHECK(acc / double(n) == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("reverse step formula with zero prediction") {
  const auto s = make_schedule(100, 1e-4, 0.02);
  nn::Tensor<double> x({8});
  Rng rng(5);
  rng.fill_normal(x.data(), x.numel());
  const nn::Tensor<double> x0 = x;
  nn::Tensor<double> eps_hat = nn::Tensor<double>::zeros({8});
  const int t = 60;
  reverse_step(x, eps_hat, t, s, nullptr);
  for (i64 i = 0; i < x.numel(); ++i)
    CHECK(x.v[size_t(i)] == doctest::Approx(x0.v[size_t(i)] / std::sqrt(s.alpha_at(t))));
}

TEST_CASE("mask decode snaps to anchor colors only") {
  nn::Tensor<float> stack({21, 4, 4});
  Rng rng(8);
  rng.fill_normal(stack.data(), stack.numel(), 0.8);
  const auto frames = decode_mask_stack(stack, 7);
  CHECK(frames.size() == 7);
  for (const auto& f : frames)
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 4; ++x) {
        const auto c = f.get(x, y);
        const bool ok =
            (c == Rgb{0, 255, 0}) || (c == Rgb{255, 0, 0}) || (c == Rgb{0, 0, 0});
        REQUIRE(ok);
      }
}
