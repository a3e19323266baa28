#include <benchmark/benchmark.h>

#include "hopman/data/datagen.hpp"
#include "hopman/diffusion/planner.hpp"
#include "hopman/translation/policy.hpp"
#include "hopman/world/world.hpp"

namespace {

using namespace hopman;

world::TaskTuple pick_task() {
  for (const auto& t : world::all_tasks())
    if (t.skill == world::Skill::kPickPlace) return t;
  throw std::runtime_error("no task");
}

void BM_WorldStep(benchmark::State& state) {
  const auto task = pick_task();
  world::SceneState st = world::reset(task, 1);
  const world::Action a = world::scripted_expert(task, st);
  for (auto _ : state) {
    benchmark::DoNotOptimize(st = world::step(st, a));
  }
}
BENCHMARK(BM_WorldStep);

void BM_RenderRgb(benchmark::State& state) {
  const auto task = pick_task();
  const world::SceneState st = world::reset(task, 1);
  const int res = int(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(world::render_rgb(st, res));
  }
}
BENCHMARK(BM_RenderRgb)->Arg(32)->Arg(64)->Arg(96);

void BM_RenderMasks(benchmark::State& state) {
  const auto task = pick_task();
  const world::SceneState st = world::reset(task, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(world::render_masks(st, 64));
  }
}
BENCHMARK(BM_RenderMasks);

void BM_ExpertRollout(benchmark::State& state) {
  const auto task = pick_task();
  for (auto _ : state) {
    world::SceneState st = world::reset(task, 2);
    for (int t = 0; t < 40; ++t) st = world::step(st, world::scripted_expert(task, st));
    benchmark::DoNotOptimize(st);
  }
}
BENCHMARK(BM_ExpertRollout);

void BM_UnetForward(benchmark::State& state) {
  diffusion::PlannerConfig cfg;
  cfg.resolution = 32;
  cfg.base_channels = int(state.range(0));
  cfg.T = 100;
  diffusion::UNet<float> model(cfg, 1);
  nn::Tensor<float> cond({1, cfg.cond_channels(), 32, 32});
  nn::Tensor<float> noisy({1, cfg.out_channels(), 32, 32});
  Rng rng(3);
  rng.fill_normal(cond.data(), cond.numel());
  rng.fill_normal(noisy.data(), noisy.numel());
  for (auto _ : state) {
    nn::Tape<float> tape;
    benchmark::DoNotOptimize(model.forward(tape, cond, tape.leaf(noisy), {50}));
  }
}
BENCHMARK(BM_UnetForward)->Arg(16)->Arg(32);

void BM_PolicyForward(benchmark::State& state) {
  translation::PolicyConfig cfg;
  cfg.obs_resolution = 64;
  translation::PolicyNet<float> net(cfg, 1);
  auto batch = translation::make_policy_batch(cfg, 1);
  Rng rng(3);
  rng.fill_normal(batch.obs.data(), batch.obs.numel(), 0.3);
  rng.fill_normal(batch.goal.data(), batch.goal.numel(), 0.3);
  rng.fill_normal(batch.plans.data(), batch.plans.numel(), 0.3);
  for (auto _ : state) {
    nn::Tape<float> tape;
    benchmark::DoNotOptimize(net.forward(tape, batch));
  }
}
BENCHMARK(BM_PolicyForward);

void BM_QSample(benchmark::State& state) {
  const auto sched = diffusion::make_schedule(1000, 1e-4, 0.02);
  nn::Tensor<float> m({21, 64, 64});
  nn::Tensor<float> eps({21, 64, 64});
  Rng rng(5);
  rng.fill_normal(m.data(), m.numel());
  rng.fill_normal(eps.data(), eps.numel());
  for (auto _ : state) {
    benchmark::DoNotOptimize(diffusion::q_sample(m, 500, eps, sched));
  }
}
BENCHMARK(BM_QSample);

}  // namespace

BENCHMARK_MAIN();
