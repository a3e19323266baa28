#include <doctest.h>

#include "hopman/data/datagen.hpp"
#include "hopman/world/world.hpp"

using namespace hopman;
using namespace hopman::data;

namespace {

TaskTuple pick(world::Skill s, world::Category c = world::Category::kBlock) {
  for (const auto& t : world::all_tasks())
    if (t.skill == s && t.instance.category == c) return t;
  throw std::runtime_error("task not found");
}

}  // namespace

TEST_CASE("subsample indices formula") {
  CHECK(subsample_indices(40, 7) == std::vector<int>{0, 7, 13, 20, 26, 33, 39});
  CHECK(subsample_indices(7, 7) == std::vector<int>{0, 1, 2, 3, 4, 5, 6});
  CHECK(subsample_indices(13, 7) == std::vector<int>{0, 2, 4, 6, 8, 10, 12});
  CHECK_THROWS_AS(subsample_indices(5, 7), DataError);
}

TEST_CASE("subsample indices properties") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const int k = rng.uniform_int(2, 12);
    const int l = k + rng.uniform_int(0, 60);
    const auto idx = subsample_indices(l, k);
    CHECK(idx.front() == 0);
    CHECK(idx.back() == l - 1);
    for (size_t i = 1; i < idx.size(); ++i) CHECK(idx[i] > idx[i - 1]);
  }
}

TEST_CASE("passive clip structure and determinism") {
  const auto task = pick(world::Skill::kPickPlace);
  bool ok1 = false, ok2 = false;
  const Clip a = generate_passive_clip(task, 101, 64, &ok1);
  const Clip b = generate_passive_clip(task, 101, 64, &ok2);
  CHECK(ok1);
  CHECK(ok1 == ok2);
  CHECK(a.masks.size() == 7);
  CHECK(a.x0 == b.x0);
  CHECK(a.xg == b.xg);
  for (size_t k = 0; k < 7; ++k) CHECK(a.masks[k] == b.masks[k]);

  // masks[0] corresponds to the same scene as X0: hand pixels of the mask
  // overlap the rendered hand region of X0 (both come from the reset state).
  const world::SceneState st = world::reset(task, 101, world::Embodiment::kHuman);
  CHECK(a.masks[0] == world::render_masks(st, 64));
  CHECK(a.x0 == world::render_rgb(st, 64));
}

TEST_CASE("successful clip's goal frame satisfies check_success") {
  const auto task = pick(world::Skill::kPush, world::Category::kBall);
  bool ok = false;
  const Clip clip = generate_passive_clip(task, 321, 64, &ok);
  REQUIRE(ok);
  // Re-simulate to the final state and confirm the success predicate.
  world::SceneState st = world::reset(task, 321, world::Embodiment::kHuman);
  for (int t = 0; t < 40; ++t)
    st = world::step_human(st, world::scripted_expert_human(task, st));
  CHECK(world::check_success(st, task));
  CHECK(clip.xg == world::render_rgb(st, 64));
}

TEST_CASE("paired demo: same reset on both sides, close final poses") {
  const auto task = pick(world::Skill::kPickPlace, world::Category::kBall);
  std::string reason;
  const auto ex = generate_paired_demo(task, 55, 64, 64, &reason);
  REQUIRE(ex.has_value());
  CHECK(ex->pairing == Pairing::kCollected);
  CHECK(ex->human_clip.seed == ex->robot_traj.seed);
  CHECK(ex->robot_traj.observations.size() == 40);
  CHECK(ex->robot_traj.actions.size() == 40);

  // Identical reset: object (red) mask regions of frame 0 agree because masks
  // exclude the agent.
  const world::SceneState h0 = world::reset(task, 55, world::Embodiment::kHuman);
  const world::SceneState r0 = world::reset(task, 55, world::Embodiment::kRobot);
  const Image mh = world::render_masks(h0, 64);
  const Image mr = world::render_masks(r0, 64);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) {
      const bool red_h = mh.get(x, y) == Rgb{255, 0, 0};
      const bool red_r = mr.get(x, y) == Rgb{255, 0, 0};
      // Agent pixels may cover the object on either side.
      const bool hand_h = mh.get(x, y) == Rgb{0, 255, 0};
      const bool hand_r = mr.get(x, y) == Rgb{0, 255, 0};
      if (!hand_h && !hand_r) CHECK(red_h == red_r);
    }

  // Final object poses within 0.05 (experts share waypoints).
  world::SceneState hs = h0, rs = r0;
  for (int t = 0; t < 40; ++t) {
    hs = world::step_human(hs, world::scripted_expert_human(task, hs));
    rs = world::step(rs, world::scripted_expert(task, rs));
  }
  CHECK((hs.objects[0].pos - rs.objects[0].pos).norm() < 0.05);

  // Determinism.
  const auto ex2 = generate_paired_demo(task, 55, 64, 64, &reason);
  REQUIRE(ex2.has_value());
  CHECK(ex->human_clip.x0 == ex2->human_clip.x0);
  CHECK(ex->robot_traj.observations[17] == ex2->robot_traj.observations[17]);
  CHECK(ex->robot_traj.actions == ex2->robot_traj.actions);
}

TEST_CASE("hallucinated pair: object masks identical, no robot pixels") {
  const auto task = pick(world::Skill::kPush);
  bool ok = false;
  const RobotTrajectory traj = rollout_robot_expert(task, 91, 64, &ok);
  REQUIRE(ok);
  const PairedExample ex = hallucinate_pair(traj, 64);
  CHECK(ex.pairing == Pairing::kHallucinated);
  CHECK(ex.human_clip.source == ClipSource::kHallucinated);
  CHECK(ex.human_clip.masks.size() == 7);

  // Zero robot-link pixels in the hallucinated RGB frames.
  const Rgb links[3] = {{120, 125, 130}, {140, 145, 150}, {160, 165, 170}};
  for (const Image* img : {&ex.human_clip.x0, &ex.human_clip.xg})
    for (int y = 0; y < img->h; ++y)
      for (int x = 0; x < img->w; ++x)
        for (const Rgb& link : links) REQUIRE(!(img->get(x, y) == link));
}

TEST_CASE("hallucinated object mask IoU is exactly 1") {
  const auto task = pick(world::Skill::kPickPlace);
  bool ok = false;
  const RobotTrajectory traj = rollout_robot_expert(task, 17, 64, &ok);
  REQUIRE(ok);
  const Clip clip = hallucinate_clip(traj, 64);
  const auto kept = subsample_indices(40, 7);
  world::SceneState st = world::reset(task, 17, world::Embodiment::kRobot);
  size_t ki = 0;
  for (int t = 0; t < 40; ++t) {
    if (ki < kept.size() && kept[size_t(ki)] == t) {
      // Re-render the object-only mask (agent parked far away) on both sides.
      world::SceneState obj_only = st;
      obj_only.agent.embodiment = world::Embodiment::kHuman;
      obj_only.agent.hand_pos = {5, 5};
      const Image ref = world::render_masks(obj_only, 64);
      // The hallucinated frame covers the object with the hand sprite in
      // places; its red region must be ref's red region minus hand pixels.
      const Image hall = clip.masks[ki];
      i64 inter = 0, uni = 0;
      for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) {
          const bool a = ref.get(x, y) == Rgb{255, 0, 0};
          const bool hand = hall.get(x, y) == Rgb{0, 255, 0};
          const bool b = hall.get(x, y) == Rgb{255, 0, 0} || (a && hand);
          inter += (a && b) ? 1 : 0;
          uni += (a || b) ? 1 : 0;
        }
      REQUIRE(uni > 0);
      CHECK(inter == uni);  // IoU exactly 1.0 behind the hand occlusion
      ++ki;
    }
    st = world::step(st, traj.actions[size_t(t)]);
  }
}

TEST_CASE("hand sprite centroid matches effector kinematics within a pixel") {
  const auto task = pick(world::Skill::kPush, world::Category::kBall);
  bool ok = false;
  const RobotTrajectory traj = rollout_robot_expert(task, 29, 64, &ok);
  REQUIRE(ok);
  const Clip clip = hallucinate_clip(traj, 64);
  const auto kept = subsample_indices(40, 7);
  world::SceneState st = world::reset(task, 29, world::Embodiment::kRobot);
  size_t ki = 0;
  for (int t = 0; t < 40; ++t) {
    if (ki < kept.size() && kept[size_t(ki)] == t) {
      const world::Vec2 ee = world::effector_position(st.agent);
      const Image& m = clip.masks[ki];
      double sx = 0, sy = 0;
      i64 n = 0;
      for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x)
          if (m.get(x, y) == Rgb{0, 255, 0}) {
            sx += x + 0.5;
            sy += y + 0.5;
            ++n;
          }
      if (n > 0) {
        // Occlusion by the object can bias the visible-centroid; only check
        // frames where the full sprite is visible (centroid of GREEN pixels
        // equals the sprite centroid when nothing overlaps it).
        world::SceneState view = st;
        view.agent.embodiment = world::Embodiment::kHuman;
        view.agent.hand_pos = ee;
        view.agent.hand_aperture = st.agent.gripper;
        CHECK(std::fabs(sx / double(n) - ee.x * 64) < 1.0 + 1e-9);
        CHECK(std::fabs(sy / double(n) - (1.0 - ee.y) * 64) < 1.0 + 1e-9);
      }
      ++ki;
    }
    st = world::step(st, traj.actions[size_t(t)]);
  }
}

TEST_CASE("hallucination integrity check rejects tampered trajectories") {
  const auto task = pick(world::Skill::kPush);
  bool ok = false;
  RobotTrajectory traj = rollout_robot_expert(task, 33, 64, &ok);
  REQUIRE(ok);
  traj.seed = 34;  // seed mismatch: not reproducible
  CHECK_THROWS_AS(hallucinate_clip(traj, 64), DataError);
}
