#include <doctest.h>

#include <set>

#include "hopman/world/geometry.hpp"
#include "hopman/world/world.hpp"

using namespace hopman;
using namespace hopman::world;

namespace {

TaskTuple find_task(Category c, Skill s, int instance = 0) {
  for (const auto& t : all_tasks())
    if (t.instance.category == c && t.skill == s &&
        t.instance.instance_id == std::string(to_string(c)) + std::to_string(instance))
      return t;
  throw std::runtime_error("task not found");
}

}  // namespace

TEST_CASE("forward kinematics straight chain") {
  const auto p = forward_kinematics({0, 0, 0}, {0.3, 0.25, 0.2});
  CHECK(p.pos.x == doctest::Approx(0.5 + 0.75));
  CHECK(p.pos.y == doctest::Approx(0.0));
  CHECK(p.phi == doctest::Approx(0.0));
}

TEST_CASE("forward kinematics rotations") {
  const auto up = forward_kinematics({M_PI / 2, 0, 0}, {0.3, 0.25, 0.2});
  CHECK(up.pos.x == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(up.pos.y == doctest::Approx(0.75));
  CHECK(up.phi == doctest::Approx(M_PI / 2));

  const auto bent = forward_kinematics({M_PI / 2, -M_PI / 2, 0}, {0.3, 0.25, 0.2});
  CHECK(bent.pos.x == doctest::Approx(0.5 + 0.45));
  CHECK(bent.pos.y == doctest::Approx(0.30));
  CHECK(bent.phi == doctest::Approx(0.0));
}

TEST_CASE("ik reaches targets in the placement band") {
  Rng rng(42);
  std::array<double, 3> q{1.8, -1.2, -0.4};
  for (int i = 0; i < 50; ++i) {
    const Vec2 target{rng.uniform(0.18, 0.82), rng.uniform(0.15, 0.62)};
    q = solve_ik(q, target, 60, 0.03);
    CHECK((forward_kinematics(q).pos - target).norm() < 2e-3);
  }
}

TEST_CASE("reset is deterministic") {
  const auto task = find_task(Category::kBlock, Skill::kPush);
  const SceneState a = reset(task, 7);
  const SceneState b = reset(task, 7);
  CHECK(a == b);
  const SceneState c = reset(task, 8);
  CHECK(!(a == c));
}

TEST_CASE("drawer open task starts closed") {
  const auto task = find_task(Category::kDrawer, Skill::kOpen);
  for (u64 seed : {1ull, 5ull, 99ull}) {
    const SceneState st = reset(task, seed);
    CHECK(st.objects[0].articulation == doctest::Approx(0.0));
  }
}

TEST_CASE("stack reset places two non-overlapping blocks") {
  const auto task = find_task(Category::kBlock, Skill::kStack);
  const SceneState st = reset(task, 3);
  REQUIRE(st.base_object == 1);
  const auto& a = st.objects[0];
  const auto& b = st.objects[1];
  // Same overlap predicate as placement: center distance vs half-size sum.
  const double min_dist = a.instance.scale() / 2 + b.instance.scale() / 2;
  CHECK((a.pos - b.pos).norm() > min_dist);
}

TEST_CASE("placement avoids distractor color collisions and stays reachable") {
  for (u64 seed = 0; seed < 30; ++seed) {
    const auto task = find_task(Category::kBall, Skill::kPickPlace, 1);
    const SceneState st = reset(task, seed);
    for (size_t i = 2; i < st.objects.size(); ++i)
      CHECK(!(st.objects[i].instance.color == task.instance.color));
    for (const auto& obj : st.objects)
      CHECK((obj.pos - kRobotBase).norm() <= 0.78);
  }
}

TEST_CASE("step fixed point: holding the current state") {
  const auto task = find_task(Category::kBlock, Skill::kPush);
  const SceneState st = reset(task, 11);
  Action a;
  for (int i = 0; i < 3; ++i) a.v[size_t(i)] = float(st.agent.joints[size_t(i)] / kJointLimit);
  a.v[3] = float(st.agent.gripper);
  const SceneState next = step(st, a);
  SceneState expect = st;
  expect.time_index += 1;
  CHECK(next == expect);
}

TEST_CASE("out-of-range actions are clipped and recorded") {
  const auto task = find_task(Category::kBlock, Skill::kPush);
  const SceneState st = reset(task, 2);
  Action a;
  a.v = {1.7f, -2.0f, 0.0f, 0.5f};
  StepInfo info;
  const SceneState next = step(st, a, &info);
  CHECK(info.action_clipped);
  for (double j : next.agent.joints) CHECK(std::fabs(j) <= kJointLimit + 1e-12);
}

TEST_CASE("grasp engages within radius and carried object follows rigidly") {
  const auto task = find_task(Category::kBlock, Skill::kPickPlace);
  SceneState st = reset(task, 4);
  // Teleport-free approach: drive the arm with the expert until grasped.
  bool grasped = false;
  for (int t = 0; t < 40 && !grasped; ++t) {
    st = step(st, scripted_expert(task, st));
    grasped = st.objects[0].grasped;
  }
  REQUIRE(grasped);
  const Vec2 offset = st.objects[0].pos - effector_position(st.agent);
  for (int t = 0; t < 6; ++t) {
    st = step(st, scripted_expert(task, st));
    if (!st.objects[0].grasped) break;
    const Vec2 now = st.objects[0].pos - effector_position(st.agent);
    CHECK((now - offset).norm() < 1e-9);
  }
}

TEST_CASE("bounded motion: joints and objects") {
  const auto task = find_task(Category::kBlock, Skill::kPickPlace);
  SceneState st = reset(task, 9);
  for (int t = 0; t < 40; ++t) {
    const SceneState prev = st;
    st = step(st, scripted_expert(task, st));
    for (int i = 0; i < 3; ++i)
      CHECK(std::fabs(st.agent.joints[size_t(i)] - prev.agent.joints[size_t(i)]) <=
            kJointSpeedCap + 1e-9);
    for (size_t i = 0; i < st.objects.size(); ++i)
      CHECK((st.objects[i].pos - prev.objects[i].pos).norm() <= kObjectSpeedCap + 1e-9);
  }
}

TEST_CASE("drawer articulation follows the pulled handle") {
  const auto task = find_task(Category::kDrawer, Skill::kOpen);
  SceneState st = reset(task, 6, Embodiment::kHuman);
  // Place the hand on the handle and close it.
  st.agent.hand_pos = grasp_point(st.objects[0]);
  HumanCommand close{{0, 0}, 0.0};
  st = step_human(st, close);
  REQUIRE(st.objects[0].grasped);
  // Pull down 0.02 per step for 5 steps: 0.10 of slide -> 0.10 / slide_range.
  for (int i = 0; i < 5; ++i) st = step_human(st, {{0, -0.02}, 0.0});
  CHECK(st.objects[0].articulation == doctest::Approx(0.10 / kDrawerSlideRange).epsilon(1e-6));
}

TEST_CASE("success predicate distances") {
  const auto task = find_task(Category::kBlock, Skill::kPush);
  SceneState st = reset(task, 1);
  st.objects[0].pos = {0.50, 0.30};
  st.goal.position = Vec2{0.52, 0.29};
  CHECK(goal_error(st, task) == doctest::Approx(0.0223607).epsilon(1e-4));
  CHECK(check_success(st, task));
  st.goal.position = Vec2{0.55, 0.30};
  CHECK(!check_success(st, task));
}

TEST_CASE("articulation success band") {
  const auto task = find_task(Category::kDrawer, Skill::kOpen);
  SceneState st = reset(task, 1);
  st.objects[0].articulation = 0.95;
  st.goal.articulation = 1.0;
  CHECK(check_success(st, task));
  st.objects[0].articulation = 0.85;
  CHECK(!check_success(st, task));
}

TEST_CASE("success predicate binds to the task object") {
  const auto task = find_task(Category::kBlock, Skill::kPush);
  SceneState st = reset(task, 12);
  REQUIRE(st.objects.size() >= 2);
  // A distractor parked exactly on the goal must not count.
  st.objects.back().pos = *st.goal.position;
  CHECK(!check_success(st, task));
  st.objects[0].pos = *st.goal.position;
  CHECK(check_success(st, task));
}

TEST_CASE("render determinism and resolution validation") {
  const auto task = find_task(Category::kCup, Skill::kPush);
  const SceneState st = reset(task, 5);
  CHECK(render_rgb(st, 64) == render_rgb(st, 64));
  CHECK(render_masks(st, 64) == render_masks(st, 64));
  CHECK_THROWS_AS(render_rgb(st, 100), ConfigError);
}

TEST_CASE("mask partition: every pixel is exactly one of green/red/black") {
  for (u64 seed = 0; seed < 8; ++seed) {
    const auto task = find_task(Category::kDoor, Skill::kOpen, int(seed % 4));
    SceneState st = reset(task, seed, seed % 2 ? Embodiment::kHuman : Embodiment::kRobot);
    const Image m = render_masks(st, 64);
    for (int y = 0; y < m.h; ++y)
      for (int x = 0; x < m.w; ++x) {
        const Rgb c = m.get(x, y);
        const bool ok = (c == Rgb{0, 255, 0}) || (c == Rgb{255, 0, 0}) || (c == Rgb{0, 0, 0});
        REQUIRE(ok);
      }
  }
}

TEST_CASE("masks exclude distractors") {
  const auto task = find_task(Category::kBlock, Skill::kPush);
  SceneState st = reset(task, 21);
  REQUIRE(st.objects.size() >= 2);
  // Remove the agent and the task object; remaining pixels must be black.
  SceneState only_distractors = st;
  only_distractors.agent.hand_pos = {2.0, 2.0};
  only_distractors.agent.embodiment = Embodiment::kHuman;
  only_distractors.objects[0].pos = {5.0, 5.0};  // far out of frame
  const Image m = render_masks(only_distractors, 64);
  for (const u8 v : m.px) CHECK(v == 0);
}

TEST_CASE("agent occludes object in masks") {
  const auto task = find_task(Category::kBlock, Skill::kPush);
  SceneState st = reset(task, 3, Embodiment::kHuman);
  st.agent.hand_pos = st.objects[0].pos;  // hand over the task object
  const Image m = render_masks(st, 64);
  // The pixel at the object center must be hand-colored.
  const int px = int(st.objects[0].pos.x * 64);
  const int py = int((1.0 - st.objects[0].pos.y) * 64);
  CHECK(m.get(px, py) == Rgb{0, 255, 0});
}

TEST_CASE("mask area matches the analytic footprint of a medium block") {
  TaskTuple task;
  task.instance.category = Category::kBlock;
  task.instance.color = object_palette()[1];
  task.instance.size = SizeClass::kMedium;
  task.instance.instance_id = "block_custom";
  task.skill = Skill::kPush;
  SceneState st;
  SceneObject obj;
  obj.instance = task.instance;
  obj.pos = {0.5, 0.4};
  obj.theta = 0.0;
  st.objects.push_back(obj);
  st.agent.embodiment = Embodiment::kHuman;
  st.agent.hand_pos = {0.1, 0.9};  // far from the object
  st.task_object = 0;
  const Image m = render_masks(st, 64);
  i64 red = 0;
  for (int y = 0; y < m.h; ++y)
    for (int x = 0; x < m.w; ++x)
      if (m.get(x, y) == Rgb{255, 0, 0}) ++red;
  const double expected = (0.09 * 64) * (0.09 * 64);
  CHECK(double(red) > 0.8 * expected);
  CHECK(double(red) < 1.2 * expected);
}

TEST_CASE("embodiments differ only inside agent silhouettes") {
  const auto task = find_task(Category::kBall, Skill::kPush);
  const SceneState robot_state = reset(task, 17, Embodiment::kRobot);
  SceneState human_state = robot_state;
  human_state.agent = AgentState{};
  human_state.agent.embodiment = Embodiment::kHuman;
  const Image ir = render_rgb(robot_state, 64);
  const Image ih = render_rgb(human_state, 64);
  // Union of both agents' silhouettes, via the mask renderers.
  const Image mr = render_masks(robot_state, 64);
  const Image mh = render_masks(human_state, 64);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) {
      if (ir.get(x, y) == ih.get(x, y)) continue;
      const bool in_agent = mr.get(x, y) == Rgb{0, 255, 0} || mh.get(x, y) == Rgb{0, 255, 0};
      REQUIRE(in_agent);
    }
}

TEST_CASE("rendered effector matches forward kinematics within a pixel") {
  const auto task = find_task(Category::kBlock, Skill::kPush);
  const SceneState st = reset(task, 23);
  const Vec2 ee = forward_kinematics(st.agent.joints).pos;
  // Jaw marks straddle the effector: their pixel bbox center must sit within
  // one pixel of the projected FK position at 64x64.
  const Image with = render_rgb(st, 64);
  SceneState hidden = st;
  hidden.agent.joints = {M_PI / 2, 0.1, 0.1};  // move the arm elsewhere
  const Image without = render_rgb(hidden, 64);
  (void)without;
  double sx = 0, sy = 0;
  int n = 0;
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x)
      if (with.get(x, y) == Rgb{210, 210, 215}) {
        sx += x + 0.5;
        sy += y + 0.5;
        ++n;
      }
  REQUIRE(n > 0);
  const double px = ee.x * 64;
  const double py = (1.0 - ee.y) * 64;
  // Jaws sit slightly ahead of the effector along the approach axis.
  CHECK(std::fabs(sx / n - px) < 2.5);
  CHECK(std::fabs(sy / n - py) < 2.5);
}

TEST_CASE("hand sprite centroid sits on the commanded hand position") {
  for (double aperture : {0.0, 0.5, 1.0}) {
    SceneState st;
    SceneObject obj;
    obj.instance = catalog_instances()[0];
    obj.pos = {0.2, 0.2};
    st.objects.push_back(obj);
    st.task_object = 0;
    st.agent.embodiment = Embodiment::kHuman;
    st.agent.hand_pos = {0.55, 0.45};
    st.agent.hand_aperture = aperture;
    const Image m = render_masks(st, 64);
    double sx = 0, sy = 0;
    int n = 0;
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 64; ++x)
        if (m.get(x, y) == Rgb{0, 255, 0}) {
          sx += x + 0.5;
          sy += y + 0.5;
          ++n;
        }
    REQUIRE(n > 0);
    CHECK(std::fabs(sx / n - 0.55 * 64) < 1.0);
    CHECK(std::fabs(sy / n - (1.0 - 0.45) * 64) < 1.0);
  }
}

TEST_CASE("catalog instances avoid reserved colors and cover applicability") {
  for (const auto& inst : catalog_instances()) {
    CHECK(!(inst.color == Rgb8{0, 255, 0}));
    CHECK(!(inst.color == Rgb8{255, 0, 0}));
    CHECK(!(inst.color == Rgb8{0, 0, 0}));
    CHECK(!skill_applicability(inst.category).empty());
  }
  CHECK(all_tasks().size() == 44);
  for (const auto& t : all_tasks()) CHECK(skill_applies(t.instance.category, t.skill));
}

TEST_CASE("infeasible state: missing task object") {
  const auto task = find_task(Category::kBlock, Skill::kPush);
  SceneState st = reset(task, 2);
  st.objects.clear();
  st.task_object = 0;
  CHECK_THROWS_AS(scripted_expert(task, st), DataError);
  CHECK_THROWS_AS(check_success(st, task), DataError);
}
