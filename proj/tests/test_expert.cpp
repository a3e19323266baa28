#include <doctest.h>

#include <map>

#include "hopman/world/world.hpp"

using namespace hopman;
using namespace hopman::world;

namespace {

SceneState rollout(const TaskTuple& task, u64 seed, Embodiment emb, int steps = 40) {
  SceneState st = reset(task, seed, emb);
  for (int t = 0; t < steps; ++t) {
    if (emb == Embodiment::kRobot) {
      st = step(st, scripted_expert(task, st));
    } else {
      st = step_human(st, scripted_expert_human(task, st));
    }
  }
  return st;
}

}  // namespace

TEST_CASE("hold action when the object is already at the goal") {
  TaskTuple task;
  for (const auto& t : all_tasks())
    if (t.skill == Skill::kPush) {
      task = t;
      break;
    }
  SceneState st = reset(task, 3);
  st.objects[0].pos = *st.goal.position;  // already solved
  const ExpertDecision d = expert_decision(task, st);
  CHECK(d.hold);
  const Action a = scripted_expert(task, st);
  for (int i = 0; i < 3; ++i)
    CHECK(a.v[size_t(i)] == doctest::Approx(st.agent.joints[size_t(i)] / kJointLimit));
  CHECK(double(a.v[3]) == doctest::Approx(st.agent.gripper));
}

TEST_CASE("pick_place transport waypoint sits directly over the goal") {
  TaskTuple task;
  for (const auto& t : all_tasks())
    if (t.skill == Skill::kPickPlace && t.instance.category == Category::kBlock) {
      task = t;
      break;
    }
  SceneState st = reset(task, 5);
  // Grasped block held at transport height, goal elsewhere.
  st.objects[0].grasped = true;
  st.objects[0].grasp_offset = {0, 0};
  const Vec2 goal = *st.goal.position;
  const double y_t = std::min(0.66, std::max(st.objects[0].pos.y, goal.y) + 0.12);
  st.agent.joints = solve_ik(st.agent.joints, {goal.x + 0.2, y_t}, 200, 0.02);
  st.objects[0].pos = effector_position(st.agent);
  const ExpertDecision d = expert_decision(task, st);
  CHECK(!d.hold);
  // Waypoint geometry oracle: directly over the goal at transport height.
  CHECK(d.waypoint.x == doctest::Approx(goal.x).epsilon(0.01));
  CHECK(d.waypoint.y == doctest::Approx(y_t).epsilon(0.02));
  CHECK(d.close_grip);
}

TEST_CASE("expert success rate at least 0.95 per skill over 200 episodes") {
  std::map<Skill, std::pair<int, int>> by_skill;  // success, total
  const auto tasks = all_tasks();
  for (Skill skill : {Skill::kPush, Skill::kPickPlace, Skill::kOpen, Skill::kClose, Skill::kStack}) {
    std::vector<TaskTuple> pool;
    for (const auto& t : tasks)
      if (t.skill == skill) pool.push_back(t);
    for (int e = 0; e < 200; ++e) {
      const TaskTuple& task = pool[size_t(e) % pool.size()];
      const SceneState fin = rollout(task, 50000 + u64(e), Embodiment::kRobot);
      auto& [succ, total] = by_skill[skill];
      succ += check_success(fin, task) ? 1 : 0;
      total += 1;
    }
  }
  for (const auto& [skill, st] : by_skill) {
    INFO("skill ", to_string(skill), " rate ", double(st.first) / st.second);
    CHECK(double(st.first) / st.second >= 0.95);
  }
}

TEST_CASE("human expert matches robot expert final poses within 0.05") {
  int checked = 0;
  for (const auto& task : all_tasks()) {
    if (task.skill == Skill::kOpen || task.skill == Skill::kClose) continue;
    const SceneState r = rollout(task, 777, Embodiment::kRobot);
    const SceneState h = rollout(task, 777, Embodiment::kHuman);
    if (!check_success(r, task) || !check_success(h, task)) continue;
    CHECK((r.objects[0].pos - h.objects[0].pos).norm() < 0.05);
    ++checked;
  }
  CHECK(checked >= 10);
}

TEST_CASE("human expert succeeds across skills") {
  std::map<Skill, std::pair<int, int>> by_skill;
  for (const auto& task : all_tasks()) {
    for (u64 seed : {11ull, 22ull}) {
      const SceneState fin = rollout(task, seed, Embodiment::kHuman);
      auto& [succ, total] = by_skill[task.skill];
      succ += check_success(fin, task) ? 1 : 0;
      total += 1;
    }
  }
  for (const auto& [skill, st] : by_skill) {
    INFO("skill ", to_string(skill), " rate ", double(st.first) / st.second);
    CHECK(double(st.first) / st.second >= 0.95);
  }
}
