#include <algorithm>
#include <cmath>

#include "hopman/world/world.hpp"

namespace hopman::world {

namespace {

double cross2(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }

double segment_clearance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = ab.dot(ab);
  double t = len2 > 1e-12 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (p - (a + ab * t)).norm();
}

Vec2 door_hinge(const SceneObject& obj) {
  return {obj.pos.x - obj.instance.scale(), obj.pos.y};
}

}  // namespace

ExpertDecision expert_decision(const TaskTuple& task, const SceneState& state) {
  if (state.task_object < 0 || state.task_object >= int(state.objects.size()) ||
      state.objects[size_t(state.task_object)].instance.category != task.category())
    throw DataError("scripted expert: task-relevant object missing from scene");

  const SceneObject& obj = state.objects[size_t(state.task_object)];
  const Vec2 ee = effector_position(state.agent);
  const double agent_r =
      state.agent.embodiment == Embodiment::kHuman ? kHandRadius : kEffectorRadius;
  const bool held = obj.grasped;

  ExpertDecision d;
  d.waypoint = ee;
  d.close_grip = gripper_closed(state.agent);
  d.hold = false;

  if (check_success(state, task)) {
    d.hold = true;
    return d;
  }

  switch (task.skill) {
    case Skill::kPush: {
      const Vec2 goal = *state.goal.position;
      const Vec2 dir = (goal - obj.pos).normalized();
      const double r_sum = contact_radius(obj) + agent_r;
      d.close_grip = false;
      const Vec2 rel = ee - obj.pos;
      const bool behind = rel.normalized().dot(dir * -1.0) > 0.85;
      const bool near = rel.norm() <= r_sum + 0.08;
      if (behind && near) {
        // Advance toward the final contact position; the object rides ahead.
        d.waypoint = goal - dir * (r_sum - 0.01);
      } else {
        const Vec2 staging = obj.pos - dir * (r_sum + 0.05);
        // Detour around the object if the straight line would plow through it.
        if (segment_clearance(obj.pos, ee, staging) < r_sum + 0.02) {
          const double side = cross2(dir, rel) >= 0 ? 1.0 : -1.0;
          const Vec2 perp{-dir.y * side, dir.x * side};
          d.waypoint = obj.pos + perp * (r_sum + 0.07);
        } else {
          d.waypoint = staging;
        }
      }
      return d;
    }

    case Skill::kPickPlace:
    case Skill::kStack: {
      const Vec2 goal = *state.goal.position;
      if (!held) {
        const double c = contact_radius(obj) + agent_r;
        const Vec2 above = obj.pos + Vec2{0, c + 0.05};
        const double dx = ee.x - obj.pos.x;
        const double dy = ee.y - obj.pos.y;
        if (std::fabs(dx) <= 0.025 && dy >= 0 && dy <= c + 0.07) {
          // Centered above: descend, closing before contact so the descent
          // cannot plow the object away.
          d.waypoint = obj.pos;
          d.close_grip = (ee - obj.pos).norm() <= c + 0.065;
        } else if (dy >= c + 0.03) {
          d.waypoint = above;  // travel at a safe altitude
          d.close_grip = false;
        } else if (std::fabs(dx) >= c + 0.03 || dy >= 0) {
          d.waypoint = {ee.x, obj.pos.y + c + 0.06};  // rise clear of the object
          d.close_grip = false;
        } else {
          // Below and horizontally blocked: sidestep away first.
          const double side = dx >= 0 ? 1.0 : -1.0;
          d.waypoint = {obj.pos.x + side * (c + 0.10), ee.y};
          d.close_grip = false;
        }
        return d;
      }
      const Vec2 goal_ee = goal - obj.grasp_offset;
      const double y_t = std::min(0.66, std::max(obj.pos.y, goal.y) + 0.12);
      d.close_grip = true;
      if (ee.y < y_t - 0.02 && std::fabs(ee.x - goal_ee.x) > 0.025) {
        d.waypoint = {ee.x, y_t};  // lift
      } else if (std::fabs(ee.x - goal_ee.x) > 0.02) {
        d.waypoint = {goal_ee.x, y_t};  // transport above the goal
      } else {
        d.waypoint = goal_ee + Vec2{0, -0.005};  // descend
        if ((obj.pos - goal).norm() <= 0.022) d.close_grip = false;  // release
      }
      return d;
    }

    case Skill::kOpen:
    case Skill::kClose: {
      const double target_a = state.goal.articulation.value_or(
          task.articulation_target.value_or(task.skill == Skill::kOpen ? 1.0 : 0.0));
      const Vec2 handle = grasp_point(obj);
      if (!held) {
        Vec2 staging;
        if (obj.instance.category == Category::kDrawer) {
          staging = handle + Vec2{0, -0.06};
        } else {
          const Vec2 r_hat = (handle - door_hinge(obj)).normalized();
          staging = handle + r_hat * 0.06;
        }
        d.close_grip = (ee - handle).norm() <= 0.055;
        if ((ee - staging).norm() > 0.03 && (ee - handle).norm() > 0.07) {
          d.waypoint = staging;
          d.close_grip = false;
        } else {
          d.waypoint = handle;
        }
        return d;
      }
      const double da = target_a - obj.articulation;
      if (std::fabs(da) <= 0.03) {
        d.close_grip = false;  // release within the success band
        d.waypoint = ee;
      } else {
        const double a_next = obj.articulation + std::clamp(da, -0.2, 0.2);
        d.waypoint = handle_position_at(obj, a_next);
        d.close_grip = true;
      }
      return d;
    }
  }
  return d;
}

Action scripted_expert(const TaskTuple& task, const SceneState& state) {
  if (state.agent.embodiment != Embodiment::kRobot)
    throw ConfigError("scripted_expert: robot expert queried for a non-robot embodiment");
  const ExpertDecision d = expert_decision(task, state);
  Action a;
  if (d.hold) {
    for (int i = 0; i < 3; ++i) a.v[size_t(i)] = float(state.agent.joints[size_t(i)] / kJointLimit);
    a.v[3] = float(state.agent.gripper);
    return a;
  }
  const auto q = solve_ik(state.agent.joints, d.waypoint);
  for (int i = 0; i < 3; ++i) a.v[size_t(i)] = float(q[size_t(i)] / kJointLimit);
  a.v[3] = d.close_grip ? 0.0f : 1.0f;
  return a;
}

HumanCommand scripted_expert_human(const TaskTuple& task, const SceneState& state) {
  if (state.agent.embodiment != Embodiment::kHuman)
    throw ConfigError("scripted_expert_human: human expert queried for a non-human embodiment");
  const ExpertDecision d = expert_decision(task, state);
  HumanCommand cmd;
  if (d.hold) {
    cmd.velocity = {0, 0};
    cmd.aperture = state.agent.hand_aperture;
    return cmd;
  }
  cmd.velocity = d.waypoint - state.agent.hand_pos;
  cmd.aperture = d.close_grip ? 0.0 : 1.0;
  return cmd;
}

}  // namespace hopman::world
