#include "hopman/world/world.hpp"

#include <algorithm>
#include <cmath>

#include "hopman/rng.hpp"
#include "hopman/world/geometry.hpp"

namespace hopman::world {

namespace {

// Reachable placement band for free objects (the arm reaches ~0.75 from its
// base at full extension; keep a margin for approach waypoints above objects).
constexpr double kRegionX0 = 0.18, kRegionX1 = 0.82;
constexpr double kRegionY0 = 0.18, kRegionY1 = 0.58;
constexpr double kArticX0 = 0.32, kArticX1 = 0.68;
constexpr double kArticY0 = 0.50, kArticY1 = 0.60;
constexpr double kReachLimit = 0.70;
constexpr double kGoalMinDist = 0.15, kGoalMaxDist = 0.45;
constexpr double kBreakawayDist = 0.10;

const std::array<double, 3>& canonical_joints() {
  static const std::array<double, 3> q = solve_ik({2.4, -1.8, -0.4}, {0.5, 0.28}, 200, 0.02);
  return q;
}

bool in_reach(Vec2 p) { return (p - kRobotBase).norm() <= kReachLimit; }

double free_radius(const ObjectInstance& inst) { return inst.scale() / 2; }

bool articulated(Category c) { return c == Category::kDrawer || c == Category::kDoor; }

}  // namespace

std::vector<ObjectInstance> catalog_instances() {
  static const Category cats[5] = {Category::kBlock, Category::kBall, Category::kDrawer,
                                   Category::kDoor, Category::kCup};
  static const SizeClass sizes[4] = {SizeClass::kSmall, SizeClass::kMedium, SizeClass::kLarge,
                                     SizeClass::kMedium};
  std::vector<ObjectInstance> out;
  for (int ci = 0; ci < 5; ++ci)
    for (int j = 0; j < 4; ++j) {
      ObjectInstance inst;
      inst.category = cats[ci];
      inst.color = object_palette()[size_t((ci * 3 + j * 2) % 8)];
      inst.size = sizes[j];
      inst.instance_id = std::string(to_string(cats[ci])) + std::to_string(j);
      out.push_back(inst);
    }
  return out;
}

std::vector<TaskTuple> all_tasks() {
  std::vector<TaskTuple> out;
  for (const auto& inst : catalog_instances())
    for (Skill s : skill_applicability(inst.category)) {
      TaskTuple t;
      t.instance = inst;
      t.skill = s;
      if (s == Skill::kOpen) t.articulation_target = 1.0;
      if (s == Skill::kClose) t.articulation_target = 0.0;
      out.push_back(t);
    }
  return out;
}

ObjectInstance stack_base_instance(const ObjectInstance& task_instance) {
  // A distinct block instance serves as the stacking base.
  const auto cat = catalog_instances();
  for (const auto& inst : cat)
    if (inst.category == Category::kBlock && inst.instance_id != task_instance.instance_id &&
        !(inst.color == task_instance.color))
      return inst;
  throw PlacementError("no base block instance available");
}

Vec2 effector_position(const AgentState& agent) {
  if (agent.embodiment == Embodiment::kHuman) return agent.hand_pos;
  return forward_kinematics(agent.joints).pos;
}

bool gripper_closed(const AgentState& agent) {
  return (agent.embodiment == Embodiment::kHuman ? agent.hand_aperture : agent.gripper) < 0.5;
}

Vec2 grasp_point(const SceneObject& obj) {
  if (articulated(obj.instance.category)) return handle_position_at(obj, obj.articulation);
  return obj.pos;
}

double contact_radius(const SceneObject& obj) {
  return articulated(obj.instance.category) ? 0.0 : free_radius(obj.instance);
}

// ---------------------------------------------------------------- reset ----

SceneState reset(const TaskTuple& task, u64 seed, Embodiment embodiment) {
  if (!skill_applies(task.category(), task.skill))
    throw ConfigError("reset: skill " + std::string(to_string(task.skill)) +
                      " does not apply to category " + to_string(task.category()));
  Rng rng(hash_mix(fnv1a64(task.id()), seed));
  SceneState st;
  st.task_object = 0;

  const bool artic = articulated(task.category());
  SceneObject obj;
  obj.instance = task.instance;
  int attempts = 0;
  auto reject = [&attempts] {
    if (++attempts > 1000) throw PlacementError("reset: placement rejection limit reached");
  };

  if (artic) {
    for (;;) {
      obj.pos = {rng.uniform(kArticX0, kArticX1), rng.uniform(kArticY0, kArticY1)};
      if (in_reach(handle_position_at(obj, 0.0)) && in_reach(handle_position_at(obj, 1.0))) break;
      reject();
    }
    obj.theta = 0;
    obj.articulation = task.skill == Skill::kOpen ? 0.0 : 1.0;
    st.goal.articulation = task.articulation_target.value_or(task.skill == Skill::kOpen ? 1.0 : 0.0);
  } else {
    for (;;) {
      obj.pos = {rng.uniform(kRegionX0, kRegionX1), rng.uniform(kRegionY0, kRegionY1)};
      if (in_reach(obj.pos)) break;
      reject();
    }
    obj.theta = task.category() == Category::kBall ? 0.0 : rng.uniform(-M_PI / 4, M_PI / 4);
  }
  st.objects.push_back(obj);

  // Stack: a base block the task object must end up resting on.
  if (task.skill == Skill::kStack) {
    SceneObject base;
    base.instance = stack_base_instance(task.instance);
    const double clearance =
        free_radius(obj.instance) + free_radius(base.instance) + 0.06;
    for (;;) {
      base.pos = {rng.uniform(kRegionX0, kRegionX1), rng.uniform(kRegionY0, kRegionY1)};
      const double d = (base.pos - obj.pos).norm();
      if (in_reach(base.pos) && d > clearance && d >= kGoalMinDist && d <= kGoalMaxDist &&
          base.pos.y + base.instance.scale() / 2 + obj.instance.scale() / 2 < kRegionY1 + 0.06)
        break;
      reject();
    }
    base.theta = 0;
    st.objects.push_back(base);
    st.base_object = 1;
    st.goal.position = Vec2{base.pos.x, base.pos.y + base.instance.scale() / 2 +
                                            obj.instance.scale() / 2};
  } else if (task.skill == Skill::kPush || task.skill == Skill::kPickPlace) {
    for (;;) {
      Vec2 g{rng.uniform(kRegionX0, kRegionX1), rng.uniform(kRegionY0, kRegionY1)};
      const double d = (g - obj.pos).norm();
      if (in_reach(g) && d >= kGoalMinDist && d <= kGoalMaxDist) {
        st.goal.position = g;
        break;
      }
      reject();
    }
  }

  // 1-2 distractors from the free categories, placed without overlap and away
  // from the goal so success stays unambiguous.
  const int n_distractors = 1 + (rng.uniform() < 0.5 ? 1 : 0);
  const auto catalog = catalog_instances();
  for (int k = 0; k < n_distractors; ++k) {
    SceneObject d;
    for (;;) {
      const auto& cand = catalog[size_t(rng.uniform_int(0, int(catalog.size()) - 1))];
      if (articulated(cand.category)) continue;
      if (cand.color == task.instance.color) continue;
      if (st.base_object >= 0 && cand.color == st.objects[1].instance.color) continue;
      d.instance = cand;
      break;
    }
    for (;;) {
      d.pos = {rng.uniform(kRegionX0, kRegionX1), rng.uniform(kRegionY0, kRegionY1)};
      bool ok = in_reach(d.pos);
      for (const auto& other : st.objects)
        ok = ok && (d.pos - other.pos).norm() >
                       free_radius(d.instance) + std::max(0.08, contact_radius(other) + 0.04);
      if (st.goal.position)
        ok = ok && (d.pos - *st.goal.position).norm() > free_radius(d.instance) + 0.10;
      if (ok) break;
      reject();
    }
    d.theta = d.instance.category == Category::kBall ? 0.0 : rng.uniform(-M_PI / 4, M_PI / 4);
    st.objects.push_back(d);
  }

  st.agent.embodiment = embodiment;
  st.agent.joints = canonical_joints();
  st.agent.gripper = 1.0;
  st.agent.hand_pos = {0.5, 0.12};
  st.agent.hand_aperture = 1.0;
  st.time_index = 0;
  return st;
}

// ----------------------------------------------------------------- step ----

namespace {

// Shared effector/world update for both embodiments. e0 -> e1 is the effector
// motion this step (already speed-capped), closed is the binarized grip.
void apply_effector(SceneState& st, Vec2 e0, Vec2 e1, bool closed, double agent_radius,
                    StepInfo* info) {
  int held = -1;
  for (size_t i = 0; i < st.objects.size(); ++i)
    if (st.objects[i].grasped) held = int(i);

  if (held >= 0 && !closed) {
    st.objects[size_t(held)].grasped = false;
    if (info) info->grasp_released = true;
    held = -1;
  }

  if (held >= 0) {
    SceneObject& obj = st.objects[size_t(held)];
    if (articulated(obj.instance.category)) {
      const double s = obj.instance.scale();
      double target;
      double travel;  // handle path length per unit articulation
      if (obj.instance.category == Category::kDrawer) {
        const double h0y = handle_position_at(obj, 0.0).y;
        target = (h0y - e1.y) / kDrawerSlideRange;
        travel = kDrawerSlideRange;
      } else {
        const Vec2 hinge{obj.pos.x - s, obj.pos.y};  // L/2 = s
        const Vec2 d = e1 - hinge;
        const double ang = std::atan2(d.y, d.x);
        target = std::clamp(-ang / (M_PI / 2), 0.0, 1.0);
        travel = 0.92 * 2.0 * s * M_PI / 2;
      }
      target = std::clamp(target, 0.0, 1.0);
      const double max_da = kObjectSpeedCap / travel;
      const double da = std::clamp(target - obj.articulation, -max_da, max_da);
      obj.articulation = std::clamp(obj.articulation + da, 0.0, 1.0);
      if ((e1 - handle_position_at(obj, obj.articulation)).norm() > kBreakawayDist) {
        obj.grasped = false;
        if (info) info->grasp_released = true;
      }
    } else {
      st.objects[size_t(held)].pos = e1 + st.objects[size_t(held)].grasp_offset;
    }
  } else if (!closed) {
    // Open-effector contact: quasi-static push along the contact normal. Only
    // motion into the object displaces it, so a hand resting on a placed
    // object does not plow it away.
    for (auto& obj : st.objects) {
      if (articulated(obj.instance.category)) continue;
      const double rsum = contact_radius(obj) + agent_radius;
      const Vec2 d = obj.pos - e1;
      const double dist = d.norm();
      if (dist < rsum && (e1 - e0).dot(d) > 1e-12) {
        const Vec2 n = dist > 1e-9 ? d * (1.0 / dist) : Vec2{0, 1};
        const double push = std::min(rsum - dist, kObjectSpeedCap);
        obj.pos = obj.pos + n * push;
        obj.pos.x = std::clamp(obj.pos.x, 0.02, 0.98);
        obj.pos.y = std::clamp(obj.pos.y, 0.02, 0.98);
      }
    }
  }

  // Engage: closed effector within the grasp radius of the nearest grasp point.
  if (closed && held < 0) {
    int best = -1;
    double best_d = kGraspRadius;
    for (size_t i = 0; i < st.objects.size(); ++i) {
      const double d = (grasp_point(st.objects[i]) - e1).norm();
      if (d <= best_d) {
        best_d = d;
        best = int(i);
      }
    }
    if (best >= 0) {
      SceneObject& obj = st.objects[size_t(best)];
      obj.grasped = true;
      obj.grasp_offset = articulated(obj.instance.category) ? Vec2{0, 0} : obj.pos - e1;
      if (info) info->grasp_engaged = true;
    }
  }
  (void)e0;
}

}  // namespace

SceneState step(const SceneState& state, const Action& action, StepInfo* info) {
  SceneState st = state;
  if (st.agent.embodiment != Embodiment::kRobot)
    throw ConfigError("step: robot action applied to a non-robot embodiment");

  std::array<double, 3> target;
  for (int i = 0; i < 3; ++i) {
    double a = double(action.v[size_t(i)]);
    if (a < -1 || a > 1) {
      if (info) info->action_clipped = true;
      a = std::clamp(a, -1.0, 1.0);
    }
    target[size_t(i)] = a * kJointLimit;
  }
  double grip = double(action.v[3]);
  if (grip < 0 || grip > 1) {
    if (info) info->action_clipped = true;
    grip = std::clamp(grip, 0.0, 1.0);
  }
  const bool closed = grip < 0.5;

  const std::array<double, 3> q0 = st.agent.joints;
  std::array<double, 3> dq;
  for (int i = 0; i < 3; ++i)
    dq[size_t(i)] = std::clamp(target[size_t(i)] - q0[size_t(i)], -kJointSpeedCap, kJointSpeedCap);

  // Effector governor: scale the joint delta so the effector never moves more
  // than the workspace speed cap in one step (keeps carried objects within the
  // bounded-motion contract).
  const Vec2 e0 = forward_kinematics(q0).pos;
  double scale = 1.0;
  for (int pass = 0; pass < 3; ++pass) {
    std::array<double, 3> q1;
    for (int i = 0; i < 3; ++i) q1[size_t(i)] = clamp_joint(q0[size_t(i)] + scale * dq[size_t(i)]);
    const double move = (forward_kinematics(q1).pos - e0).norm();
    if (move <= kEffectorSpeedCap + 1e-9) break;
    scale *= kEffectorSpeedCap / move;
  }
  for (int i = 0; i < 3; ++i)
    st.agent.joints[size_t(i)] = clamp_joint(q0[size_t(i)] + scale * dq[size_t(i)]);
  st.agent.gripper = closed ? 0.0 : 1.0;

  const Vec2 e1 = forward_kinematics(st.agent.joints).pos;
  apply_effector(st, e0, e1, closed, kEffectorRadius, info);
  st.time_index = state.time_index + 1;
  return st;
}

SceneState step_human(const SceneState& state, const HumanCommand& cmd, StepInfo* info) {
  SceneState st = state;
  if (st.agent.embodiment != Embodiment::kHuman)
    throw ConfigError("step_human: human command applied to a non-human embodiment");
  Vec2 v = cmd.velocity;
  const double n = v.norm();
  if (n > kEffectorSpeedCap) v = v * (kEffectorSpeedCap / n);
  const Vec2 e0 = st.agent.hand_pos;
  Vec2 e1 = e0 + v;
  e1.x = std::clamp(e1.x, 0.0, 1.0);
  e1.y = std::clamp(e1.y, 0.0, 1.0);
  st.agent.hand_pos = e1;
  const bool closed = cmd.aperture < 0.5;
  st.agent.hand_aperture = closed ? 0.0 : 1.0;
  apply_effector(st, e0, e1, closed, kHandRadius, info);
  st.time_index = state.time_index + 1;
  return st;
}

// -------------------------------------------------------------- success ----

namespace {

void require_task_object(const SceneState& state, const TaskTuple& task) {
  if (state.task_object < 0 || state.task_object >= int(state.objects.size()) ||
      state.objects[size_t(state.task_object)].instance.category != task.category())
    throw DataError("task-relevant object missing from scene");
}

}  // namespace

double goal_error(const SceneState& state, const TaskTuple& task) {
  require_task_object(state, task);
  const SceneObject& obj = state.objects[size_t(state.task_object)];
  if (task.skill == Skill::kOpen || task.skill == Skill::kClose) {
    const double target = state.goal.articulation.value_or(
        task.articulation_target.value_or(task.skill == Skill::kOpen ? 1.0 : 0.0));
    return std::fabs(obj.articulation - target);
  }
  if (!state.goal.position) throw DataError("goal position missing from scene state");
  return (obj.pos - *state.goal.position).norm();
}

bool check_success(const SceneState& state, const TaskTuple& task) {
  require_task_object(state, task);
  const SceneObject& obj = state.objects[size_t(state.task_object)];
  if (task.skill == Skill::kOpen || task.skill == Skill::kClose)
    return goal_error(state, task) <= kSuccessArticulation;

  if (goal_error(state, task) > kSuccessDist) return false;
  if (task.skill == Skill::kStack) {
    if (state.base_object < 0 || state.base_object >= int(state.objects.size())) return false;
    const SceneObject& base = state.objects[size_t(state.base_object)];
    const double top = base.pos.y + base.instance.scale() / 2 + obj.instance.scale() / 2;
    // Resting: horizontally supported by the base, vertically at contact.
    if (std::fabs(obj.pos.x - base.pos.x) > base.instance.scale() / 2) return false;
    if (obj.pos.y < top - 0.025 || obj.pos.y > top + 0.025) return false;
  }
  return true;
}

}  // namespace hopman::world
