#pragma once

#include "hopman/image.hpp"
#include "hopman/world/kinematics.hpp"
#include "hopman/world/types.hpp"

namespace hopman::world {

inline constexpr int kHorizon = 40;           // trajectory length
inline constexpr double kGraspRadius = 0.05;  // effector-to-grasp-point engage distance
inline constexpr double kSuccessDist = 0.04;
inline constexpr double kSuccessArticulation = 0.1;
inline constexpr double kObjectSpeedCap = 0.05;  // per-step displacement cap
inline constexpr double kHandRadius = 0.045;     // palm disc, also hand contact radius
inline constexpr double kEffectorRadius = 0.02;  // robot jaw contact radius
inline constexpr double kDrawerSlideRange = 0.15;

// Full task catalog: 5 categories x 4 instances x applicable skills.
std::vector<ObjectInstance> catalog_instances();
std::vector<TaskTuple> all_tasks();
ObjectInstance stack_base_instance(const ObjectInstance& task_instance);

// Deterministic episode initialization. Object poses are sampled uniformly in
// the reachable workspace band; 1-2 distractors are placed without overlap.
// Throws PlacementError after 1000 rejected layouts.
SceneState reset(const TaskTuple& task, u64 seed, Embodiment embodiment = Embodiment::kRobot);

SceneState step(const SceneState& state, const Action& action, StepInfo* info = nullptr);
SceneState step_human(const SceneState& state, const HumanCommand& cmd, StepInfo* info = nullptr);

Image render_rgb(const SceneState& state, int resolution);
Image render_masks(const SceneState& state, int resolution);

Action scripted_expert(const TaskTuple& task, const SceneState& state);
HumanCommand scripted_expert_human(const TaskTuple& task, const SceneState& state);

// Waypoint layer shared by both embodiments; exposed for the geometry oracles
// in the tests.
struct ExpertDecision {
  Vec2 waypoint;
  bool close_grip = false;
  bool hold = false;
};
ExpertDecision expert_decision(const TaskTuple& task, const SceneState& state);

bool check_success(const SceneState& state, const TaskTuple& task);
// Distance to goal: position error for free objects, |articulation - target|
// for articulated ones.
double goal_error(const SceneState& state, const TaskTuple& task);

Vec2 effector_position(const AgentState& agent);
bool gripper_closed(const AgentState& agent);

// Grasp point: handle for articulated objects, center otherwise.
Vec2 grasp_point(const SceneObject& obj);
Vec2 handle_position_at(const SceneObject& obj, double articulation);
double contact_radius(const SceneObject& obj);

}  // namespace hopman::world
