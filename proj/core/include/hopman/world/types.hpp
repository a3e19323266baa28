#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "hopman/common.hpp"

namespace hopman::world {

struct Vec2 {
  double x = 0, y = 0;
  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double norm() const { return std::sqrt(x * x + y * y); }
  Vec2 normalized() const {
    const double n = norm();
    return n > 1e-12 ? Vec2{x / n, y / n} : Vec2{0, 0};
  }
  bool operator==(const Vec2&) const = default;
};

enum class Category { kBlock, kBall, kDrawer, kDoor, kCup };
enum class Skill { kPush, kPickPlace, kOpen, kClose, kStack };
enum class SizeClass { kSmall, kMedium, kLarge };
enum class Embodiment { kHuman, kRobot };

const char* to_string(Category c);
const char* to_string(Skill s);
const char* to_string(SizeClass s);
Category category_from_string(const std::string& s);
Skill skill_from_string(const std::string& s);
SizeClass size_from_string(const std::string& s);

// Characteristic object size as a fraction of workspace width.
inline double size_scale(SizeClass s) {
  switch (s) {
    case SizeClass::kSmall: return 0.06;
    case SizeClass::kMedium: return 0.09;
    case SizeClass::kLarge: return 0.12;
  }
  return 0.09;
}

std::vector<Skill> skill_applicability(Category c);
bool skill_applies(Category c, Skill s);

struct Rgb8 {
  u8 r = 0, g = 0, b = 0;
  bool operator==(const Rgb8&) const = default;
};

// 8-color object palette; deliberately excludes pure green, pure red and black,
// which are reserved for mask semantics.
const std::array<Rgb8, 8>& object_palette();

struct ObjectInstance {
  Category category = Category::kBlock;
  Rgb8 color;
  SizeClass size = SizeClass::kMedium;
  std::string instance_id;

  double scale() const { return size_scale(size); }
  bool operator==(const ObjectInstance&) const = default;
};

struct TaskTuple {
  ObjectInstance instance;
  Skill skill = Skill::kPush;
  // Target articulation for open/close; position goals are sampled at reset.
  std::optional<double> articulation_target;

  Category category() const { return instance.category; }
  std::string id() const;
  bool operator==(const TaskTuple&) const = default;
};

struct AgentState {
  Embodiment embodiment = Embodiment::kRobot;
  // Human embodiment.
  Vec2 hand_pos{0.5, 0.12};
  double hand_aperture = 1.0;  // [0,1], closed below 0.5
  // Robot embodiment.
  std::array<double, 3> joints{0, 0, 0};  // radians, limits [-pi, pi]
  double gripper = 1.0;                   // [0,1], closed below 0.5
  bool operator==(const AgentState&) const = default;
};

struct SceneObject {
  ObjectInstance instance;
  Vec2 pos;             // center, unit-square workspace
  double theta = 0.0;   // orientation (blocks/cups)
  double articulation = 0.0;  // [0,1] for drawer/door, unused otherwise
  bool grasped = false;
  Vec2 grasp_offset;    // object center minus agent effector at grasp time
  bool operator==(const SceneObject&) const = default;
};

// Normalized robot action: 3 absolute joint targets in [-1,1] (scaled by the
// joint limit pi) plus a gripper scalar in [0,1], binarized at 0.5.
struct Action {
  std::array<float, 4> v{0, 0, 0, 1};
  bool operator==(const Action&) const = default;
};

struct HumanCommand {
  Vec2 velocity;        // per-step displacement, capped at the hand speed limit
  double aperture = 1;  // [0,1]
};

struct GoalSpec {
  // Position goal for push / pick_place / stack (stack: top of the base block).
  std::optional<Vec2> position;
  // Articulation goal for open / close.
  std::optional<double> articulation;
  bool operator==(const GoalSpec&) const = default;
};

struct SceneState {
  std::vector<SceneObject> objects;
  AgentState agent;
  int time_index = 0;
  int task_object = 0;   // index into objects
  int base_object = -1;  // stack base block, -1 otherwise
  GoalSpec goal;
  bool operator==(const SceneState&) const = default;
};

struct StepInfo {
  bool action_clipped = false;
  bool grasp_engaged = false;
  bool grasp_released = false;
};

}  // namespace hopman::world
