#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hopman/image.hpp"
#include "hopman/world/types.hpp"

namespace hopman::data {

using world::TaskTuple;

inline constexpr int kPlanFrames = 7;  // K
inline constexpr int kHorizon = 40;
inline constexpr const char* kDatasetVersion = "hopman-dataset-v1";

enum class ClipSource { kHumanScripted, kHallucinated };

// One diffusion training example: initial and goal RGB plus K mask frames.
struct Clip {
  Image x0, xg;
  std::vector<Image> masks;  // K frames
  TaskTuple task;
  u64 seed = 0;
  ClipSource source = ClipSource::kHumanScripted;
};

struct RobotTrajectory {
  std::vector<Image> observations;  // exactly 40
  std::vector<world::Action> actions;
  Image goal_image;  // final observation
  TaskTuple task;
  u64 seed = 0;
};

enum class Pairing { kCollected, kHallucinated };

struct PairedExample {
  Clip human_clip;
  RobotTrajectory robot_traj;
  Pairing pairing = Pairing::kCollected;
};

enum class Level { kMG, kGa, kGb, kSGa, kSGb };
const char* to_string(Level l);
Level level_from_string(const std::string& s);
inline const std::vector<Level>& all_levels() {
  static const std::vector<Level> ls{Level::kMG, Level::kGa, Level::kGb, Level::kSGa,
                                     Level::kSGb};
  return ls;
}

struct SplitSpec {
  u64 seed = 0;
  std::vector<TaskTuple> train_robot;
  std::vector<TaskTuple> train_human;
  std::map<Level, std::vector<TaskTuple>> eval_levels;

  bool in_train_robot(const TaskTuple& t) const;
  nlohmann::json to_json() const;
  static SplitSpec from_json(const nlohmann::json& j);
  u32 checksum() const;
};

struct DatasetManifest {
  std::string version = kDatasetVersion;
  int passive = 0, collected = 0, hallucinated = 0;
  int clip_resolution = 64, obs_resolution = 96;
  int k_frames = kPlanFrames, horizon = kHorizon;
  SplitSpec split;
  std::map<std::string, u32> example_crc;  // relative example dir -> combined crc
  nlohmann::json gen_config;

  nlohmann::json to_json() const;
  static DatasetManifest from_json(const nlohmann::json& j);
};

nlohmann::json task_to_json(const TaskTuple& t);
TaskTuple task_from_json(const nlohmann::json& j);

nlohmann::json action_to_json(const world::Action& a);
world::Action action_from_json(const nlohmann::json& j);

// Decimal with at most 9 significant digits; round-trips float32 exactly.
double quantize_g9(double v);

}  // namespace hopman::data
