#pragma once

#include <functional>
#include <optional>

#include "hopman/data/types.hpp"
#include "hopman/world/world.hpp"

namespace hopman::data {

// idx_i = floor(i * (L-1) / (K-1) + 0.5), strictly increasing with fixed
// endpoints 0 and L-1.
std::vector<int> subsample_indices(int L, int K);

// 40-step human-embodiment expert rollout; frames at subsample_indices(40, K).
// success reports check_success on the final state; failed episodes are
// discarded by the corpus builder.
Clip generate_passive_clip(const TaskTuple& task, u64 seed, int resolution,
                           bool* success = nullptr);

RobotTrajectory rollout_robot_expert(const TaskTuple& task, u64 seed, int obs_resolution,
                                     bool* success = nullptr);

// Robot and human expert rollouts from the identical reset; discarded (with a
// reason) when either side fails its success check.
std::optional<PairedExample> generate_paired_demo(const TaskTuple& task, u64 seed,
                                                  int clip_resolution, int obs_resolution,
                                                  std::string* discard_reason = nullptr);

// Re-simulates the trajectory from (task, seed, actions), re-renders the kept
// frames with the robot hidden and a hand sprite composited at the effector.
// Throws DataError when the trajectory does not reproduce.
Clip hallucinate_clip(const RobotTrajectory& traj, int clip_resolution);
PairedExample hallucinate_pair(const RobotTrajectory& traj, int clip_resolution);

struct DatasetGenConfig {
  std::string root;
  int passive = 6000;
  int collected = 400;
  int hallucinated = 1000;
  int clip_resolution = 64;
  int obs_resolution = 96;
  u64 seed = 0;
  // Open question in the level definitions: when true, SGa/SGb tuples are
  // excluded from the passive human corpus as well.
  bool exclude_sg_from_human = false;
};

DatasetManifest generate_dataset(const DatasetGenConfig& cfg,
                                 const std::function<void(const std::string&)>& log = nullptr);

}  // namespace hopman::data
