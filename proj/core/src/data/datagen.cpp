#include "hopman/data/datagen.hpp"

#include <cmath>
#include <filesystem>

#include "hopman/data/dataset_io.hpp"
#include "hopman/data/splits.hpp"
#include "hopman/rng.hpp"

namespace hopman::data {

namespace fs = std::filesystem;
using world::Embodiment;
using world::SceneState;

std::vector<int> subsample_indices(int L, int K) {
  if (K < 2) throw DataError("subsample_indices: K must be >= 2");
  if (L < K) throw DataError("subsample_indices: L < K");
  std::vector<int> idx(size_t(K));
  for (int i = 0; i < K; ++i)
    idx[size_t(i)] = int(std::floor(double(i) * double(L - 1) / double(K - 1) + 0.5));
  return idx;
}

Clip generate_passive_clip(const TaskTuple& task, u64 seed, int resolution, bool* success) {
  const auto kept = subsample_indices(kHorizon, kPlanFrames);
  SceneState st = world::reset(task, seed, Embodiment::kHuman);
  Clip clip;
  clip.task = task;
  clip.seed = seed;
  clip.source = ClipSource::kHumanScripted;
  clip.x0 = world::render_rgb(st, resolution);
  size_t ki = 0;
  for (int t = 0; t < kHorizon; ++t) {
    if (ki < kept.size() && kept[ki] == t) {
      clip.masks.push_back(world::render_masks(st, resolution));
      ++ki;
    }
    if (t == kHorizon - 1) clip.xg = world::render_rgb(st, resolution);
    st = world::step_human(st, world::scripted_expert_human(task, st));
  }
  if (success) *success = world::check_success(st, task);
  return clip;
}

RobotTrajectory rollout_robot_expert(const TaskTuple& task, u64 seed, int obs_resolution,
                                     bool* success) {
  SceneState st = world::reset(task, seed, Embodiment::kRobot);
  RobotTrajectory traj;
  traj.task = task;
  traj.seed = seed;
  for (int t = 0; t < kHorizon; ++t) {
    traj.observations.push_back(world::render_rgb(st, obs_resolution));
    const world::Action a = world::scripted_expert(task, st);
    traj.actions.push_back(a);
    st = world::step(st, a);
  }
  traj.goal_image = traj.observations.back();
  if (success) *success = world::check_success(st, task);
  return traj;
}

std::optional<PairedExample> generate_paired_demo(const TaskTuple& task, u64 seed,
                                                  int clip_resolution, int obs_resolution,
                                                  std::string* discard_reason) {
  bool human_ok = false, robot_ok = false;
  PairedExample ex;
  ex.pairing = Pairing::kCollected;
  ex.human_clip = generate_passive_clip(task, seed, clip_resolution, &human_ok);
  ex.robot_traj = rollout_robot_expert(task, seed, obs_resolution, &robot_ok);
  if (!human_ok || !robot_ok) {
    if (discard_reason)
      *discard_reason = std::string(!human_ok ? "human" : "robot") +
                        " expert failed success check on " + task.id() + " seed " +
                        std::to_string(seed);
    return std::nullopt;
  }
  return ex;
}

Clip hallucinate_clip(const RobotTrajectory& traj, int clip_resolution) {
  if (int(traj.observations.size()) != kHorizon || int(traj.actions.size()) != kHorizon)
    throw DataError("hallucinate: trajectory must have exactly 40 frames and actions");
  const auto kept = subsample_indices(kHorizon, kPlanFrames);
  const int obs_res = traj.observations[0].w;

  SceneState st = world::reset(traj.task, traj.seed, Embodiment::kRobot);
  Clip clip;
  clip.task = traj.task;
  clip.seed = traj.seed;
  clip.source = ClipSource::kHallucinated;

  auto composite_state = [](const SceneState& s) {
    // Hide the robot; composite a hand sprite at the effector with the
    // aperture mapped from the gripper.
    SceneState view = s;
    view.agent.embodiment = Embodiment::kHuman;
    view.agent.hand_pos = world::effector_position(s.agent);
    view.agent.hand_aperture = s.agent.gripper;
    return view;
  };

  size_t ki = 0;
  for (int t = 0; t < kHorizon; ++t) {
    if (!(world::render_rgb(st, obs_res) == traj.observations[size_t(t)]))
      throw DataError("hallucinate: trajectory does not reproduce from its seed (frame " +
                      std::to_string(t) + ")");
    const SceneState view = composite_state(st);
    if (t == 0) clip.x0 = world::render_rgb(view, clip_resolution);
    if (t == kHorizon - 1) clip.xg = world::render_rgb(view, clip_resolution);
    if (ki < kept.size() && kept[ki] == t) {
      clip.masks.push_back(world::render_masks(view, clip_resolution));
      ++ki;
    }
    st = world::step(st, traj.actions[size_t(t)]);
  }
  return clip;
}

PairedExample hallucinate_pair(const RobotTrajectory& traj, int clip_resolution) {
  PairedExample ex;
  ex.pairing = Pairing::kHallucinated;
  ex.robot_traj = traj;
  ex.human_clip = hallucinate_clip(traj, clip_resolution);
  return ex;
}

DatasetManifest generate_dataset(const DatasetGenConfig& cfg,
                                 const std::function<void(const std::string&)>& log) {
  if (cfg.root.empty()) throw ConfigError("gen-data: dataset root not set");
  auto say = [&](const std::string& s) {
    if (log) log(s);
  };
  fs::create_directories(cfg.root);

  SplitSpec split = build_splits(world::all_tasks(), cfg.seed);
  if (cfg.exclude_sg_from_human) {
    std::vector<TaskTuple> human;
    for (const auto& t : split.train_human)
      if (t.instance.category != world::Category::kCup && t.skill != world::Skill::kStack)
        human.push_back(t);
    split.train_human = human;
  }

  DatasetManifest man;
  man.clip_resolution = cfg.clip_resolution;
  man.obs_resolution = cfg.obs_resolution;
  man.split = split;
  man.gen_config = {{"passive", cfg.passive},
                    {"collected", cfg.collected},
                    {"hallucinated", cfg.hallucinated},
                    {"clip_resolution", cfg.clip_resolution},
                    {"obs_resolution", cfg.obs_resolution},
                    {"seed", cfg.seed},
                    {"exclude_sg_from_human", cfg.exclude_sg_from_human}};

  // Passive human clips over the full train_human catalog.
  say("generating " + std::to_string(cfg.passive) + " passive clips");
  int written = 0;
  u64 salt = 0;
  for (int i = 0; i < cfg.passive; ++i) {
    const TaskTuple& task = split.train_human[size_t(i) % split.train_human.size()];
    Clip clip;
    bool ok = false;
    int tries = 0;
    for (; tries < 50 && !ok; ++tries)
      clip = generate_passive_clip(task, 1000000 + u64(i) + (salt + u64(tries)) * 7919u,
                                   cfg.clip_resolution, &ok);
    if (!ok) throw DataError("gen-data: passive expert kept failing on " + task.id());
    salt += u64(tries - 1);
    char id[32];
    std::snprintf(id, sizeof(id), "p%06d", written);
    man.example_crc["passive/" + std::string(id)] = write_clip_dir(
        fs::path(cfg.root) / "passive" / id, clip);
    ++written;
  }
  man.passive = written;

  // Collected pairs over train_robot.
  say("generating " + std::to_string(cfg.collected) + " collected pairs");
  written = 0;
  salt = 0;
  for (int i = 0; i < cfg.collected; ++i) {
    const TaskTuple& task = split.train_robot[size_t(i) % split.train_robot.size()];
    std::optional<PairedExample> ex;
    std::string reason;
    int tries = 0;
    for (; tries < 50 && !ex; ++tries) {
      ex = generate_paired_demo(task, 2000000 + u64(i) + (salt + u64(tries)) * 7919u,
                                cfg.clip_resolution, cfg.obs_resolution, &reason);
      if (!ex) say("discarded: " + reason);
    }
    if (!ex) throw DataError("gen-data: paired experts kept failing on " + task.id());
    salt += u64(tries - 1);
    char id[32];
    std::snprintf(id, sizeof(id), "c%06d", written);
    man.example_crc["paired/" + std::string(id)] =
        write_paired_dir(fs::path(cfg.root) / "paired" / id, *ex);
    ++written;
  }
  man.collected = written;

  // Hallucinated pairs from robot-only rollouts over train_robot.
  say("generating " + std::to_string(cfg.hallucinated) + " hallucinated pairs");
  written = 0;
  salt = 0;
  for (int i = 0; i < cfg.hallucinated; ++i) {
    const TaskTuple& task = split.train_robot[size_t(i) % split.train_robot.size()];
    RobotTrajectory traj;
    bool ok = false;
    int tries = 0;
    for (; tries < 50 && !ok; ++tries)
      traj = rollout_robot_expert(task, 3000000 + u64(i) + (salt + u64(tries)) * 7919u,
                                  cfg.obs_resolution, &ok);
    if (!ok) throw DataError("gen-data: robot expert kept failing on " + task.id());
    salt += u64(tries - 1);
    PairedExample ex = hallucinate_pair(traj, cfg.clip_resolution);
    char id[32];
    std::snprintf(id, sizeof(id), "h%06d", written);
    man.example_crc["paired/" + std::string(id)] =
        write_paired_dir(fs::path(cfg.root) / "paired" / id, ex);
    ++written;
  }
  man.hallucinated = written;

  write_manifest(cfg.root, man);
  say("dataset complete: " + std::to_string(man.passive) + " passive, " +
      std::to_string(man.collected) + " collected, " + std::to_string(man.hallucinated) +
      " hallucinated");
  return man;
}

}  // namespace hopman::data
