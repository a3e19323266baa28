#pragma once

#include <map>
#include <optional>

#include "hopman/data/types.hpp"
#include "hopman/diffusion/planner.hpp"
#include "hopman/translation/ensemble.hpp"
#include "hopman/translation/policy.hpp"

namespace hopman::eval {

using data::Level;
using data::TaskTuple;

enum class PlanSource { kPredicted, kOracle, kNone };
const char* to_string(PlanSource p);

struct EpisodeResult {
  TaskTuple task;
  Level level = Level::kMG;
  u64 seed = 0;
  bool success = false;
  int steps_used = 0;
  double final_object_error = 0;
  PlanSource plan_source = PlanSource::kOracle;
  int plan_calls = 0;  // sample_plan invocations; fixed-plan contract wants 1
};

struct EvalComponents {
  translation::PolicyNet<float>* policy = nullptr;
  diffusion::UNet<float>* planner = nullptr;  // required for kPredicted
  const diffusion::NoiseSchedule* sched = nullptr;
  std::string policy_split;   // split checksums recorded in the checkpoints;
  std::string planner_split;  // mismatch is a component-version error
};

struct EpisodeOptions {
  int max_steps = 40;
  double ensemble_decay = 0.01;
  PlanSource plan = PlanSource::kOracle;
  int clip_resolution = 64;  // oracle masks / goal renders
  int stage_retries = 60;
};

// Closed-loop episode: reset, stage the goal images from expert rollouts of
// the same reset, obtain the plan once at t = 0, then encode/forward/ensemble/
// step until success or the step limit.
EpisodeResult rollout_episode(EvalComponents& comp, const TaskTuple& task, Level level, u64 seed,
                              const EpisodeOptions& opts);

struct CellStats {
  int episodes = 0;
  int successes = 0;
  double rate() const { return episodes ? double(successes) / episodes : 0.0; }
};

struct ResultTable {
  std::string condition;
  std::map<std::pair<Level, world::Skill>, CellStats> cells;

  void add(Level level, world::Skill skill, bool success);
  CellStats aggregate(const std::vector<Level>& levels) const;
  CellStats level_stats(Level level) const;
};

// Seeded episodes for every tuple of a level, balanced per skill. Episode
// seeds depend only on (task, episode index), so different conditions see
// identical initial states.
ResultTable evaluate_level(EvalComponents& comp, const std::string& condition,
                           const data::SplitSpec& split, Level level, int episodes_per_skill,
                           u64 base_seed, const EpisodeOptions& opts,
                           const std::function<void(const EpisodeResult&)>& on_episode = nullptr);

ResultTable evaluate_split(EvalComponents& comp, const std::string& condition,
                           const data::SplitSpec& split, const std::vector<Level>& levels,
                           int episodes_per_skill, u64 base_seed, const EpisodeOptions& opts,
                           const std::function<void(const EpisodeResult&)>& on_episode = nullptr);

struct OrderingExpectation {
  std::string better, worse;
  std::vector<Level> levels;
  double margin = 0.0;
};

struct OrderingOutcome {
  OrderingExpectation expectation;
  double better_rate = 0, worse_rate = 0;
  bool pass = false;
};

OrderingOutcome check_ordering(const std::map<std::string, ResultTable>& tables,
                               const OrderingExpectation& exp);

}  // namespace hopman::eval
