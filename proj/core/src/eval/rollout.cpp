#include "hopman/eval/rollout.hpp"

#include <algorithm>

#include "hopman/data/datagen.hpp"
#include "hopman/world/world.hpp"

namespace hopman::eval {

using world::Embodiment;
using world::SceneState;
using world::Skill;

const char* to_string(PlanSource p) {
  switch (p) {
    case PlanSource::kPredicted: return "predicted";
    case PlanSource::kOracle: return "oracle";
    case PlanSource::kNone: return "none";
  }
  return "?";
}

namespace {

struct StagedEpisode {
  u64 seed = 0;
  std::vector<Image> oracle_masks;  // K frames at clip resolution
  Image goal_human;                 // human-embodiment achieved render (clip res)
  Image goal_robot;                 // robot-embodiment achieved render (obs res)
};

// Goal images come from expert rollouts of the same reset (the desk analog of
// photographing an achieved configuration). Seeds where either embodiment's
// expert fails are replaced deterministically so every episode is well-posed.
StagedEpisode stage_episode(const TaskTuple& task, u64 seed, int clip_res, int obs_res,
                            int retries) {
  for (int k = 0; k <= retries; ++k) {
    const u64 s = seed + u64(k) * 982451653ULL;
    bool human_ok = false, robot_ok = false;
    data::Clip clip = data::generate_passive_clip(task, s, clip_res, &human_ok);
    if (!human_ok) continue;
    data::RobotTrajectory traj = data::rollout_robot_expert(task, s, obs_res, &robot_ok);
    if (!robot_ok) continue;
    StagedEpisode st;
    st.seed = s;
    st.oracle_masks = std::move(clip.masks);
    st.goal_human = std::move(clip.xg);
    st.goal_robot = std::move(traj.goal_image);
    return st;
  }
  throw DataError("stage_episode: no achievable seed found for " + task.id());
}

}  // namespace

EpisodeResult rollout_episode(EvalComponents& comp, const TaskTuple& task, Level level, u64 seed,
                              const EpisodeOptions& opts) {
  if (!comp.policy) throw ConfigError("rollout: policy missing");
  const translation::PolicyConfig& pcfg = comp.policy->cfg;
  if (opts.plan == PlanSource::kPredicted) {
    if (!comp.planner || !comp.sched)
      throw ConfigError("rollout: predicted plans need a planner checkpoint (train-planner)");
    if (!comp.policy_split.empty() && !comp.planner_split.empty() &&
        comp.policy_split != comp.planner_split)
      throw ConfigError("rollout: policy and planner checkpoints come from different splits (" +
                        comp.policy_split + " vs " + comp.planner_split + ")");
  }
  if (opts.plan == PlanSource::kNone && pcfg.plan_tokens)
    throw ConfigError("rollout: plan-conditioned policy queried without a plan source");
  if (opts.plan != PlanSource::kNone && !pcfg.plan_tokens)
    throw ConfigError("rollout: BC policy cannot consume plans");

  const StagedEpisode staged =
      stage_episode(task, seed, opts.clip_resolution, pcfg.obs_resolution, opts.stage_retries);

  EpisodeResult res;
  res.task = task;
  res.level = level;
  res.seed = staged.seed;
  res.plan_source = opts.plan;

  SceneState state = world::reset(task, staged.seed, Embodiment::kRobot);

  // Plan once at t = 0.
  std::vector<Image> plan;
  if (opts.plan == PlanSource::kOracle) {
    plan = staged.oracle_masks;
  } else if (opts.plan == PlanSource::kPredicted) {
    const Image x0 = world::render_rgb(state, opts.clip_resolution);
    plan = diffusion::sample_plan(*comp.planner, x0, &staged.goal_human, *comp.sched,
                                  hash_mix(staged.seed, 0x9e37));
    res.plan_calls = 1;
  }

  const Image& goal_img = pcfg.plan_tokens ? staged.goal_human : staged.goal_robot;
  translation::EnsembleBuffer buffer(pcfg.chunk, opts.ensemble_decay);
  std::vector<Image> obs_hist;
  std::vector<world::Action> executed;

  for (int t = 0; t < opts.max_steps; ++t) {
    obs_hist.push_back(world::render_rgb(state, pcfg.obs_resolution));

    translation::RawWindow w;
    const int h0 = std::max(0, int(obs_hist.size()) - pcfg.history);
    for (size_t i = size_t(h0); i < obs_hist.size(); ++i) w.obs.push_back(&obs_hist[i]);
    const int a0 = std::max(0, int(executed.size()) - pcfg.past_actions());
    for (size_t i = size_t(a0); i < executed.size(); ++i) w.past_actions.push_back(executed[i]);
    w.goal = &goal_img;
    if (pcfg.plan_tokens)
      for (const auto& f : plan) w.plan.push_back(&f);

    const nn::Tensor<float> chunk = translation::predict_chunk(*comp.policy, w);
    buffer.push(t, chunk.v, pcfg.action_dim);
    const world::Action act = translation::temporal_ensemble(buffer, t);
    state = world::step(state, act);
    executed.push_back(act);
    res.steps_used = t + 1;
    if (world::check_success(state, task)) {
      res.success = true;
      break;
    }
  }
  res.final_object_error = world::goal_error(state, task);
  return res;
}

void ResultTable::add(Level level, Skill skill, bool success) {
  auto& c = cells[{level, skill}];
  c.episodes += 1;
  c.successes += success ? 1 : 0;
}

CellStats ResultTable::aggregate(const std::vector<Level>& levels) const {
  CellStats out;
  for (const auto& [key, c] : cells)
    if (std::find(levels.begin(), levels.end(), key.first) != levels.end()) {
      out.episodes += c.episodes;
      out.successes += c.successes;
    }
  return out;
}

CellStats ResultTable::level_stats(Level level) const { return aggregate({level}); }

ResultTable evaluate_level(EvalComponents& comp, const std::string& condition,
                           const data::SplitSpec& split, Level level, int episodes_per_skill,
                           u64 base_seed, const EpisodeOptions& opts,
                           const std::function<void(const EpisodeResult&)>& on_episode) {
  validate_splits(split);
  const auto it = split.eval_levels.find(level);
  if (it == split.eval_levels.end() || it->second.empty())
    throw ConfigError(std::string("evaluate_level: empty level ") + data::to_string(level));

  // Group tuples by skill; round-robin within each skill bucket.
  std::map<Skill, std::vector<const TaskTuple*>> by_skill;
  for (const auto& t : it->second) by_skill[t.skill].push_back(&t);

  ResultTable table;
  table.condition = condition;
  for (const auto& [skill, tuples] : by_skill) {
    for (int e = 0; e < episodes_per_skill; ++e) {
      const TaskTuple& task = *tuples[size_t(e) % tuples.size()];
      // Seed depends only on (task, episode index): paired across conditions.
      const u64 seed = hash_mix(fnv1a64(task.id()), base_seed + u64(e));
      EpisodeResult r = rollout_episode(comp, task, level, seed, opts);
      table.add(level, skill, r.success);
      if (on_episode) on_episode(r);
    }
  }
  return table;
}

ResultTable evaluate_split(EvalComponents& comp, const std::string& condition,
                           const data::SplitSpec& split, const std::vector<Level>& levels,
                           int episodes_per_skill, u64 base_seed, const EpisodeOptions& opts,
                           const std::function<void(const EpisodeResult&)>& on_episode) {
  ResultTable table;
  table.condition = condition;
  for (Level level : levels) {
    ResultTable lt =
        evaluate_level(comp, condition, split, level, episodes_per_skill, base_seed, opts, on_episode);
    for (const auto& [key, c] : lt.cells) {
      auto& dst = table.cells[key];
      dst.episodes += c.episodes;
      dst.successes += c.successes;
    }
  }
  return table;
}

OrderingOutcome check_ordering(const std::map<std::string, ResultTable>& tables,
                               const OrderingExpectation& exp) {
  const auto bi = tables.find(exp.better);
  const auto wi = tables.find(exp.worse);
  if (bi == tables.end() || wi == tables.end())
    throw ConfigError("check_ordering: missing condition table (" + exp.better + " vs " +
                      exp.worse + ")");
  OrderingOutcome out;
  out.expectation = exp;
  out.better_rate = bi->second.aggregate(exp.levels).rate();
  out.worse_rate = wi->second.aggregate(exp.levels).rate();
  out.pass = out.better_rate >= out.worse_rate + exp.margin;
  return out;
}

}  // namespace hopman::eval
