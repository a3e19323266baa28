#include "hopman/data/splits.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <set>

#include "hopman/png_io.hpp"
#include "hopman/rng.hpp"

namespace hopman::data {

using world::Category;
using world::Skill;

const char* to_string(Level l) {
  switch (l) {
    case Level::kMG: return "MG";
    case Level::kGa: return "Ga";
    case Level::kGb: return "Gb";
    case Level::kSGa: return "SGa";
    case Level::kSGb: return "SGb";
  }
  return "?";
}

Level level_from_string(const std::string& s) {
  for (Level l : all_levels())
    if (s == to_string(l)) return l;
  throw ConfigError("unknown generalization level: " + s);
}

bool SplitSpec::in_train_robot(const TaskTuple& t) const {
  return std::find(train_robot.begin(), train_robot.end(), t) != train_robot.end();
}

nlohmann::json SplitSpec::to_json() const {
  nlohmann::json j;
  j["seed"] = seed;
  auto tasks_json = [](const std::vector<TaskTuple>& ts) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& t : ts) a.push_back(task_to_json(t));
    return a;
  };
  j["train_robot"] = tasks_json(train_robot);
  j["train_human"] = tasks_json(train_human);
  for (const auto& [level, ts] : eval_levels) j["eval"][to_string(level)] = tasks_json(ts);
  return j;
}

SplitSpec SplitSpec::from_json(const nlohmann::json& j) {
  SplitSpec s;
  s.seed = j.at("seed").get<u64>();
  auto tasks_from = [](const nlohmann::json& a) {
    std::vector<TaskTuple> ts;
    for (const auto& t : a) ts.push_back(task_from_json(t));
    return ts;
  };
  s.train_robot = tasks_from(j.at("train_robot"));
  s.train_human = tasks_from(j.at("train_human"));
  for (Level l : all_levels())
    if (j.at("eval").contains(to_string(l)))
      s.eval_levels[l] = tasks_from(j.at("eval").at(to_string(l)));
  return s;
}

u32 SplitSpec::checksum() const {
  const std::string dump = to_json().dump();
  return crc32_bytes(dump.data(), dump.size());
}

double quantize_g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return std::strtod(buf, nullptr);
}

nlohmann::json task_to_json(const TaskTuple& t) {
  nlohmann::json j;
  j["category"] = world::to_string(t.instance.category);
  j["instance_id"] = t.instance.instance_id;
  j["color"] = {t.instance.color.r, t.instance.color.g, t.instance.color.b};
  j["size"] = world::to_string(t.instance.size);
  j["skill"] = world::to_string(t.skill);
  if (t.articulation_target) j["articulation_target"] = *t.articulation_target;
  return j;
}

TaskTuple task_from_json(const nlohmann::json& j) {
  TaskTuple t;
  t.instance.category = world::category_from_string(j.at("category").get<std::string>());
  t.instance.instance_id = j.at("instance_id").get<std::string>();
  const auto c = j.at("color");
  t.instance.color = {u8(c.at(0).get<int>()), u8(c.at(1).get<int>()), u8(c.at(2).get<int>())};
  t.instance.size = world::size_from_string(j.at("size").get<std::string>());
  t.skill = world::skill_from_string(j.at("skill").get<std::string>());
  if (j.contains("articulation_target"))
    t.articulation_target = j.at("articulation_target").get<double>();
  return t;
}

nlohmann::json action_to_json(const world::Action& a) {
  nlohmann::json arr = nlohmann::json::array();
  for (float v : a.v) arr.push_back(quantize_g9(double(v)));
  return arr;
}

world::Action action_from_json(const nlohmann::json& j) {
  world::Action a;
  for (size_t i = 0; i < 4; ++i) a.v[i] = float(j.at(i).get<double>());
  return a;
}

SplitSpec build_splits(const std::vector<TaskTuple>& catalog, u64 seed) {
  if (catalog.empty()) throw ConfigError("build_splits: empty catalog");
  // Applicability coverage check.
  for (const auto& inst : world::catalog_instances())
    for (Skill s : world::skill_applicability(inst.category)) {
      TaskTuple probe;
      probe.instance = inst;
      probe.skill = s;
      bool found = false;
      for (const auto& t : catalog)
        if (t.instance == inst && t.skill == s) found = true;
      if (!found)
        throw ConfigError("build_splits: catalog does not cover " + probe.id());
    }

  // One held-out instance per category (seeded choice) drives the Ga level.
  Rng rng(hash_mix(seed, 0xdead5eedULL));
  std::map<Category, std::string> holdout;
  for (Category c : {Category::kBlock, Category::kBall, Category::kDrawer, Category::kDoor,
                     Category::kCup}) {
    std::vector<std::string> ids;
    for (const auto& t : catalog)
      if (t.instance.category == c &&
          std::find(ids.begin(), ids.end(), t.instance.instance_id) == ids.end())
        ids.push_back(t.instance.instance_id);
    if (ids.size() < 2) throw ConfigError("build_splits: need >= 2 instances per category");
    holdout[c] = ids[size_t(rng.uniform_int(0, int(ids.size()) - 1))];
  }

  SplitSpec split;
  split.seed = seed;
  split.train_human = catalog;
  for (const auto& t : catalog) {
    const Category c = t.instance.category;
    const bool held_instance = t.instance.instance_id == holdout[c];
    const bool door_open = c == Category::kDoor && t.skill == Skill::kOpen;
    const bool sg_category = c == Category::kCup;
    const bool sg_skill = t.skill == Skill::kStack;
    if (held_instance || door_open || sg_category || sg_skill) continue;
    split.train_robot.push_back(t);
  }
  if (split.train_robot.empty())
    throw ConfigError("build_splits: catalog too small to satisfy the exclusions");

  auto& levels = split.eval_levels;
  levels[Level::kMG] = split.train_robot;
  for (const auto& t : catalog) {
    const Category c = t.instance.category;
    const bool held_instance = t.instance.instance_id == holdout[c];
    if (t.instance.category == Category::kCup) {
      levels[Level::kSGa].push_back(t);
      continue;
    }
    if (t.skill == Skill::kStack) {
      if (!held_instance) levels[Level::kSGb].push_back(t);
      continue;
    }
    if (c == Category::kDoor && t.skill == Skill::kOpen) {
      if (!held_instance) levels[Level::kGb].push_back(t);
      continue;
    }
    if (held_instance) {
      // Unseen instance for a skill the robot has seen on this category.
      bool skill_seen = false;
      for (const auto& r : split.train_robot)
        if (r.instance.category == c && r.skill == t.skill) skill_seen = true;
      if (skill_seen) levels[Level::kGa].push_back(t);
    }
  }
  for (Level l : all_levels())
    if (levels[l].empty())
      throw ConfigError(std::string("build_splits: level ") + to_string(l) + " is empty");
  validate_splits(split);
  return split;
}

void validate_splits(const SplitSpec& split) {
  auto in_human = [&](const TaskTuple& t) {
    return std::find(split.train_human.begin(), split.train_human.end(), t) !=
           split.train_human.end();
  };
  auto robot_has = [&](auto pred) {
    for (const auto& t : split.train_robot)
      if (pred(t)) return true;
    return false;
  };

  for (const auto& [level, tasks] : split.eval_levels)
    for (const auto& t : tasks) {
      if (!world::skill_applies(t.instance.category, t.skill))
        throw ConfigError("split: inapplicable tuple " + t.id());
      if (!in_human(t))
        throw ConfigError("split: eval tuple missing from train_human: " + t.id());
    }

  for (const auto& t : split.eval_levels.at(Level::kMG))
    if (!split.in_train_robot(t))
      throw ConfigError("split: MG tuple not in train_robot: " + t.id());

  for (const auto& t : split.eval_levels.at(Level::kGa)) {
    if (robot_has([&](const TaskTuple& r) { return r.instance == t.instance; }))
      throw ConfigError("split: Ga instance appears in train_robot: " + t.id());
    if (!robot_has([&](const TaskTuple& r) {
          return r.instance.category == t.instance.category && r.skill == t.skill;
        }))
      throw ConfigError("split: Ga (category, skill) unseen in train_robot: " + t.id());
  }

  for (const auto& t : split.eval_levels.at(Level::kGb)) {
    if (robot_has([&](const TaskTuple& r) {
          return r.instance.category == t.instance.category && r.skill == t.skill;
        }))
      throw ConfigError("split: Gb combination present in train_robot: " + t.id());
    if (!robot_has([&](const TaskTuple& r) { return r.instance.category == t.instance.category; }))
      throw ConfigError("split: Gb category never seen by the robot: " + t.id());
    if (!robot_has([&](const TaskTuple& r) { return r.skill == t.skill; }))
      throw ConfigError("split: Gb skill never seen by the robot: " + t.id());
  }

  for (const auto& t : split.eval_levels.at(Level::kSGa))
    if (robot_has([&](const TaskTuple& r) { return r.instance.category == t.instance.category; }))
      throw ConfigError("split: SGa category appears in train_robot: " + t.id());

  for (const auto& t : split.eval_levels.at(Level::kSGb))
    if (robot_has([&](const TaskTuple& r) { return r.skill == t.skill; }))
      throw ConfigError("split: SGb skill appears in train_robot: " + t.id());
}

}  // namespace hopman::data
