#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hopman/data/datagen.hpp"
#include "hopman/diffusion/unet.hpp"
#include "hopman/eval/rollout.hpp"
#include "hopman/translation/policy.hpp"

namespace hopman::cfg {

// Full default tree; every field has a default except dataset.root.
nlohmann::json default_config();

// Named preset applied between the defaults and the config file:
// desk (= defaults), desk-fast (reduced resolutions/budgets for smoke and
// study runs), paper-doc (documents paper-scale hyperparameters).
void apply_profile(nlohmann::json& tree, const std::string& profile);

// Unknown keys and type mismatches are rejected with the offending path.
void merge_config_file(nlohmann::json& tree, const std::string& path);
void merge_config_json(nlohmann::json& tree, const nlohmann::json& file, const std::string& where);

// Dotted-path override, e.g. ("planner.resolution", "32").
void apply_override(nlohmann::json& tree, const std::string& dotted, const std::string& value);

struct RunConfig {
  nlohmann::json tree;

  u64 seed() const { return tree.at("seed").get<u64>(); }
  std::string profile() const { return tree.at("profile").get<std::string>(); }
  std::string out_dir() const { return tree.at("out").get<std::string>(); }
  std::string dataset_root() const;  // throws ConfigError when unset

  diffusion::PlannerConfig planner() const;
  translation::PolicyConfig policy(const std::string& condition) const;
  data::DatasetGenConfig dataset() const;

  struct EvalOptions {
    std::string condition;
    std::string plan;  // predicted | oracle | none
    int episodes_per_skill;
    int max_steps;
    double ensemble_decay;
    std::vector<data::Level> levels;
    u64 base_seed;
    std::vector<eval::OrderingExpectation> orderings;
  };
  EvalOptions eval_options() const;

  struct TrainBudget {
    int batch_size;
    double lr;
    int max_steps;
    int checkpoint_every;
    double ema_decay = 0;  // planner only
  };
  TrainBudget planner_budget() const;
  TrainBudget policy_budget() const;
};

// defaults -> profile -> file -> overrides, in that precedence.
RunConfig resolve_config(const std::optional<std::string>& file,
                         const std::optional<std::string>& profile,
                         const std::vector<std::pair<std::string, std::string>>& overrides);

}  // namespace hopman::cfg
