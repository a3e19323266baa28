#pragma once

#include <memory>

#include "hopman/config.hpp"
#include "hopman/eval/report.hpp"

namespace hopman::pipeline {

// Artifact layout under the run directory:
//   <out>/planner/{checkpoint.ckpt, loss.csv, run_record.json}
//   <out>/policy_<condition>/{checkpoint.ckpt, loss.csv, run_record.json}
//   <out>/results/<run_id>/{results.csv, level_<L>.png, summary.json, run_record.json}
std::string planner_checkpoint_path(const cfg::RunConfig& rc);
std::string policy_checkpoint_path(const cfg::RunConfig& rc, const std::string& condition);
std::string results_dir(const cfg::RunConfig& rc, const std::string& run_id);

data::DatasetManifest run_gen_data(const cfg::RunConfig& rc,
                                   const std::function<void(const std::string&)>& log = nullptr);

std::string run_train_planner(const cfg::RunConfig& rc,
                              const std::function<void(const std::string&)>& log = nullptr);

std::string run_train_policy(const cfg::RunConfig& rc, const std::string& condition,
                             const std::function<void(const std::string&)>& log = nullptr);

// Evaluates eval.condition with eval.plan over eval.levels; writes the report
// directory and returns its path.
std::string run_eval(const cfg::RunConfig& rc,
                     const std::function<void(const std::string&)>& log = nullptr);

// Merges results.csv files from one or more report directories, re-renders
// charts and ordering checks into `out_dir`.
std::string run_report(const cfg::RunConfig& rc, const std::vector<std::string>& inputs,
                       const std::string& out_dir,
                       const std::function<void(const std::string&)>& log = nullptr);

// Checkpoint loading; the model is rebuilt from the architecture recorded in
// the checkpoint header.
struct LoadedPlanner {
  std::unique_ptr<diffusion::UNet<float>> model;
  diffusion::NoiseSchedule sched;
  nlohmann::json meta;
};
LoadedPlanner load_planner(const std::string& path);

struct LoadedPolicy {
  std::unique_ptr<translation::PolicyNet<float>> model;
  nlohmann::json meta;
};
LoadedPolicy load_policy(const std::string& path);

// run_record.json written atomically at run end.
void write_run_record(const std::string& dir, const std::string& command,
                      const nlohmann::json& config_snapshot,
                      const std::map<std::string, std::string>& outputs);

}  // namespace hopman::pipeline
