#pragma once

#include <filesystem>

#include "hopman/data/types.hpp"
#include "hopman/diffusion/planner.hpp"
#include "hopman/translation/policy.hpp"

namespace hopman::data {

// On-disk layout:
//   manifest.json
//   passive/<id>/{x0.png, xg.png, m0..m6.png, meta.json}
//   paired/<id>/{human/{x0.png, xg.png, m0..m6.png, meta.json},
//                robot/{obs_00..obs_39.png, actions.json}, meta.json}
// Writers return the combined CRC32 of the example's files.

u32 write_clip_dir(const std::filesystem::path& dir, const Clip& clip);
u32 write_paired_dir(const std::filesystem::path& dir, const PairedExample& ex);
void write_manifest(const std::string& root, const DatasetManifest& man);

Clip read_clip_dir(const std::filesystem::path& dir);
PairedExample read_paired_dir(const std::filesystem::path& dir);

DatasetManifest read_manifest(const std::string& root);
// Counts, presence and per-example checksums; throws DataError on corruption.
void verify_dataset(const std::string& root, const DatasetManifest& man);
// read_manifest + verify_dataset.
DatasetManifest read_dataset(const std::string& root);

// Planner training examples from the passive corpus, resized to the model
// resolution (bilinear RGB, nearest masks).
std::vector<diffusion::PlannerExample<float>> load_planner_corpus(
    const std::string& root, const DatasetManifest& man, const diffusion::PlannerConfig& cfg,
    int limit = -1);

diffusion::PlannerExample<float> clip_to_planner_example(const Clip& clip,
                                                         const diffusion::PlannerConfig& cfg);

// Policy training corpora per training condition:
//   "P"    collected pairs only
//   "H"    hallucinated pairs only
//   "P+H"  both
//   "BC"   robot side of everything, goal = final observation, no plans
std::vector<translation::PolicyTrajectory> load_policy_corpus(
    const std::string& root, const DatasetManifest& man, const std::string& condition,
    const translation::PolicyConfig& cfg, int limit = -1);

}  // namespace hopman::data
