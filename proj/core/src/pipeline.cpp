#include "hopman/pipeline.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>

#include "hopman/data/dataset_io.hpp"
#include "hopman/nn/serialize.hpp"
#include "hopman/png_io.hpp"

namespace hopman::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

std::string planner_checkpoint_path(const cfg::RunConfig& rc) {
  return (fs::path(rc.out_dir()) / "planner" / "checkpoint.ckpt").string();
}

std::string policy_checkpoint_path(const cfg::RunConfig& rc, const std::string& condition) {
  return (fs::path(rc.out_dir()) / ("policy_" + condition) / "checkpoint.ckpt").string();
}

std::string results_dir(const cfg::RunConfig& rc, const std::string& run_id) {
  return (fs::path(rc.out_dir()) / "results" / run_id).string();
}

void write_run_record(const std::string& dir, const std::string& command,
                      const json& config_snapshot,
                      const std::map<std::string, std::string>& outputs) {
  json rec;
  rec["command"] = command;
  rec["config"] = config_snapshot;
  rec["code_version"] = kArtifactVersion;
  const auto now = std::chrono::system_clock::now().time_since_epoch();
  rec["end_unix_ms"] = std::chrono::duration_cast<std::chrono::milliseconds>(now).count();
  json outs = json::object();
  for (const auto& [name, path] : outputs) {
    if (fs::exists(path)) outs[name] = {{"path", path}, {"crc32", crc32_file(path)}};
  }
  rec["outputs"] = outs;
  fs::create_directories(dir);
  const fs::path tmp = fs::path(dir) / ".run_record.json.tmp";
  {
    std::ofstream f(tmp, std::ios::trunc);
    if (!f) throw DataError("run record: cannot write " + tmp.string());
    f << rec.dump(2) << "\n";
  }
  fs::rename(tmp, fs::path(dir) / "run_record.json");
}

data::DatasetManifest run_gen_data(const cfg::RunConfig& rc,
                                   const std::function<void(const std::string&)>& log) {
  const auto gen_cfg = rc.dataset();
  data::DatasetManifest man = data::generate_dataset(gen_cfg, log);
  write_run_record(gen_cfg.root, "gen-data", rc.tree,
                   {{"manifest", (fs::path(gen_cfg.root) / "manifest.json").string()}});
  return man;
}

namespace {

json planner_meta(const cfg::RunConfig& rc, const data::DatasetManifest& man) {
  json meta;
  meta["model"] = "planner";
  meta["planner_config"] = rc.tree.at("planner");
  meta["split_checksum"] = man.split.checksum();
  meta["dataset_root"] = rc.dataset_root();
  meta["seed"] = rc.seed();
  return meta;
}

diffusion::PlannerConfig planner_cfg_from_meta(const json& meta) {
  cfg::RunConfig probe{cfg::default_config()};
  probe.tree["planner"] = meta.at("planner_config");
  return probe.planner();
}

translation::PolicyConfig policy_cfg_from_meta(const json& meta) {
  cfg::RunConfig probe{cfg::default_config()};
  probe.tree["policy"] = meta.at("policy_config");
  return probe.policy(meta.at("condition").get<std::string>());
}

}  // namespace

std::string run_train_planner(const cfg::RunConfig& rc,
                              const std::function<void(const std::string&)>& log) {
  const std::string root = rc.dataset_root();
  data::DatasetManifest man = data::read_manifest(root);
  const diffusion::PlannerConfig pcfg = rc.planner();
  if (log) log("loading passive corpus (" + std::to_string(man.passive) + " clips)");
  const auto corpus = data::load_planner_corpus(root, man, pcfg);

  diffusion::UNet<float> model(pcfg, hash_mix(rc.seed(), 0x11));
  const auto sched = diffusion::make_schedule(pcfg.T, pcfg.beta_start, pcfg.beta_end);
  const auto budget = rc.planner_budget();

  const std::string ckpt = planner_checkpoint_path(rc);
  fs::create_directories(fs::path(ckpt).parent_path());
  diffusion::PlannerTrainOptions opts;
  opts.batch_size = budget.batch_size;
  opts.lr = budget.lr;
  opts.max_steps = budget.max_steps;
  opts.seed = rc.seed();
  opts.ema_decay = budget.ema_decay;
  opts.checkpoint_path = ckpt;
  opts.checkpoint_every = budget.checkpoint_every;
  opts.checkpoint_meta = planner_meta(rc, man);
  if (log)
    opts.progress = [&](int step, double loss) {
      if (step % 200 == 0)
        log("planner step " + std::to_string(step) + " loss " + std::to_string(loss));
    };
  const TrainCurve curve = diffusion::train_planner(model, corpus, sched, opts);
  const std::string curve_path = (fs::path(ckpt).parent_path() / "loss.csv").string();
  curve.to_csv(curve_path);
  write_run_record(fs::path(ckpt).parent_path().string(), "train-planner", rc.tree,
                   {{"checkpoint", ckpt}, {"loss_curve", curve_path}});
  return ckpt;
}

std::string run_train_policy(const cfg::RunConfig& rc, const std::string& condition,
                             const std::function<void(const std::string&)>& log) {
  const std::string root = rc.dataset_root();
  data::DatasetManifest man = data::read_manifest(root);
  const translation::PolicyConfig pcfg = rc.policy(condition);
  if (log) log("loading policy corpus for condition " + condition);
  const auto corpus = data::load_policy_corpus(root, man, condition, pcfg);
  if (log) log("corpus: " + std::to_string(corpus.size()) + " trajectories");

  translation::PolicyNet<float> model(pcfg, hash_mix(rc.seed(), 0x22));
  const auto budget = rc.policy_budget();

  json meta;
  meta["model"] = "policy";
  meta["policy_config"] = rc.tree.at("policy");
  meta["condition"] = condition;
  meta["split_checksum"] = man.split.checksum();
  meta["dataset_root"] = root;
  meta["seed"] = rc.seed();

  const std::string ckpt = policy_checkpoint_path(rc, condition);
  fs::create_directories(fs::path(ckpt).parent_path());
  translation::PolicyTrainOptions opts;
  opts.batch_size = budget.batch_size;
  opts.lr = budget.lr;
  opts.max_steps = budget.max_steps;
  opts.seed = rc.seed();
  opts.checkpoint_path = ckpt;
  opts.checkpoint_every = budget.checkpoint_every;
  opts.checkpoint_meta = meta;
  if (log)
    opts.progress = [&](int step, double loss) {
      if (step % 200 == 0)
        log("policy[" + condition + "] step " + std::to_string(step) + " loss " +
            std::to_string(loss));
    };
  const TrainCurve curve = translation::train_policy(model, corpus, opts);
  const std::string curve_path = (fs::path(ckpt).parent_path() / "loss.csv").string();
  curve.to_csv(curve_path);
  write_run_record(fs::path(ckpt).parent_path().string(), "train-policy", rc.tree,
                   {{"checkpoint", ckpt}, {"loss_curve", curve_path}});
  return ckpt;
}

LoadedPlanner load_planner(const std::string& path) {
  if (!fs::exists(path))
    throw ConfigError("planner checkpoint not found at " + path +
                      "; produce it with the train-planner command");
  LoadedPlanner out;
  out.meta = nn::peek_checkpoint_meta(path);
  const auto pcfg = planner_cfg_from_meta(out.meta);
  out.model = std::make_unique<diffusion::UNet<float>>(pcfg, 0);
  nn::load_checkpoint(path, out.model->params());
  out.sched = diffusion::make_schedule(pcfg.T, pcfg.beta_start, pcfg.beta_end);
  return out;
}

LoadedPolicy load_policy(const std::string& path) {
  if (!fs::exists(path))
    throw ConfigError("policy checkpoint not found at " + path +
                      "; produce it with the train-policy command");
  LoadedPolicy out;
  out.meta = nn::peek_checkpoint_meta(path);
  out.model = std::make_unique<translation::PolicyNet<float>>(policy_cfg_from_meta(out.meta), 0);
  nn::load_checkpoint(path, out.model->params());
  return out;
}

std::string run_eval(const cfg::RunConfig& rc,
                     const std::function<void(const std::string&)>& log) {
  const auto eo = rc.eval_options();
  const std::string root = rc.dataset_root();
  data::DatasetManifest man = data::read_manifest(root);
  data::validate_splits(man.split);

  LoadedPolicy policy = load_policy(policy_checkpoint_path(rc, eo.condition));
  eval::EvalComponents comp;
  comp.policy = policy.model.get();
  comp.policy_split = std::to_string(policy.meta.at("split_checksum").get<u64>());

  LoadedPlanner planner;
  if (eo.plan == "predicted") {
    planner = load_planner(planner_checkpoint_path(rc));
    comp.planner = planner.model.get();
    comp.sched = &planner.sched;
    comp.planner_split = std::to_string(planner.meta.at("split_checksum").get<u64>());
  }

  eval::EpisodeOptions opts;
  opts.max_steps = eo.max_steps;
  opts.ensemble_decay = eo.ensemble_decay;
  opts.plan = eo.plan == "predicted"  ? eval::PlanSource::kPredicted
              : eo.plan == "oracle"   ? eval::PlanSource::kOracle
                                      : eval::PlanSource::kNone;
  opts.clip_resolution = man.clip_resolution;

  int done = 0;
  eval::ResultTable table =
      eval::evaluate_split(comp, eo.condition, man.split, eo.levels, eo.episodes_per_skill,
                           eo.base_seed, opts, [&](const eval::EpisodeResult& r) {
                             ++done;
                             if (log && done % 25 == 0)
                               log("episode " + std::to_string(done) + " (" + r.task.id() + ") " +
                                   (r.success ? "ok" : "fail"));
                           });

  std::string run_id = rc.tree.at("eval").at("run_id").get<std::string>();
  if (run_id.empty()) run_id = eo.condition + "_" + eo.plan;
  const std::string dir = results_dir(rc, run_id);

  eval::ReportInputs inputs;
  inputs.tables = {table};
  inputs.summary_extra["split_checksum"] = man.split.checksum();
  inputs.summary_extra["base_seed"] = eo.base_seed;
  inputs.summary_extra["plan"] = eo.plan;
  inputs.summary_extra["checkpoints"] = {
      {"policy", policy_checkpoint_path(rc, eo.condition)},
  };
  if (eo.plan == "predicted")
    inputs.summary_extra["checkpoints"]["planner"] = planner_checkpoint_path(rc);
  eval::make_report(inputs, dir);
  write_run_record(dir, "eval", rc.tree,
                   {{"results", (fs::path(dir) / "results.csv").string()},
                    {"summary", (fs::path(dir) / "summary.json").string()}});
  return dir;
}

std::string run_report(const cfg::RunConfig& rc, const std::vector<std::string>& inputs,
                       const std::string& out_dir,
                       const std::function<void(const std::string&)>& log) {
  if (inputs.empty()) throw ConfigError("report: no input result directories given");
  std::vector<eval::ResultTable> tables;
  for (const auto& dir : inputs) {
    const fs::path csv = fs::path(dir) / "results.csv";
    std::ifstream f(csv);
    if (!f) throw ConfigError("report: missing " + csv.string() + "; produce it with eval");
    std::string content((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    for (auto& t : eval::parse_results_csv(content)) tables.push_back(std::move(t));
  }
  const auto eo = rc.eval_options();
  eval::ReportInputs rin;
  rin.tables = tables;
  std::map<std::string, eval::ResultTable> by_cond;
  for (const auto& t : tables) by_cond[t.condition] = t;
  for (const auto& exp : eo.orderings)
    if (by_cond.count(exp.better) && by_cond.count(exp.worse))
      rin.orderings.push_back(eval::check_ordering(by_cond, exp));
  eval::make_report(rin, out_dir);
  if (log) log("report written to " + out_dir);
  write_run_record(out_dir, "report", rc.tree,
                   {{"results", (fs::path(out_dir) / "results.csv").string()}});
  return out_dir;
}

}  // namespace hopman::pipeline
