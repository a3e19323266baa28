#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "hopman/pipeline.hpp"

namespace {

using hopman::cfg::RunConfig;

struct CommonArgs {
  std::optional<std::string> config_file;
  std::optional<std::string> profile;
  std::vector<std::string> sets;
  std::optional<long long> seed;
  std::optional<std::string> dataset_root;
  std::optional<std::string> out;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--config", a.config_file, "JSON config file");
  cmd->add_option("--profile", a.profile, "desk | desk-fast | paper-doc");
  cmd->add_option("--set", a.sets, "dotted override key=value (repeatable)");
  cmd->add_option("--seed", a.seed, "global seed");
  cmd->add_option("--dataset-root", a.dataset_root, "dataset directory");
  cmd->add_option("--out", a.out, "run/artifact directory");
  cmd->allow_extras();  // --dotted.path value overrides
}

RunConfig resolve(CLI::App* cmd, const CommonArgs& a) {
  std::vector<std::pair<std::string, std::string>> overrides;
  for (const auto& kv : a.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw hopman::ConfigError("--set expects key=value, got '" + kv + "'");
    overrides.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
  }
  // Remaining "--a.b.c value" pairs act as direct overrides.
  const auto extras = cmd->remaining();
  for (size_t i = 0; i < extras.size(); ++i) {
    std::string key = extras[i];
    if (key.rfind("--", 0) != 0 || key.find('.') == std::string::npos)
      throw hopman::ConfigError("unrecognized argument: " + key);
    key = key.substr(2);
    const auto eq = key.find('=');
    if (eq != std::string::npos) {
      overrides.emplace_back(key.substr(0, eq), key.substr(eq + 1));
    } else {
      if (i + 1 >= extras.size())
        throw hopman::ConfigError("override --" + key + " is missing a value");
      overrides.emplace_back(key, extras[++i]);
    }
  }
  if (a.seed) overrides.emplace_back("seed", std::to_string(*a.seed));
  if (a.dataset_root) overrides.emplace_back("dataset.root", *a.dataset_root);
  if (a.out) overrides.emplace_back("out", *a.out);
  RunConfig rc = hopman::cfg::resolve_config(a.config_file, a.profile, overrides);
  return rc;
}

void log_line(const std::string& s) { std::fprintf(stderr, "[hopman] %s\n", s.c_str()); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"factorized plan-prediction + plan-to-action manipulation pipeline"};
  app.require_subcommand(1);

  CommonArgs gen_a, tp_a, pol_a, ev_a, rep_a;
  auto* gen = app.add_subcommand("gen-data", "generate the passive/paired/hallucinated corpora");
  add_common(gen, gen_a);

  auto* tplan = app.add_subcommand("train-planner", "train the mask-sequence diffusion model");
  add_common(tplan, tp_a);

  auto* tpol = app.add_subcommand("train-policy", "train the plan-conditioned policy (or BC)");
  std::string condition;
  tpol->add_option("--condition", condition, "P | H | P+H | BC (default from config)");
  add_common(tpol, pol_a);

  auto* ev = app.add_subcommand("eval", "closed-loop evaluation over the generalization levels");
  std::string plan_flag, eval_condition, run_id;
  ev->add_option("--plan", plan_flag, "predicted | oracle | none");
  ev->add_option("--condition", eval_condition, "policy condition checkpoint to evaluate");
  ev->add_option("--run-id", run_id, "results directory name");
  add_common(ev, ev_a);

  auto* rep = app.add_subcommand("report", "render charts/orderings from results.csv files");
  std::vector<std::string> inputs;
  std::string report_out;
  rep->add_option("--in", inputs, "input results directory (repeatable)")->required();
  rep->add_option("--to", report_out, "output directory (default: first input)");
  add_common(rep, rep_a);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) ? 2 : 0;
  }

  try {
    if (gen->parsed()) {
      RunConfig rc = resolve(gen, gen_a);
      hopman::pipeline::run_gen_data(rc, log_line);
    } else if (tplan->parsed()) {
      RunConfig rc = resolve(tplan, tp_a);
      log_line("checkpoint: " + hopman::pipeline::run_train_planner(rc, log_line));
    } else if (tpol->parsed()) {
      RunConfig rc = resolve(tpol, pol_a);
      const std::string cond =
          condition.empty() ? rc.tree.at("policy").at("train").at("condition").get<std::string>()
                            : condition;
      log_line("checkpoint: " + hopman::pipeline::run_train_policy(rc, cond, log_line));
    } else if (ev->parsed()) {
      RunConfig rc = resolve(ev, ev_a);
      if (!plan_flag.empty()) hopman::cfg::apply_override(rc.tree, "eval.plan", plan_flag);
      if (!eval_condition.empty())
        hopman::cfg::apply_override(rc.tree, "eval.condition", eval_condition);
      if (!run_id.empty()) hopman::cfg::apply_override(rc.tree, "eval.run_id", run_id);
      log_line("results: " + hopman::pipeline::run_eval(rc, log_line));
    } else if (rep->parsed()) {
      RunConfig rc = resolve(rep, rep_a);
      const std::string out = report_out.empty() ? inputs.front() : report_out;
      hopman::pipeline::run_report(rc, inputs, out, log_line);
    }
  } catch (const hopman::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
