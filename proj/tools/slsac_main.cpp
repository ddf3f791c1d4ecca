#include <CLI11.hpp>

#include "slsac/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"SL-SAC: constrained soft actor-critic with Langevin reward critics, "
               "a distributional cost critic, and an empirical-CVaR Lagrangian"};
  app.require_subcommand(1);

  slsac::TrainOptions train_opts;
  auto* train = app.add_subcommand("train", "Train on a built-in environment");
  train->add_option("-c,--config", train_opts.config_path, "Config file (dotted keys)");
  train->add_option("-o,--override", train_opts.overrides,
                    "Override config entries, key=value (repeatable)");
  train->add_option("--out", train_opts.out_dir, "Output root (default $SLSAC_OUT_DIR or ./runs)");
  train->add_option("--run-name", train_opts.run_name, "Run directory name");
  train->add_option("--parallel", train_opts.parallel, "Seed workers to run in parallel");
  train->add_flag("-q,--quiet", train_opts.quiet, "Suppress per-seed summaries");

  slsac::EvalOptions eval_opts;
  auto* eval = app.add_subcommand("eval", "Deterministic evaluation rollouts");
  eval->add_option("--run", eval_opts.run_dir, "Per-seed run directory (seed_<k>)");
  eval->add_option("--checkpoint", eval_opts.checkpoint, "Checkpoint file");
  eval->add_option("-c,--config", eval_opts.config_path, "Config file");
  eval->add_option("-o,--override", eval_opts.overrides, "Config overrides");
  eval->add_option("--episodes", eval_opts.episodes, "Number of rollouts");
  eval->add_option("--seed", eval_opts.seed, "Evaluation seed");

  slsac::AblateOptions ablate_opts;
  auto* ablate = app.add_subcommand("ablate", "Run one ablation axis");
  ablate->add_option("-c,--config", ablate_opts.config_path, "Config file");
  ablate->add_option("-o,--override", ablate_opts.overrides, "Config overrides");
  ablate->add_option("--axis", ablate_opts.axis,
                     "optimizer|epsilon|aggregation|m|cost_optimizer")
      ->required();
  ablate->add_option("--out", ablate_opts.out_dir, "Output root");
  ablate->add_option("--parallel", ablate_opts.parallel, "Seed workers per cell");
  ablate->add_flag("-q,--quiet", ablate_opts.quiet, "Suppress the summary table");

  slsac::VerifyOptions verify_opts;
  auto* verify = app.add_subcommand("verify", "Numerically certify the risk bounds");
  verify->add_option("--report", verify_opts.report_path, "Write the JSON report here");
  verify->add_option("--seed", verify_opts.seed, "Verification seed");
  verify->add_option("--scale", verify_opts.scale, "Trial-count multiplier");
  verify->add_flag("--inject-fault", verify_opts.inject_fault,
                   "Negative control: force one check to fail");

  slsac::PlotOptions plot_opts;
  auto* plot = app.add_subcommand("plot", "Aggregate metrics into SVG + CSV curves");
  plot->add_option("metrics", plot_opts.metrics_paths, "metrics.jsonl files")
      ->required()
      ->expected(-1);
  plot->add_option("--out", plot_opts.out_path, "Output SVG path")->required();
  plot->add_option("--beta", plot_opts.beta, "Dashed cost-limit line");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? slsac::kExitOk : slsac::kExitUsage;
  }

  if (train->parsed()) return slsac::cmd_train(train_opts);
  if (eval->parsed()) return slsac::cmd_eval(eval_opts);
  if (ablate->parsed()) return slsac::cmd_ablate(ablate_opts);
  if (verify->parsed()) return slsac::cmd_verify(verify_opts);
  if (plot->parsed()) return slsac::cmd_plot(plot_opts);
  return slsac::kExitUsage;
}
