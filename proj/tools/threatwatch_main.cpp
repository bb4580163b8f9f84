#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "threatwatch/commands.hpp"

namespace cli = threatwatch::cli;

int main(int argc, char** argv) {
  std::ios::sync_with_stdio(false);

  CLI::App app{"threatwatch: knife-threat evidence fusion, alerting and evaluation"};
  app.require_subcommand(1);

  cli::ValidateOptions validate;
  auto* validate_cmd = app.add_subcommand("validate", "Validate a dataset manifest and print its stats");
  validate_cmd->add_option("--manifest", validate.manifest, "Manifest JSONL ('-' for stdin)")->required();

  cli::SplitOptions split;
  auto* split_cmd = app.add_subcommand("split", "Deterministic train/val/test split of a manifest");
  split_cmd->add_option("--manifest", split.manifest, "Manifest JSONL")->required();
  split_cmd->add_option("--seed", split.seed, "Shuffle seed")->capture_default_str();
  split_cmd->add_option("--ratios", split.ratios, "train,val,test fractions")->capture_default_str();
  split_cmd->add_option("--out", split.out, "Split JSONL output ('-' for stdout)")->capture_default_str();

  cli::ScoreOptions score;
  std::string score_config;
  auto* score_cmd = app.add_subcommand("score", "Assess every frame and write ThreatAssessment JSONL");
  score_cmd->add_option("--input", score.input, "Backend URI: jsonl:PATH, synthetic:SCRIPT, extern:NAME, or a path")->required();
  score_cmd->add_option("--config", score_config, "Pipeline config JSON (falls back to $THREATWATCH_CONFIG)");
  score_cmd->add_option("--out", score.out, "Assessment JSONL output")->capture_default_str();
  score_cmd->add_flag("--strict", score.strict, "Abort on the first malformed input line");

  cli::WatchOptions watch;
  std::string watch_config;
  std::string watch_webhook;
  auto* watch_cmd = app.add_subcommand("watch", "Run fusion and per-stream alerting");
  watch_cmd->add_option("--input", watch.input, "Backend URI")->required();
  watch_cmd->add_option("--config", watch_config, "Pipeline config JSON (falls back to $THREATWATCH_CONFIG)");
  watch_cmd->add_option("--alerts", watch.alerts, "Alert event JSONL output")->capture_default_str();
  watch_cmd->add_option("--webhook", watch_webhook, "POST each alert event to this http:// URL");
  watch_cmd->add_flag("--strict", watch.strict, "Abort on the first malformed input line");

  cli::EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "Confusion matrix and per-class accuracy report");
  eval_cmd->add_option("--pred", eval.pred, "Predictions JSONL")->required();
  eval_cmd->add_option("--labels", eval.labels, "Manifest JSONL with ground truth")->required();
  eval_cmd->add_option("--report", eval.report, "Report output")->capture_default_str();
  eval_cmd->add_option("--format", eval.format, "json | table")
      ->check(CLI::IsMember({"json", "table"}))
      ->capture_default_str();
  eval_cmd->add_option("--provenance", eval.provenance, "Label recorded in the report, e.g. 'test split'");

  cli::SimulateOptions simulate;
  std::optional<std::uint64_t> sim_seed;
  auto* sim_cmd = app.add_subcommand("simulate", "Generate synthetic FrameRecord JSONL from a scenario");
  sim_cmd->add_option("--scenario", simulate.scenario, "Scenario script JSON")->required();
  sim_cmd->add_option("--seed", sim_seed, "Override the script seed");
  sim_cmd->add_option("--out", simulate.out, "FrameRecord JSONL output")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kExitDomain;
  }

  if (*validate_cmd) return cli::cmd_validate(validate, std::cerr);
  if (*split_cmd) return cli::cmd_split(split, std::cerr);
  if (*score_cmd) {
    if (!score_config.empty()) score.config = score_config;
    return cli::cmd_score(score, std::cerr);
  }
  if (*watch_cmd) {
    if (!watch_config.empty()) watch.config = watch_config;
    if (!watch_webhook.empty()) watch.webhook = watch_webhook;
    return cli::cmd_watch(watch, std::cerr);
  }
  if (*eval_cmd) return cli::cmd_eval(eval, std::cerr);
  if (*sim_cmd) {
    simulate.seed = sim_seed;
    return cli::cmd_simulate(simulate, std::cerr);
  }
  return cli::kExitDomain;
}
