#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "medsel/commands.hpp"
#include "medsel/kernels.hpp"

namespace {

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("selctl");
  logger->set_pattern("[%H:%M:%S] [%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("SELCTL_LOG")) {
    const auto level = spdlog::level::from_str(env);
    if (level == spdlog::level::off && std::string(env) != "off")
      spdlog::warn("SELCTL_LOG={} is not a log level; using info", env);
    else
      spdlog::set_level(level);
  }
}

void add_common(CLI::App* cmd, medsel::CommandOptions& o) {
  cmd->add_option("--config", o.config, "JSON config file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Root seed");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_flag("--force", o.force, "Overwrite existing outputs");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Selective labeling experiments: generate, train, evaluate, analyze"};
  app.set_version_flag("--version", std::string("selctl ") + MEDSEL_VERSION);
  app.require_subcommand(1);

  medsel::CommandOptions o;
  auto* gen = app.add_subcommand("generate", "Write a synthetic embedding dataset and task manifests");
  add_common(gen, o);

  auto* tr = app.add_subcommand("train", "Meta-train a selector with REINFORCE");
  add_common(tr, o);
  tr->add_option("--data", o.data, "Dataset directory from generate");
  tr->add_option("--strategy", o.strategy, "medselect or clinical");
  tr->add_option("--k", o.k, "Label budget");
  tr->add_option("--epochs", o.epochs, "Passes over the meta-train tasks");
  tr->add_option("--workers", o.workers, "Worker threads");
  tr->add_flag("--timing", o.timing, "Record wall_ms per update in the training log");

  auto* ev = app.add_subcommand("evaluate", "Score strategies on meta-test tasks across a K sweep");
  auto* an = app.add_subcommand("analyze", "Selection statistics, t-tests and Wasserstein distances");
  for (auto* cmd : {ev, an}) {
    add_common(cmd, o);
    cmd->add_option("--data", o.data, "Dataset directory from generate");
    cmd->add_option("--k", o.k, "Comma-separated label budgets")->delimiter(',');
    cmd->add_option("--checkpoint", o.checkpoint, "medselect weights (.selw)");
    cmd->add_option("--clinical-checkpoint", o.clinical_checkpoint, "clinical selector weights (.selw)");
    cmd->add_option("--workers", o.workers, "Worker threads");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  setup_logging();
  try {
    spdlog::debug("kernels: {}", medsel::kernels::backend_name(medsel::kernels::active_backend()));
    if (gen->parsed()) medsel::cmd_generate(o);
    if (tr->parsed()) medsel::cmd_train(o);
    if (ev->parsed()) medsel::cmd_evaluate(o);
    if (an->parsed()) medsel::cmd_analyze(o);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return medsel::exit_code_for(e);
  }
  return 0;
}
