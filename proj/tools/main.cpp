// Copyright 2026 The clusterar Authors
// SPDX-License-Identifier: Apache-2.0

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>

#include "clusterar/checkpoint.hpp"
#include "clusterar/training.hpp"
#include "commands.hpp"

namespace {

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("clusterar");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("CLUSTERAR_LOG_LEVEL")) {
    const auto level = spdlog::level::from_str(env);
    if (level != spdlog::level::off || std::string_view(env) == "off") spdlog::set_level(level);
  }
}

}  // namespace

int main(int argc, char** argv) {
  using namespace clusterar;
  setup_logging();

  CLI::App app{"clusterar: packed next-cluster pretraining for state-space vision encoders", "clusterar"};
  app.require_subcommand(1);
  app.fallthrough();
  app.footer(config_help());

  std::string config_file;
  std::vector<std::string> sets;
  long long seed = -1;
  app.add_option("--config", config_file, "flat key = value configuration file");
  app.add_option("--set", sets, "override one key (repeatable)")->type_name("KEY=VALUE");
  app.add_option("--seed", seed, "master seed (same as --set seed=N)");

  cli::PackArgs pack_args;
  std::string dump;
  std::size_t max_tokens = 64;

  auto* gen = app.add_subcommand("gen", "generate a synthetic labeled shapes corpus");
  auto* pack = app.add_subcommand("pack", "pack images into one sequence and write a dump");
  pack->add_flag("--synthetic", pack_args.synthetic, "pack generated shapes instead of paths.corpus");
  auto* inspect = app.add_subcommand("inspect", "print a packed-sequence dump");
  inspect->add_option("dump", dump, "dump file (default: paths.pack_out)");
  inspect->add_option("--max-tokens", max_tokens, "token rows to print");
  auto* mask = app.add_subcommand("inspect-mask", "render the block-causal mask for the configured packing");
  auto* pre = app.add_subcommand("pretrain", "next-cluster pretraining");
  auto* fine = app.add_subcommand("finetune", "four-scan classification fine-tuning");
  auto* verify = app.add_subcommand("verify", "run the property verification suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? cli::kExitOk : cli::kExitUsage;
  }

  Config cfg;
  try {
    std::vector<std::pair<std::string, std::string>> assignments;
    if (!config_file.empty()) assignments = read_config_file(config_file);
    for (const auto& s : sets) assignments.push_back(parse_assignment(s));
    if (seed >= 0) assignments.emplace_back("seed", std::to_string(seed));
    cfg = resolve_config(assignments);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kExitUsage;
  }

  try {
    if (*gen) return cli::cmd_gen(cfg, std::cout);
    if (*pack) return cli::cmd_pack(cfg, pack_args, std::cout);
    if (*inspect) return cli::cmd_inspect(cfg, dump, max_tokens, std::cout);
    if (*mask) return cli::cmd_inspect_mask(cfg, std::cout);
    if (*pre) return cli::cmd_pretrain(cfg, std::cout);
    if (*fine) return cli::cmd_finetune(cfg, std::cout);
    if (*verify) return cli::cmd_verify(cfg, std::cout);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kExitFailure;
  }
  return cli::kExitUsage;
}
