//
// Project pnkhb - Copyright 2026 The pnkhb Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pnkhb/cli.hpp"

int main(int argc, char **argv) {
  namespace cli = pnkhb::cli;
  CLI::App app { "Bound-constrained minimization with PNKH-B and baselines" };
  app.require_subcommand(1);

  cli::Options opt;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;

  auto add = [&](const char *name, const char *help, cli::Mode mode) {
    CLI::App *sub = app.add_subcommand(name, help);
    sub->add_option("config", opt.config_path, "Configuration file")->required();
    sub->add_option("--seed", seed, "Override the problem seed");
    sub->add_option("--out-dir", out_dir, "Directory for CSV output");
    sub->add_flag("--quiet,-q", opt.quiet, "Suppress summary output");
    sub->callback([&opt, mode] { opt.mode = mode; });
  };
  add("run", "Run the configured solver", cli::Mode::run);
  add("compare", "Run every solver listed under 'compare'", cli::Mode::compare);
  add("check", "Validate the config and run gradient checks", cli::Mode::check);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kExitConfig;
  }
  opt.seed = seed;
  opt.out_dir = out_dir;
  return cli::run_cli(opt, std::cout, std::cerr);
}
