#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "congested/cli.hpp"

int main(int argc, char** argv) {
  namespace cli = congested::cli;
  CLI::App app{"Distributed learning in congested resource-sharing games"};
  app.require_subcommand(1);

  cli::Options opt;
  std::string threads = "1";
  std::string overrides;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "experiment config (JSON)")->required();
    sub->add_option("--out", opt.output_dir, "output directory");
    sub->add_option("--threads", threads, "worker threads, or 'auto'");
    sub->add_option("--overrides", overrides, "k=v[,k=v...] dotted-path config overrides");
  };
  auto* run = app.add_subcommand("run", "run trials and write trial CSVs plus report.json");
  auto* sweep = app.add_subcommand("sweep", "compare policies over generated instances");
  auto* oracle = app.add_subcommand("oracle", "print the welfare summary of the configured game");
  auto* validate = app.add_subcommand("validate", "check a config without running it");
  for (auto* sub : {run, sweep, oracle, validate}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kExitConfig;
  }

  if (threads == "auto") {
    opt.threads = 0;
  } else {
    try {
      opt.threads = static_cast<unsigned>(std::stoul(threads));
    } catch (...) {
      std::cerr << "error: --threads must be a number or 'auto'\n";
      return cli::kExitConfig;
    }
    if (opt.threads == 0) opt.threads = 1;
  }
  opt.overrides = congested::split_overrides(overrides);

  if (*run) return cli::cmd_run(opt);
  if (*sweep) return cli::cmd_sweep(opt);
  if (*oracle) return cli::cmd_oracle(opt);
  return cli::cmd_validate(opt);
}
