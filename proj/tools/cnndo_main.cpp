#include <iostream>

#include "CLI11.hpp"
#include "cnndo/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Convolutional neural density operators for open spin systems"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  cnndo::CommandOptions opts;
  std::string config, output, init_from;
  std::uint64_t seed = 0;
  app.add_option("--config", config, "JSON run configuration");
  auto* seed_opt = app.add_option("--seed", seed, "overrides the config seed");
  app.add_option("--threads", opts.threads, "worker threads")->check(CLI::PositiveNumber);
  auto* out_opt = app.add_option("--output", output, "output directory (overrides output_dir)");
  auto* init_opt = app.add_option("--init-from", init_from, "checkpoint to start from / evaluate");

  app.add_subcommand("train", "optimize the network and write trace, checkpoint and metadata");
  app.add_subcommand("evaluate", "sample observables of a checkpoint");
  app.add_subcommand("exact", "exact steady state by dense diagonalization");
  app.add_subcommand("count-params", "print the number of variational parameters");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : cnndo::kExitConfig;
  }

  if (!config.empty()) opts.config = config;
  if (*seed_opt) opts.seed = seed;
  if (*out_opt) opts.output = output;
  if (*init_opt) opts.init_from = init_from;
  const std::string command = app.get_subcommands().front()->get_name();
  return cnndo::run_command(command, opts, std::cout, std::cerr);
}
