#include <iostream>

#include "CLI11.hpp"

#include "commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"tpplab: transition path sampling and committor relative-entropy laboratory"};
  app.require_subcommand(1, 1);
  tpp::cli::GlobalOptions opts;
  std::uint64_t seed = 0;
  app.add_option("--config", opts.config, "TOML run configuration")->required()->check(CLI::ExistingFile);
  app.add_option("--out", opts.out, "output directory (overrides output.dir)");
  auto* seed_opt = app.add_option("--seed", seed, "root seed (overrides sim.seed)");
  app.add_option("--threads", opts.threads, "OpenMP worker count, 0 keeps the default")
      ->check(CLI::NonNegativeNumber);
  app.fallthrough();

  app.add_subcommand("simulate", "simulate a transition path ensemble and its weights");
  app.add_subcommand("harvest", "harvest reactive durations from equilibrium runs");
  app.add_subcommand("select", "compare two committors by relative-entropy difference");
  auto* train = app.add_subcommand("train", "fit a committor family by stochastic gradient descent");
  train->add_option("--resume", opts.resume, "checkpoint to continue from")->check(CLI::ExistingFile);
  app.add_subcommand("oracle", "export the quadrature committor and its diagnostics");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  if (*seed_opt) opts.seed = seed;
  return tpp::cli::run_subcommand(app.get_subcommands().front()->get_name(), opts);
}
