#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace tpp::cli {

struct GlobalOptions {
  std::string config;
  std::string out;                    // overrides output.dir
  std::optional<std::uint64_t> seed;  // overrides sim.seed
  int threads = 0;                    // 0 keeps the OpenMP default
  std::string resume;                 // train only: checkpoint to continue from
};

// Each command reads the config, computes, and writes its artifacts plus a
// manifest. Failures surface as tpp::Error subclasses.
void cmd_simulate(const GlobalOptions& options);
void cmd_harvest(const GlobalOptions& options);
void cmd_select(const GlobalOptions& options);
void cmd_train(const GlobalOptions& options);
void cmd_oracle(const GlobalOptions& options);

// Runs one subcommand by name and maps errors to exit codes: 0 ok, 2 config,
// 3 numeric, 4 assumption. Messages go to stderr.
int run_subcommand(const std::string& name, const GlobalOptions& options);

}  // namespace tpp::cli
