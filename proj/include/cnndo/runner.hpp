#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "cnndo/config.hpp"
#include "json.hpp"

namespace cnndo {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitNumeric = 3,
  kExitSizeGuard = 4,
};

/// Command-line flags; each one overrides the config file.
struct CommandOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  std::optional<std::string> output;
  std::optional<std::string> init_from;
};

RunConfig resolve_config(const CommandOptions& opts);

struct TrainSummary {
  std::size_t iterations = 0;
  bool plateau = false;
  std::size_t rejections = 0;
  double wall_seconds = 0.0;
};

/// Writes trace.csv, checkpoint.json and run_meta.json into cfg.output_dir.
TrainSummary cmd_train(const RunConfig& cfg, unsigned threads);
/// Loads the checkpoint named by cfg.init_from (default <output_dir>/checkpoint.json)
/// and writes observables.json and observables.csv.
nlohmann::json cmd_evaluate(const RunConfig& cfg, unsigned threads);
/// Writes ness_observables.json, ness_observables.csv and sector_matrix.csv.
nlohmann::json cmd_exact(const RunConfig& cfg);
std::size_t cmd_count_params(const RunConfig& cfg);

/// Dispatches `command` and maps exceptions to exit codes:
/// ConfigError -> 2, NumericError -> 3, SizeGuardError -> 4.
int run_command(const std::string& command, const CommandOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace cnndo
