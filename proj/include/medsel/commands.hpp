#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace medsel {

// Settings for one selctl subcommand: an optional JSON config file plus flag
// overrides. A flag replaces the config key of the same name.
struct CommandOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<std::string> strategy;
  std::optional<std::vector<std::size_t>> k;
  std::optional<std::filesystem::path> out;
  std::optional<std::filesystem::path> data;
  std::optional<std::filesystem::path> checkpoint;           // medselect weights
  std::optional<std::filesystem::path> clinical_checkpoint;  // clinical weights
  std::optional<std::size_t> epochs;
  bool force = false;
  bool timing = false;  // add wall_ms to the training log (breaks byte-identity)
};

// Each command throws ConfigError, DataError or NumericalError on failure.
void cmd_generate(const CommandOptions& options);
void cmd_train(const CommandOptions& options);
void cmd_evaluate(const CommandOptions& options);
void cmd_analyze(const CommandOptions& options);

// Maps an exception thrown by a command to the process exit code.
int exit_code_for(const std::exception& e);

}  // namespace medsel
