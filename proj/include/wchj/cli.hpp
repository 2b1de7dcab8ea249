#pragma once

#include <cstdint>
#include <exception>
#include <iosfwd>
#include <optional>
#include <string>

#include "wchj/config.hpp"

namespace wchj {

enum ExitCode { kExitPass = 0, kExitCheckFailure = 1, kExitUsage = 2, kExitNumeric = 3 };

/// Flag overrides; they win over file values.
struct CliOptions {
  bool strict = false;
  std::optional<unsigned> threads;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
};

/// Exit code for an exception escaping a command.
int exit_code_for(const std::exception& e);

/// Each command writes its report to out and files below the output
/// directory, and returns an ExitCode. Errors propagate as exceptions.
int cmd_check_coupling(const RunConfig& cfg, const CliOptions& opt, std::ostream& out);
int cmd_iterate(const RunConfig& cfg, const CliOptions& opt, std::ostream& out);
int cmd_reference(const RunConfig& cfg, const CliOptions& opt, std::ostream& out);
int cmd_converge(const RunConfig& cfg, const CliOptions& opt, std::ostream& out);
int cmd_properties(const RunConfig& cfg, const CliOptions& opt, std::ostream& out);
int cmd_appendix(const RunConfig& cfg, const CliOptions& opt, std::ostream& out);

/// Configuration used when a subcommand is given no config path.
RunConfig default_config(const std::string& command);

/// Dispatches by subcommand name; catches errors, prints them to err and
/// maps them to exit codes.
int run_command(const std::string& command, const std::optional<std::string>& config_path,
                const CliOptions& opt, std::ostream& out, std::ostream& err);

}  // namespace wchj
