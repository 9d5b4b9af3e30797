#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "geval/lattice.hpp"

namespace geval::cli {

enum ExitCode : int { kSuccess = 0, kPropertyFailure = 1, kConfigError = 2, kNumericalFailure = 3 };

struct CommandOptions {
    std::optional<std::uint64_t> seed;
    std::filesystem::path base_dir;
};

struct CommandResult {
    int exit_code = kSuccess;
    /// {header: {version, seed, config_hash}, command, result}; empty on exit 2 and 3.
    nlohmann::json report;
    /// Human-readable summary.
    std::string text;
    /// Diagnostic for exit codes 2 and 3.
    std::string error;
    /// CSV emitted by the command, if any.
    std::string csv;
};

const std::vector<std::string>& command_names();

/// Runs one command on a scenario document. Never throws for bad input: the
/// outcome is encoded in the exit code.
CommandResult run_command(const std::string& name, const nlohmann::json& config, const CommandOptions& options = {});

/// time_index,node_index,value rows for every slice.
std::string process_csv(const AdaptedProcess& P);
std::string variable_csv(const RandomVariable& X);

}  // namespace geval::cli
