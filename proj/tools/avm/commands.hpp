#pragma once

#include "config.hpp"

#include <filesystem>
#include <ostream>

namespace avm::cli {

/// Exit codes shared by every subcommand.
enum ExitCode : int { kSuccess = 0, kConfigError = 2, kNumericalFailure = 3 };

struct RunContext {
    RunConfig config;
    std::filesystem::path out_dir;
    int threads = 1;
    std::ostream* log = nullptr;  ///< diagnostics and warnings
};

/// Each command writes its artifacts into ctx.out_dir and returns an exit code.
/// Numerical failures (avm::Error) propagate to the caller.
int cmd_lattice(const RunContext& ctx);
int cmd_orbits(const RunContext& ctx);
int cmd_melnikov(const RunContext& ctx);
int cmd_persist(const RunContext& ctx);

/// Full driver: parses argv, runs the subcommand and maps failures to exit codes.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace avm::cli
