#pragma once

#include <filesystem>
#include <string>

#include "stargraph/analysis.hpp"
#include "stargraph/config.hpp"

namespace stargraph {

inline constexpr const char* kToolName = "stargraph";
inline constexpr const char* kToolVersion = "0.1.0";

// Subcommand drivers. Each writes its CSV outputs plus a run manifest into
// out_dir and throws stargraph::Error on failure (the CLI maps error codes
// to process exit status).
void cmd_spectrum(const RunConfig& cfg, const std::filesystem::path& out_dir);
void cmd_verify(const RunConfig& cfg, const std::filesystem::path& out_dir);
void cmd_evolve(const RunConfig& cfg, const std::filesystem::path& out_dir);
SweepResult cmd_sweep(const RunConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace stargraph
