#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "rsde/config.hpp"
#include "rsde/diagnostics.hpp"

namespace rsde {

/// Environment variable naming the default output directory.
inline constexpr const char* kOutputDirEnv = "RSDE_OUTPUT_DIR";

struct RunOptions {
    std::optional<std::uint64_t> seed;
    std::optional<std::filesystem::path> out;
    /// Worker threads for ensembles; never changes the artifacts.
    unsigned threads = 1;
};

struct RunResult {
    /// 0 iff every diagnostic passed (runs without diagnostics return 0).
    int exit_code = 0;
    std::filesystem::path directory;
    std::vector<std::filesystem::path> artifacts;
    std::vector<StatTestReport> reports;
};

/// --out, then output.directory, then $RSDE_OUTPUT_DIR, then "rsde_output".
std::filesystem::path resolve_output_directory(const RunConfig& config, const RunOptions& options);

/// Validates, runs the experiment and writes config.echo.yaml plus the
/// trajectory CSVs and report.json / report.txt selected by output.formats.
/// Throws Error (ConfigError for bad configs, module errors otherwise).
RunResult run(RunConfig config, const RunOptions& options = {});

}  // namespace rsde
