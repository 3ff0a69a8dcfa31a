#pragma once

#include <cstdint>
#include <exception>
#include <optional>
#include <string>

#include "chaintt/archive.hpp"
#include "chaintt/config.hpp"

namespace chaintt {

/// Command-line overrides applied on top of a parsed configuration.
struct RunOverrides {
    std::optional<std::string> output_dir;
    std::optional<std::uint64_t> seed;
    std::optional<Index> dense_cap;
};

void apply_overrides(RunConfig& cfg, const RunOverrides& overrides);

struct RunOutput {
    RunArchive archive;
    /// Human-readable table: levels for TISE, conservation regressions for dynamics.
    std::string summary;
    std::string archive_path;
    std::string records_path;
};

/// Builds the model, runs the dynamics and (when `write_files`) writes archive and NDJSON records.
RunOutput execute_run(const RunConfig& cfg, bool write_files = true);

/// RMSD table of `own` against the archive named by io.compare_file.
std::string compare_report(const RunConfig& cfg, const RunArchive& own);

/// 2 = configuration/schema, 3 = numerical abort, 4 = i/o, 1 = anything else.
int exit_code(const std::exception& e);

}  // namespace chaintt
