#pragma once

// Run archives.
//
// binary ("WTRA"):
//   "WTRA" | u16 version | text "binary" | text config | text model |
//   text records | text state checkpoint (WTTC, may be empty) |
//   text classical checkpoint (WQCM, may be empty)
// where `text` is a u64 byte count followed by the bytes.
//
// matrix-container ("WTMC"):
//   "WTMC" | u16 version | text "matrix-container" | u64 entry count |
//   entries of (text name | u8 type | u64 ndim | ndim x u64 dims | payload),
//   type 0 = float64 array (row-major), 1 = text, 2 = raw bytes (both as text).
//
// WQCM classical checkpoint:
//   "WQCM" | u16 version | f64 time | u64 n_amp | u64 n | n_amp x c128 | n x f64 q | n x f64 p

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "chaintt/observables.hpp"

namespace chaintt {

inline constexpr std::uint16_t kArchiveVersion = 1;

enum class ArchiveFormat { binary, matrix_container };

ArchiveFormat parse_archive_format(const std::string& name);
std::string to_string(ArchiveFormat format);

/// Final state of a mean-field or classical trajectory.
struct ClassicalCheckpoint {
    double time = 0.0;
    Vector amplitudes;  // empty for purely classical runs
    RealVector q;
    RealVector p;
};

std::string encode_classical_checkpoint(const ClassicalCheckpoint& c);
ClassicalCheckpoint decode_classical_checkpoint(std::string_view bytes);

struct RunArchive {
    std::string config_text;
    std::string model_text;
    std::vector<ObservableRecord> records;
    /// Final TT state (TDSE) or ground state (TISE).
    std::optional<TTState> checkpoint;
    std::optional<ClassicalCheckpoint> classical;
};

std::string encode_run(const RunArchive& archive, ArchiveFormat format);
/// Detects the format from the magic bytes.
RunArchive decode_run(std::string_view bytes);

void save_run(const RunArchive& archive, const std::string& path, ArchiveFormat format);
RunArchive load_run(const std::string& path);

/// One newline-free JSON object per record.
std::string record_to_json(const ObservableRecord& record);
void write_records_ndjson(const std::vector<ObservableRecord>& records, const std::string& path);

}  // namespace chaintt
