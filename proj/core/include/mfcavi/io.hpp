#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mfcavi/analysis.hpp"
#include "mfcavi/harness.hpp"
#include "mfcavi/trajectory.hpp"

namespace mfcavi {

/// Shortest decimal representation that round-trips the exact double;
/// the byte-determinism of every emitted file rests on this.
std::string format_double(double value);

std::uint64_t fnv1a64(std::string_view bytes);
std::string fnv1a_hex(std::string_view bytes);

inline constexpr const char* kTrajectoryHeader =
    "trial,n,k_n,gap,w2l_to_ref,second_moment,running_R";

/// RFC-4180 trajectory table: header plus one row per (trial, update).
std::string trajectory_csv(const std::vector<Trajectory>& trajectories);

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    std::optional<int> column(std::string_view name) const;
};

/// Parses a numeric CSV with a header row. Throws std::runtime_error on
/// malformed content.
CsvTable parse_csv(const std::string& text);

struct RunSummary {
    std::string engine;
    int block_count = 0;
    int trials = 0;
    int updates = 0;
    double gap0 = 0.0;
    double lambda_star = 0.0;
    bool lambda_star_certified = false;
    std::string lambda_star_source;  // "computed" | "override"
    std::string envelope_mode;       // "strong" | "convex" | "none"
    long envelope_violations = 0;
    ConvexityReport analysis;
    EnsembleSummary ensemble;
    std::vector<double> envelope;  // strong mode only, per n
};

std::string summary_to_json(const RunSummary& summary);
RunSummary summary_from_json(const std::string& text);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace mfcavi
