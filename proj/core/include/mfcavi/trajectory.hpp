#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mfcavi {

struct TrajectoryRecord {
    int n = 0;    // update count, 1-based
    int k_n = 0;  // block updated at this step
    double gap = 0.0;
    double w2l_to_ref = 0.0;
    double second_moment = 0.0;
    double running_radius = 0.0;  // max over sqrt(gap0) and the w2l history
};

/// Per-update record of one CAVI run plus the initial-state quantities the
/// convex-case radius needs.
struct Trajectory {
    std::string engine;
    std::string schedule;
    std::uint64_t seed = 0;
    std::string problem_hash;
    double gap0 = 0.0;
    double w2l0 = 0.0;
    double second_moment0 = 0.0;
    std::vector<TrajectoryRecord> records;

    const TrajectoryRecord& at(int n) const { return records.at(static_cast<std::size_t>(n) - 1); }
    int updates() const { return static_cast<int>(records.size()); }

    /// First n at which every block has been updated at least once
    /// (0 block count means unknown); -1 if never.
    int coverage_time(int block_count) const;
};

struct SummaryRow {
    int n = 0;
    double mean_gap = 0.0;
    double stderr_gap = 0.0;
};

/// Per-update Monte Carlo aggregate over trials sharing an initial state.
struct EnsembleSummary {
    int trials = 0;
    double gap0 = 0.0;
    std::vector<SummaryRow> rows;  // n = 0..updates
};

EnsembleSummary summarize(const std::vector<Trajectory>& trajectories);

}  // namespace mfcavi
