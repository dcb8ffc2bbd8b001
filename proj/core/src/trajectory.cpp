#include "mfcavi/trajectory.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace mfcavi {

int Trajectory::coverage_time(int block_count) const {
    std::vector<char> seen(static_cast<std::size_t>(block_count), 0);
    int remaining = block_count;
    for (const TrajectoryRecord& r : records) {
        if (!seen[static_cast<std::size_t>(r.k_n)]) {
            seen[static_cast<std::size_t>(r.k_n)] = 1;
            if (--remaining == 0) return r.n;
        }
    }
    return -1;
}

EnsembleSummary summarize(const std::vector<Trajectory>& trajectories) {
    if (trajectories.empty()) throw std::invalid_argument("summarize: no trajectories");
    const int updates = trajectories.front().updates();
    for (const Trajectory& t : trajectories)
        if (t.updates() != updates)
            throw std::invalid_argument("summarize: trajectories have unequal lengths");

    EnsembleSummary summary;
    summary.trials = static_cast<int>(trajectories.size());
    summary.gap0 = trajectories.front().gap0;
    summary.rows.resize(static_cast<std::size_t>(updates) + 1);
    const double m = static_cast<double>(summary.trials);
    for (int n = 0; n <= updates; ++n) {
        double mean = 0.0;
        for (const Trajectory& t : trajectories) mean += (n == 0 ? t.gap0 : t.at(n).gap);
        mean /= m;
        double var = 0.0;
        for (const Trajectory& t : trajectories) {
            const double d = (n == 0 ? t.gap0 : t.at(n).gap) - mean;
            var += d * d;
        }
        var = summary.trials > 1 ? var / (m - 1.0) : 0.0;
        summary.rows[static_cast<std::size_t>(n)] =
            SummaryRow{n, mean, std::sqrt(var / m)};
    }
    return summary;
}

}  // namespace mfcavi
