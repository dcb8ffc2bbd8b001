#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mfcavi/analysis.hpp"
#include "mfcavi/gaussian_engine.hpp"
#include "mfcavi/grid_engine.hpp"
#include "mfcavi/rng.hpp"
#include "mfcavi/trajectory.hpp"

namespace mfcavi {

/// Gaussian-engine run context: a state plus everything needed to score it.
/// Copyable; copies share the immutable problem data.
class GaussianSession {
public:
    GaussianSession(GaussianProduct state, std::shared_ptr<const Potential> pot,
                    std::shared_ptr<const GaussianProduct> reference,
                    std::vector<double> weights);

    int block_count() const { return state_.block_count(); }
    const GaussianProduct& state() const { return state_; }
    void apply_update(int k) { apply_cavi_update(state_, k, *pot_); }
    double gap() const { return kl_gap(state_, *pot_, reference_->mean()); }
    double w2l_to_ref() const { return w2l(state_, *reference_, weights_); }
    double second_moment() const { return second_moment_total(state_); }
    bool all_updated() const { return state_.all_updated(); }

    static constexpr const char* engine_name = "gaussian";
    /// Slack allowed on the non-increasing gap invariant, relative to gap0.
    static constexpr double monotone_slack = 1e-12;

private:
    GaussianProduct state_;
    std::shared_ptr<const Potential> pot_;
    std::shared_ptr<const GaussianProduct> reference_;
    std::vector<double> weights_;
};

/// Grid-engine run context against a solved reference.
class GridSession {
public:
    GridSession(GridProduct state, std::shared_ptr<const Potential> pot,
                std::shared_ptr<const BlockStructure> blocks,
                std::shared_ptr<const GridProduct> reference, double reference_free_energy,
                std::vector<double> weights);

    int block_count() const { return state_.factor_count(); }
    const GridProduct& state() const { return state_; }
    void apply_update(int k) { state_.apply_cavi_update(k, *pot_, *blocks_); }
    double gap() const { return state_.free_energy(*pot_) - reference_free_energy_; }
    double w2l_to_ref() const { return w2l_grid(state_, *reference_, weights_); }
    double second_moment() const { return state_.second_moment_total(); }
    bool all_updated() const { return state_.all_updated(); }

    static constexpr const char* engine_name = "grid";
    static constexpr double monotone_slack = 1e-9;

private:
    GridProduct state_;
    std::shared_ptr<const Potential> pot_;
    std::shared_ptr<const BlockStructure> blocks_;
    std::shared_ptr<const GridProduct> reference_;
    double reference_free_energy_;
    std::vector<double> weights_;
};

/// Applies n_updates schedule-ordered single-block updates, recording gap,
/// distance to the reference, second moment and the running radius after
/// each one. Identical inputs give identical trajectories. Throws if the
/// gap increases beyond the engine slack.
template <class Session>
Trajectory run_trial(Session session, const Schedule& schedule, int n_updates,
                     const std::string& problem_hash = "");

struct DescentCheck {
    double lhs = 0.0;  // exact average of the K candidate gaps
    double rhs = 0.0;  // (1 - lambda*/K) * current gap
    bool pass = false;
};

/// Enumerates all K single-block updates (no sampling) and compares the
/// exact expected gap against the one-step geometric bound.
/// tolerance: 1e-10 for the Gaussian engine, 1e-4 for the grid engine.
template <class Session>
DescentCheck expected_descent_check(const Session& session, double lambda_star, double tolerance);

/// Runs `trials` independent trials with seeds seed_base, seed_base+1, ...
/// (random schedules only advance the per-trial seed; deterministic
/// schedules repeat). Aggregation order is ascending seed, so the result
/// does not depend on thread count.
template <class Session>
EnsembleSummary monte_carlo(const Session& initial, const Schedule& schedule,
                            std::uint64_t seed_base, int trials, int n_updates,
                            std::vector<Trajectory>* out_trajectories = nullptr, int threads = 1,
                            const std::string& problem_hash = "");

struct EnvelopeReport {
    std::string mode;
    long violations = 0;
    std::vector<int> violated_at;
    std::vector<double> envelope;  // per n = 0..updates (strong mode)
};

/// Strong mode: flags n where mean - 3*stderr exceeds (1-lambda*/K)^n gap0.
/// Requires >= 100 trials sharing the initial state.
EnvelopeReport envelope_check_strong(const EnsembleSummary& summary, int block_count,
                                     double lambda_star);

/// Convex mode: per trial and per n, checks gap_n <= 2K R_n^2/(n+2K) with
/// R_n the trial's running radius.
EnvelopeReport envelope_check_convex(const std::vector<Trajectory>& trajectories,
                                     int block_count);

/// Violations of (lambda*/2) w2l^2 <= gap + 1e-9 along a trajectory.
long talagrand_violations(const Trajectory& trajectory, double lambda_star);

struct CompareScans {
    long long rs_updates_median = 0;
    long long ds_updates = 0;
    double ratio = 0.0;  // rs_updates_median / ds_updates
    long long rs_budget = 0;  // ceil((K/lambda*) log(gap0/(0.5 eps)))
    long long ds_budget = 0;  // ceil((K^2/lambda*^2) log(gap0/eps))
    double gap0 = 0.0;
    double eps = 0.0;
    int trials = 0;
};

/// Counts single-factor updates until gap < eps: deterministically for the
/// cyclic scan, median over trials for the random scan.
template <class Session>
CompareScans compare_scans(const Session& initial, double eps, int trials,
                           std::uint64_t seed_base, double lambda_star,
                           long long max_updates = 1000000);

struct WorstCaseProbe {
    GaussianProduct state;
    Vector direction;       // unit eigenvector for the smallest eigenvalue
    double lambda_dq = 0.0; // lambda_min(D_Q^{-1/2} Q D_Q^{-1/2})
    bool degenerate_eigengap = false;
};

/// Slow-direction initialization: covariances at the fixed point and means
/// displaced by `magnitude` along D_Q^{-1/2} v_min. Requires all blocks
/// one-dimensional and Q PD.
WorstCaseProbe worst_case_init(const Potential& pot, const BlockStructure& blocks,
                               double magnitude);

struct ContractionWindow {
    bool skipped_degenerate = false;
    bool upper_ok = true;  // c <= (1 - lambda/K) + tol: the proved rate
    bool lower_ok = true;  // c >= (1 - lambda/K)^2 - tol: the known lower bound
    double contraction = 0.0;
    double window_lo = 0.0;
    double window_hi = 0.0;
    double lambda_dq = 0.0;
    std::string note;
};

/// Empirical per-update contraction factor (mean gap_n / gap0)^(1/n) from
/// the worst-case probe, compared against the two-sided window with
/// tolerance 0.02. A lower-side miss is reported, not fatal: the lower
/// bound is only guaranteed for some initialization.
ContractionWindow contraction_window_check(const Potential& pot, const BlockStructure& blocks,
                                           int n_updates, int trials, double magnitude,
                                           std::uint64_t seed_base);

}  // namespace mfcavi
