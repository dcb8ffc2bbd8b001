#include "mfcavi/harness.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace mfcavi {

GaussianSession::GaussianSession(GaussianProduct state, std::shared_ptr<const Potential> pot,
                                 std::shared_ptr<const GaussianProduct> reference,
                                 std::vector<double> weights)
    : state_(std::move(state)), pot_(std::move(pot)), reference_(std::move(reference)),
      weights_(std::move(weights)) {
    if (static_cast<int>(weights_.size()) != state_.block_count())
        throw std::invalid_argument("GaussianSession: need one weight per block");
}

GridSession::GridSession(GridProduct state, std::shared_ptr<const Potential> pot,
                         std::shared_ptr<const BlockStructure> blocks,
                         std::shared_ptr<const GridProduct> reference,
                         double reference_free_energy, std::vector<double> weights)
    : state_(std::move(state)), pot_(std::move(pot)), blocks_(std::move(blocks)),
      reference_(std::move(reference)), reference_free_energy_(reference_free_energy),
      weights_(std::move(weights)) {
    if (static_cast<int>(weights_.size()) != state_.factor_count())
        throw std::invalid_argument("GridSession: need one weight per factor");
}

template <class Session>
Trajectory run_trial(Session session, const Schedule& schedule, int n_updates,
                     const std::string& problem_hash) {
    if (n_updates < 0) throw std::invalid_argument("run_trial: n_updates must be >= 0");
    Trajectory t;
    t.engine = Session::engine_name;
    t.schedule = schedule.describe();
    t.seed = schedule.kind() == Schedule::Kind::Random ? schedule.seed() : 0;
    t.problem_hash = problem_hash;
    t.gap0 = session.gap();
    t.w2l0 = session.w2l_to_ref();
    t.second_moment0 = session.second_moment();
    t.records.reserve(static_cast<std::size_t>(n_updates));

    const double slack = Session::monotone_slack * std::max(1.0, std::abs(t.gap0));
    double radius = std::max(std::sqrt(std::max(t.gap0, 0.0)), t.w2l0);
    double prev_gap = t.gap0;
    ScheduleCursor cursor(schedule, session.block_count());
    for (int n = 1; n <= n_updates; ++n) {
        const int k = cursor.next();
        session.apply_update(k);
        TrajectoryRecord r;
        r.n = n;
        r.k_n = k;
        r.gap = session.gap();
        r.w2l_to_ref = session.w2l_to_ref();
        r.second_moment = session.second_moment();
        if (r.gap > prev_gap + slack)
            throw std::runtime_error("run_trial: gap increased at update " + std::to_string(n) +
                                     " (" + std::to_string(prev_gap) + " -> " +
                                     std::to_string(r.gap) + ")");
        radius = std::max(radius, r.w2l_to_ref);
        r.running_radius = radius;
        prev_gap = r.gap;
        t.records.push_back(r);
    }
    return t;
}

template Trajectory run_trial<GaussianSession>(GaussianSession, const Schedule&, int,
                                               const std::string&);
template Trajectory run_trial<GridSession>(GridSession, const Schedule&, int, const std::string&);

template <class Session>
DescentCheck expected_descent_check(const Session& session, double lambda_star, double tolerance) {
    if (!(lambda_star >= 0.0) || lambda_star > 1.0)
        throw std::invalid_argument("expected_descent_check: lambda* must be in [0,1]");
    const int block_count = session.block_count();
    const double gap_now = session.gap();
    KahanSum avg;
    for (int k = 0; k < block_count; ++k) {
        Session candidate = session;
        candidate.apply_update(k);
        avg.add(candidate.gap());
    }
    DescentCheck check;
    check.lhs = avg.value() / block_count;
    check.rhs = (1.0 - lambda_star / block_count) * gap_now;
    check.pass = check.lhs <= check.rhs * (1.0 + tolerance);
    return check;
}

template DescentCheck expected_descent_check<GaussianSession>(const GaussianSession&, double,
                                                              double);
template DescentCheck expected_descent_check<GridSession>(const GridSession&, double, double);

template <class Session>
EnsembleSummary monte_carlo(const Session& initial, const Schedule& schedule,
                            std::uint64_t seed_base, int trials, int n_updates,
                            std::vector<Trajectory>* out_trajectories, int threads,
                            const std::string& problem_hash) {
    if (trials < 1) throw std::invalid_argument("monte_carlo: trials must be >= 1");
    std::vector<Trajectory> all(static_cast<std::size_t>(trials));
    auto run_range = [&](int begin, int end) {
        for (int t = begin; t < end; ++t) {
            const Schedule trial_schedule =
                schedule.kind() == Schedule::Kind::Random
                    ? schedule.with_seed(seed_base + static_cast<std::uint64_t>(t))
                    : schedule;
            all[static_cast<std::size_t>(t)] =
                run_trial(initial, trial_schedule, n_updates, problem_hash);
        }
    };

    int workers = threads;
    if (workers <= 0)
        workers = static_cast<int>(std::min(8u, std::max(1u, std::thread::hardware_concurrency())));
    workers = std::min(workers, trials);
    if (workers <= 1) {
        run_range(0, trials);
    } else {
        // seed partitioning: each worker owns a contiguous seed range and its
        // own result slots, so the aggregate is independent of scheduling
        std::vector<std::thread> pool;
        const int chunk = (trials + workers - 1) / workers;
        for (int w = 0; w < workers; ++w) {
            const int begin = w * chunk;
            const int end = std::min(trials, begin + chunk);
            if (begin >= end) break;
            pool.emplace_back(run_range, begin, end);
        }
        for (std::thread& th : pool) th.join();
    }

    EnsembleSummary summary = summarize(all);
    if (out_trajectories) *out_trajectories = std::move(all);
    return summary;
}

template EnsembleSummary monte_carlo<GaussianSession>(const GaussianSession&, const Schedule&,
                                                      std::uint64_t, int, int,
                                                      std::vector<Trajectory>*, int,
                                                      const std::string&);
template EnsembleSummary monte_carlo<GridSession>(const GridSession&, const Schedule&,
                                                  std::uint64_t, int, int,
                                                  std::vector<Trajectory>*, int,
                                                  const std::string&);

EnvelopeReport envelope_check_strong(const EnsembleSummary& summary, int block_count,
                                     double lambda_star) {
    if (summary.trials < 100)
        throw std::invalid_argument("envelope_check_strong: need at least 100 trials");
    if (!(lambda_star > 0.0))
        throw std::invalid_argument("envelope_check_strong: lambda* must be > 0 (use convex mode)");
    EnvelopeReport report;
    report.mode = "strong";
    report.envelope.reserve(summary.rows.size());
    for (const SummaryRow& row : summary.rows) {
        const double env = rate_bound_strong(row.n, block_count, lambda_star, summary.gap0);
        report.envelope.push_back(env);
        // relative slack absorbs last-ulp noise when mean == envelope at n = 0
        if (row.mean_gap - 3.0 * row.stderr_gap > env * (1.0 + 1e-12)) {
            ++report.violations;
            report.violated_at.push_back(row.n);
        }
    }
    return report;
}

EnvelopeReport envelope_check_convex(const std::vector<Trajectory>& trajectories,
                                     int block_count) {
    EnvelopeReport report;
    report.mode = "convex";
    for (const Trajectory& t : trajectories) {
        for (const TrajectoryRecord& r : t.records) {
            const double env = rate_bound_convex(r.n, block_count, r.running_radius);
            if (r.gap > env * (1.0 + 1e-12)) {
                ++report.violations;
                report.violated_at.push_back(r.n);
            }
        }
    }
    return report;
}

long talagrand_violations(const Trajectory& trajectory, double lambda_star) {
    long violations = 0;
    const auto violates = [lambda_star](double gap, double dist) {
        return 0.5 * lambda_star * dist * dist > gap + 1e-9;
    };
    if (violates(trajectory.gap0, trajectory.w2l0)) ++violations;
    for (const TrajectoryRecord& r : trajectory.records)
        if (violates(r.gap, r.w2l_to_ref)) ++violations;
    return violations;
}

namespace {

template <class Session>
long long updates_to_epsilon(Session session, const Schedule& schedule, double eps,
                             long long max_updates) {
    if (session.gap() < eps) return 0;
    ScheduleCursor cursor(schedule, session.block_count());
    for (long long n = 1; n <= max_updates; ++n) {
        session.apply_update(cursor.next());
        if (session.gap() < eps) return n;
    }
    throw std::runtime_error("compare_scans: update budget of " + std::to_string(max_updates) +
                             " exhausted before reaching epsilon");
}

}  // namespace

template <class Session>
CompareScans compare_scans(const Session& initial, double eps, int trials,
                           std::uint64_t seed_base, double lambda_star, long long max_updates) {
    if (!(lambda_star > 0.0))
        throw std::invalid_argument("compare_scans: lambda* must be certified positive");
    if (trials < 1) throw std::invalid_argument("compare_scans: trials must be >= 1");
    CompareScans result;
    result.eps = eps;
    result.trials = trials;
    result.gap0 = initial.gap();
    result.ds_updates = updates_to_epsilon(initial, Schedule::cyclic(), eps, max_updates);

    std::vector<long long> rs(static_cast<std::size_t>(trials));
    for (int t = 0; t < trials; ++t)
        rs[static_cast<std::size_t>(t)] = updates_to_epsilon(
            initial, Schedule::random(seed_base + static_cast<std::uint64_t>(t)), eps,
            max_updates);
    std::sort(rs.begin(), rs.end());
    result.rs_updates_median = rs[rs.size() / 2];

    result.ratio = result.ds_updates > 0
                       ? static_cast<double>(result.rs_updates_median) /
                             static_cast<double>(result.ds_updates)
                       : 0.0;
    const int block_count = initial.block_count();
    if (result.gap0 > eps) {
        // delta absorbed as eps/2 for the median comparison
        result.rs_budget = iterations_to_epsilon(block_count, lambda_star, result.gap0, eps, 0.5);
        const double ds = (static_cast<double>(block_count) * block_count) /
                          (lambda_star * lambda_star) * std::log(result.gap0 / eps);
        result.ds_budget = static_cast<long long>(std::ceil(ds));
    }
    return result;
}

template CompareScans compare_scans<GaussianSession>(const GaussianSession&, double, int,
                                                     std::uint64_t, double, long long);
template CompareScans compare_scans<GridSession>(const GridSession&, double, int, std::uint64_t,
                                                 double, long long);

WorstCaseProbe worst_case_init(const Potential& pot, const BlockStructure& blocks,
                               double magnitude) {
    if (!blocks.all_scalar())
        throw std::invalid_argument("worst_case_init: all blocks must have size 1");
    const GaussianProduct optimum = mf_optimum(pot, blocks);
    const int d = blocks.dimension();
    const Matrix& q = pot.quadratic();
    Matrix scaled(d, d);
    Vector inv_sqrt_diag(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
        if (!(q(i, i) > 0.0))
            throw std::invalid_argument("worst_case_init: diagonal of Q must be positive");
        inv_sqrt_diag[static_cast<std::size_t>(i)] = 1.0 / std::sqrt(q(i, i));
    }
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            scaled(i, j) = inv_sqrt_diag[static_cast<std::size_t>(i)] * q(i, j) *
                           inv_sqrt_diag[static_cast<std::size_t>(j)];
    const EigenDecomposition eig = sym_eigen(scaled);

    WorstCaseProbe probe{optimum, Vector(static_cast<std::size_t>(d)), eig.values.front(), false};
    for (int i = 0; i < d; ++i) probe.direction[static_cast<std::size_t>(i)] = eig.vectors(i, 0);
    if (d > 1) {
        const double gap01 = eig.values[1] - eig.values[0];
        probe.degenerate_eigengap = gap01 <= 1e-9 * std::max(1.0, std::abs(eig.values.back()));
    }

    Vector means = optimum.mean();
    for (int i = 0; i < d; ++i)
        means[static_cast<std::size_t>(i)] +=
            magnitude * inv_sqrt_diag[static_cast<std::size_t>(i)] *
            probe.direction[static_cast<std::size_t>(i)];
    for (int k = 0; k < blocks.block_count(); ++k) probe.state.set_block_mean(k, {means[static_cast<std::size_t>(k)]});
    return probe;
}

ContractionWindow contraction_window_check(const Potential& pot, const BlockStructure& blocks,
                                           int n_updates, int trials, double magnitude,
                                           std::uint64_t seed_base) {
    if (n_updates < 1 || trials < 1)
        throw std::invalid_argument("contraction_window_check: need n_updates, trials >= 1");
    const WorstCaseProbe probe = worst_case_init(pot, blocks, magnitude);
    const int block_count = blocks.block_count();
    ContractionWindow window;
    window.lambda_dq = probe.lambda_dq;
    window.window_hi = (1.0 - probe.lambda_dq / block_count) + 0.02;
    window.window_lo =
        (1.0 - probe.lambda_dq / block_count) * (1.0 - probe.lambda_dq / block_count) - 0.02;

    if (probe.lambda_dq >= 1.0 - 1e-12) {
        window.skipped_degenerate = true;
        window.note = "degenerate: independent target reaches the optimum after one coverage";
        return window;
    }

    auto pot_shared = std::make_shared<const Potential>(pot);
    auto ref = std::make_shared<const GaussianProduct>(mf_optimum(pot, blocks));
    const std::vector<double> weights = block_smoothness(pot, blocks);
    const GaussianSession initial(probe.state, pot_shared, ref, weights);
    const double gap0 = initial.gap();

    KahanSum mean_gap;
    for (int t = 0; t < trials; ++t) {
        const Trajectory trajectory = run_trial(
            initial, Schedule::random(seed_base + static_cast<std::uint64_t>(t)), n_updates);
        const double final_gap = trajectory.at(n_updates).gap;
        if (!(final_gap > 0.0))
            throw std::runtime_error(
                "contraction_window_check: gap underflowed before n_updates; reduce n");
        mean_gap.add(final_gap);
    }
    window.contraction =
        std::pow(mean_gap.value() / trials / gap0, 1.0 / static_cast<double>(n_updates));
    window.upper_ok = window.contraction <= window.window_hi;
    window.lower_ok = window.contraction >= window.window_lo;
    if (!window.lower_ok)
        window.note = "contraction below the lower window: the eigenvector probe need not be the "
                      "worst-case initialization";
    if (probe.degenerate_eigengap)
        window.note += (window.note.empty() ? "" : "; ") +
                       std::string("smallest eigenvalue is repeated; probe direction not unique");
    return window;
}

}  // namespace mfcavi
