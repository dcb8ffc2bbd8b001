// Acceptance suite: end-to-end checks of the convergence-theory guarantees
// on the shipped problems, one criterion per run line. Every tolerance is
// pinned here; a criterion either passes at its stated tolerance or fails.

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "mfcavi/commands.hpp"
#include "mfcavi/config.hpp"
#include "mfcavi/harness.hpp"
#include "mfcavi/io.hpp"

using namespace mfcavi;
namespace fs = std::filesystem;

namespace {

std::string g_config_dir = "configs";

ProblemConfig load_shipped(const std::string& name) {
    const ConfigLoad loaded = load_config(g_config_dir + "/" + name);
    if (!loaded.ok()) {
        std::string message = "cannot load " + name + ":";
        for (const std::string& e : loaded.errors) message += "\n  " + e;
        throw std::runtime_error(message);
    }
    return *loaded.config;
}

struct GaussianProblem {
    std::shared_ptr<const Potential> pot;
    std::shared_ptr<const BlockStructure> blocks;
    std::shared_ptr<const GaussianProduct> reference;
    std::vector<double> weights;
    double lambda_star = 0.0;
    GaussianSession initial;
};

GaussianProblem gaussian_problem(const ProblemConfig& config) {
    auto pot = std::make_shared<const Potential>(config.potential());
    auto blocks = std::make_shared<const BlockStructure>(config.block_structure());
    std::vector<double> weights = block_smoothness(*pot, *blocks);
    auto reference = std::make_shared<const GaussianProduct>(mf_optimum(*pot, *blocks));
    const double lambda_star = lambda_star_lower(*pot, *blocks, weights).value;

    std::vector<Matrix> covs;
    for (int k = 0; k < blocks->block_count(); ++k) {
        Matrix c(blocks->size(k), blocks->size(k));
        for (int i = 0; i < blocks->size(k); ++i)
            c(i, i) = config.init.variances[static_cast<std::size_t>(blocks->offset(k) + i)];
        covs.push_back(std::move(c));
    }
    GaussianSession initial(GaussianProduct(*blocks, config.init.means, std::move(covs)), pot,
                            reference, weights);
    return GaussianProblem{pot, blocks, reference, std::move(weights), lambda_star,
                           std::move(initial)};
}

struct GridProblem {
    std::shared_ptr<const Potential> pot;
    std::shared_ptr<const BlockStructure> blocks;
    std::shared_ptr<const GridProduct> reference;
    std::vector<double> weights;
    GridSession initial;
};

GridProblem grid_problem(const ProblemConfig& config) {
    auto pot = std::make_shared<const Potential>(config.potential());
    auto blocks = std::make_shared<const BlockStructure>(config.block_structure());
    std::vector<double> weights = block_smoothness(*pot, *blocks);
    const Grid1D grid = *config.grid;
    const int max_order = std::max(2, pot->max_monomial_degree());
    GridProduct init =
        gaussian_grid_product(grid, config.init.means, config.init.variances, max_order);
    ReferenceSolution ref = solve_reference(*pot, *blocks, init, weights);
    auto ref_state = std::make_shared<const GridProduct>(std::move(ref.state));
    GridSession initial(std::move(init), pot, blocks, ref_state, ref.free_energy, weights);
    return GridProblem{pot, blocks, ref_state, std::move(weights), std::move(initial)};
}

// ---------------------------------------------------------------------------

// exact one-step inequality on random PD quadratics
bool criterion1(std::string& detail) {
    SplitMix64 rng(20240801);
    int states_checked = 0;
    double worst_slack = -1e300;
    for (int problem = 0; problem < 10; ++problem) {
        const int block_count = 2 + static_cast<int>(rng.next() % 7);  // K in {2..8}
        std::vector<int> sizes;
        for (int k = 0; k < block_count; ++k) sizes.push_back(1 + static_cast<int>(rng.next() % 2));
        const BlockStructure blocks(sizes);
        const int d = blocks.dimension();
        Matrix a(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) a(i, j) = rng.next_in(-1.0, 1.0);
        Matrix q = matmul(transpose(a), a);
        for (int i = 0; i < d; ++i) q(i, i) += 0.4;
        Vector b(static_cast<std::size_t>(d));
        for (double& v : b) v = rng.next_in(-1.0, 1.0);
        const Potential pot(q, b);
        const std::vector<double> weights = block_smoothness(pot, blocks);
        const double lambda_star = lambda_star_lower(pot, blocks, weights).value;
        const GaussianProduct optimum = mf_optimum(pot, blocks);

        for (int s = 0; s < 100; ++s) {
            GaussianProduct state = optimum;  // covariances pinned, flags set
            for (int k = 0; k < block_count; ++k) {
                Vector mk(static_cast<std::size_t>(blocks.size(k)));
                for (double& v : mk) v = rng.next_in(-3.0, 3.0);
                state.set_block_mean(k, mk);
            }
            const double gap = kl_gap(state, pot, optimum.mean());
            KahanSum avg;
            for (int k = 0; k < block_count; ++k)
                avg.add(kl_gap(cavi_updated(state, k, pot), pot, optimum.mean()));
            const double lhs = avg.value() / block_count;
            const double rhs = (1.0 - lambda_star / block_count) * gap;
            worst_slack = std::max(worst_slack, (lhs - rhs) / std::max(rhs, 1e-300));
            ++states_checked;
            if (lhs > rhs * (1.0 + 1e-10)) {
                detail = "violated at problem " + std::to_string(problem) + ": lhs " +
                         format_double(lhs) + " > rhs " + format_double(rhs);
                return false;
            }
        }
    }
    detail = std::to_string(states_checked) + " states, worst (lhs-rhs)/rhs = " +
             format_double(worst_slack);
    return true;
}

// geometric envelope on the shipped K=5 problem
bool criterion2(std::string& detail) {
    const ProblemConfig config = load_shipped("gauss_k5.json");
    const GaussianProblem problem = gaussian_problem(config);
    if (std::abs(problem.lambda_star - 0.2) > 1e-9) {
        detail = "expected computed lambda* 0.2, got " + format_double(problem.lambda_star);
        return false;
    }
    const EnsembleSummary summary = monte_carlo(problem.initial, config.schedule,
                                                config.schedule.seed(), 1000, 500, nullptr, 0);
    const EnvelopeReport report = envelope_check_strong(summary, 5, problem.lambda_star);
    detail = "1000 trials x 500 updates, lambda* = " + format_double(problem.lambda_star) + ", " +
             std::to_string(report.violations) + " envelope violations";
    return report.violations == 0;
}

// sublinear envelope with per-trial running radius on the quartic problem
bool criterion3(std::string& detail) {
    const ProblemConfig config = load_shipped("quartic_flat.json");
    const GridProblem problem = grid_problem(config);
    std::vector<Trajectory> trajectories;
    monte_carlo(problem.initial, config.schedule, config.schedule.seed(), 200, 400,
                &trajectories, 0);
    const EnvelopeReport report = envelope_check_convex(trajectories, 2);
    long checked = 0;
    for (const Trajectory& t : trajectories) checked += t.updates();
    detail = "200 trials x 400 updates (" + std::to_string(checked) + " records), " +
             std::to_string(report.violations) + " violations of 2KR_n^2/(n+2K)";
    return report.violations == 0;
}

// contraction window from the worst-case probe
bool criterion4(std::string& detail) {
    const ProblemConfig config = load_shipped("tight_rho09.json");
    const Potential pot = config.potential();
    const BlockStructure blocks = config.block_structure();
    const ContractionWindow window =
        contraction_window_check(pot, blocks, 40, 10000, 3.0, config.schedule.seed());
    detail = "c = " + format_double(window.contraction) + " vs [" +
             format_double(window.window_lo) + ", " + format_double(window.window_hi) +
             "], lambda_dq = " + format_double(window.lambda_dq);
    if (window.skipped_degenerate) {
        detail += " (degenerate)";
        return false;
    }
    return window.upper_ok && window.lower_ok && std::abs(window.window_lo - 0.8825) < 1e-9 &&
           std::abs(window.window_hi - 0.97) < 1e-9;
}

// high-probability iteration count
bool criterion5(std::string& detail) {
    const ProblemConfig config = load_shipped("gauss_k5.json");
    const GaussianProblem problem = gaussian_problem(config);
    const double eps = 1e-4, delta = 0.2;
    const double gap0 = problem.initial.gap();
    const long long horizon =
        iterations_to_epsilon(5, problem.lambda_star, gap0, eps, delta);
    std::vector<Trajectory> trajectories;
    monte_carlo(problem.initial, config.schedule, config.schedule.seed(), 1000,
                static_cast<int>(horizon), &trajectories, 0);
    int above = 0;
    for (const Trajectory& t : trajectories)
        if (t.at(static_cast<int>(horizon)).gap >= eps) ++above;
    const double fraction = above / 1000.0;
    detail = "n = " + std::to_string(horizon) + ", fraction with gap >= eps: " +
             format_double(fraction) + " (allowed 0.24)";
    return fraction <= 0.24;
}

// the same quadratic through both engines
bool criterion6(std::string& detail) {
    Matrix q(2, 2);
    q(0, 0) = 1; q(0, 1) = 0.5; q(1, 0) = 0.5; q(1, 1) = 1;
    auto pot = std::make_shared<const Potential>(q, Vector{0.2, -0.1});
    auto blocks = std::make_shared<const BlockStructure>(std::vector<int>{1, 1});
    const std::vector<double> weights = block_smoothness(*pot, *blocks);

    auto exact_ref = std::make_shared<const GaussianProduct>(mf_optimum(*pot, *blocks));
    Matrix c1(1, 1);
    c1(0, 0) = 1.0;
    GaussianSession exact(GaussianProduct(*blocks, {2.0, -1.0}, {c1, c1}), pot, exact_ref,
                          weights);

    const Grid1D grid(-10.0, 10.0, 4096);
    GridProduct grid_init = gaussian_grid_product(grid, {2.0, -1.0}, {1.0, 1.0}, 2);
    ReferenceSolution ref = solve_reference(*pot, *blocks, grid_init, weights);
    auto grid_ref = std::make_shared<const GridProduct>(std::move(ref.state));
    GridSession approx(std::move(grid_init), pot, blocks, grid_ref, ref.free_energy, weights);

    const Schedule schedule = Schedule::random(314159);
    const Trajectory exact_run = run_trial(exact, schedule, 200);
    const Trajectory grid_run = run_trial(approx, schedule, 200);
    double worst_gap = std::abs(exact_run.gap0 - grid_run.gap0);
    double worst_dist = std::abs(exact_run.w2l0 - grid_run.w2l0);
    for (int n = 1; n <= 200; ++n) {
        worst_gap = std::max(worst_gap, std::abs(exact_run.at(n).gap - grid_run.at(n).gap));
        worst_dist = std::max(worst_dist,
                              std::abs(exact_run.at(n).w2l_to_ref - grid_run.at(n).w2l_to_ref));
    }
    detail = "200 updates, max |gap diff| = " + format_double(worst_gap) +
             " (tol 1e-4), max |w2l diff| = " + format_double(worst_dist) + " (tol 1e-3)";
    return worst_gap <= 1e-4 && worst_dist <= 1e-3;
}

// independent target converges after exactly K cyclic updates
bool criterion7(std::string& detail) {
    const ProblemConfig config = load_shipped("independent_k4.json");
    const GaussianProblem problem = gaussian_problem(config);
    const Trajectory t = run_trial(problem.initial, Schedule::cyclic(), 4);
    detail = "gap after 3 updates = " + format_double(t.at(3).gap) + ", after 4 = " +
             format_double(t.at(4).gap);
    return t.at(4).gap < 1e-12 && t.at(3).gap > 1e-12;
}

// Wasserstein-gap control along every iterate of the criterion-2 runs
bool criterion8(std::string& detail) {
    const ProblemConfig config = load_shipped("gauss_k5.json");
    const GaussianProblem problem = gaussian_problem(config);
    std::vector<Trajectory> trajectories;
    monte_carlo(problem.initial, config.schedule, config.schedule.seed(), 1000, 500,
                &trajectories, 0);
    long violations = 0;
    for (const Trajectory& t : trajectories) violations += talagrand_violations(t, problem.lambda_star);
    detail = "1000 trials x 501 states, " + std::to_string(violations) + " violations of "
             "(lambda*/2) W^2 <= gap + 1e-9";
    return violations == 0;
}

// entropy convexity along displacement interpolation
bool criterion9(std::string& detail) {
    const Grid1D grid(-12.0, 12.0, 2048);
    SplitMix64 rng(90909);
    double worst = -1e300;
    int checked = 0;
    for (int pair = 0; pair < 50; ++pair) {
        const auto random_density = [&]() {
            const double center = rng.next_in(-2.0, 2.0);
            const double quad = rng.next_in(0.2, 2.0);
            const double quart = rng.next_in(0.0, 0.3);
            const double tilt = rng.next_in(-0.5, 0.5);
            std::vector<double> lv(static_cast<std::size_t>(grid.points));
            for (int i = 0; i < grid.points; ++i) {
                const double x = grid.node(i);
                const double z = x - center;
                lv[static_cast<std::size_t>(i)] =
                    -(quad * z * z + quart * z * z * z * z + tilt * x);
            }
            return GridDensity::normalize(grid, std::move(lv));
        };
        const GridDensity qa = random_density();
        const GridDensity qb = random_density();
        const double ha = qa.entropy();
        const double hb = qb.entropy();
        for (double t : {0.25, 0.5, 0.75}) {
            const double ht = displacement_interpolate_1d(qa, qb, t).entropy();
            worst = std::max(worst, ht - ((1.0 - t) * ha + t * hb));
            ++checked;
            if (ht > (1.0 - t) * ha + t * hb + 1e-3) {
                detail = "violated at pair " + std::to_string(pair) + ", t = " + format_double(t) +
                         ": excess " + format_double(ht - ((1.0 - t) * ha + t * hb));
                return false;
            }
        }
    }
    detail = std::to_string(checked) + " interpolants, worst excess = " + format_double(worst) +
             " (allowed 1e-3)";
    return true;
}

// bounded second moments and stabilizing radius on the quartic runs
bool criterion10(std::string& detail) {
    const ProblemConfig config = load_shipped("quartic_flat.json");
    const GridProblem problem = grid_problem(config);
    std::vector<Trajectory> trajectories;
    monte_carlo(problem.initial, config.schedule, config.schedule.seed(), 200, 400,
                &trajectories, 0);
    double worst_moment_ratio = 0.0;
    double worst_radius_increase = 0.0;
    for (const Trajectory& t : trajectories) {
        const int coverage = t.coverage_time(2);
        if (coverage < 0) {
            detail = "a trial never updated every factor";
            return false;
        }
        const double at_coverage = t.at(coverage).second_moment;
        double sup_after = 0.0;
        for (int n = coverage; n <= t.updates(); ++n)
            sup_after = std::max(sup_after, t.at(n).second_moment);
        if (!std::isfinite(sup_after)) {
            detail = "non-finite second moment";
            return false;
        }
        worst_moment_ratio = std::max(worst_moment_ratio, sup_after / at_coverage);

        const double radius_3q = t.at(300).running_radius;
        const double radius_final = t.at(400).running_radius;
        if (!std::isfinite(radius_final)) {
            detail = "non-finite running radius";
            return false;
        }
        worst_radius_increase =
            std::max(worst_radius_increase, (radius_final - radius_3q) / radius_3q);
    }
    detail = "sup/coverage second-moment ratio = " + format_double(worst_moment_ratio) +
             " (allowed 10), last-quartile radius increase = " +
             format_double(worst_radius_increase) + " (allowed 0.01)";
    return worst_moment_ratio <= 10.0 && worst_radius_increase < 0.01;
}

// byte determinism of cmd_run across every shipped config
bool criterion11(std::string& detail) {
    const std::vector<std::string> names{"gauss_k5.json",        "quartic_flat.json",
                                         "tight_rho09.json",     "gauss_k10_rho095.json",
                                         "independent_k4.json",  "gauss_k2_grid.json"};
    std::ostringstream sink;
    for (const std::string& name : names) {
        const ProblemConfig config = load_shipped(name);
        const fs::path dir_a = fs::temp_directory_path() / ("mfcavi_det_a_" + name);
        const fs::path dir_b = fs::temp_directory_path() / ("mfcavi_det_b_" + name);
        fs::remove_all(dir_a);
        fs::remove_all(dir_b);
        if (cli::cmd_run(config, dir_a.string(), sink) != 0 ||
            cli::cmd_run(config, dir_b.string(), sink) != 0) {
            detail = "cmd_run failed on " + name;
            return false;
        }
        const std::string csv_a = read_text_file((dir_a / "trajectory.csv").string());
        const std::string csv_b = read_text_file((dir_b / "trajectory.csv").string());
        fs::remove_all(dir_a);
        fs::remove_all(dir_b);
        if (csv_a != csv_b) {
            detail = "trajectory.csv differs between runs of " + name;
            return false;
        }
    }
    detail = std::to_string(names.size()) + " configs run twice, all byte-identical";
    return true;
}

// random vs deterministic scan accounting on the K=10 problem
bool criterion12(std::string& detail) {
    const ProblemConfig config = load_shipped("gauss_k10_rho095.json");
    const GaussianProblem problem = gaussian_problem(config);
    if (std::abs(problem.lambda_star - 0.05) > 1e-9) {
        detail = "expected computed lambda* 0.05, got " + format_double(problem.lambda_star);
        return false;
    }
    const CompareScans result = compare_scans(problem.initial, *config.epsilon, config.trials,
                                              config.schedule.seed(), problem.lambda_star);
    detail = "RS median " + std::to_string(result.rs_updates_median) + " (budget " +
             std::to_string(result.rs_budget) + "), DS " + std::to_string(result.ds_updates) +
             " (budget " + std::to_string(result.ds_budget) + ")";
    return result.rs_updates_median <= result.rs_budget &&
           result.rs_updates_median < result.ds_budget && result.rs_budget > 0 &&
           result.ds_budget > 0;
}

struct Criterion {
    int number;
    const char* summary;
    std::function<bool(std::string&)> run;
};

}  // namespace

int main(int argc, char** argv) {
    int selected = 0;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) selected = std::atoi(argv[++i]);
        if (std::strcmp(argv[i], "--config-dir") == 0 && i + 1 < argc) g_config_dir = argv[++i];
    }

    const std::vector<Criterion> criteria{
        {1, "exact one-step expected descent on random PD quadratics", criterion1},
        {2, "geometric envelope, K=5 lambda*=0.2, 1000 trials", criterion2},
        {3, "sublinear envelope with running radius, quartic on grid", criterion3},
        {4, "contraction window at rho=0.9 from the worst-case probe", criterion4},
        {5, "high-probability iteration count at delta=0.2", criterion5},
        {6, "cross-engine gap and distance agreement", criterion6},
        {7, "independent target converges after exactly K updates", criterion7},
        {8, "Wasserstein-gap control along all criterion-2 iterates", criterion8},
        {9, "entropy convexity along displacement interpolation", criterion9},
        {10, "bounded moments and stabilizing radius on quartic runs", criterion10},
        {11, "byte-identical trajectory.csv across repeated runs", criterion11},
        {12, "random-scan vs deterministic-scan update accounting", criterion12},
    };

    int failures = 0;
    for (const Criterion& criterion : criteria) {
        if (selected != 0 && criterion.number != selected) continue;
        const auto start = std::chrono::steady_clock::now();
        std::string detail;
        bool pass = false;
        try {
            pass = criterion.run(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("[%s] criterion %2d: %s — %s [%.1fs]\n", pass ? "PASS" : "FAIL",
                    criterion.number, criterion.summary, detail.c_str(), seconds);
        std::fflush(stdout);
        if (!pass) ++failures;
    }
    return failures;
}
