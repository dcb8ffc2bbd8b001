#include "mfcavi/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <variant>

#include <json.hpp>

#include "mfcavi/harness.hpp"
#include "mfcavi/io.hpp"
#include "mfcavi/svg_plot.hpp"

namespace mfcavi::cli {

using nlohmann::json;

namespace {

struct EngineContext {
    std::shared_ptr<const Potential> pot;
    std::shared_ptr<const BlockStructure> blocks;
    std::vector<double> weights;
    ConvexityReport report;
    double lambda_effective = 0.0;  // override when declared, else computed
    bool lambda_certified = false;
    std::string lambda_source;  // "computed" | "override"
    int block_count = 0;
    std::string hash;
    double gap0 = 0.0;
    std::variant<std::monostate, GaussianSession, GridSession> session;

    bool is_gaussian() const { return std::holds_alternative<GaussianSession>(session); }
    const GaussianSession& gaussian() const { return std::get<GaussianSession>(session); }
    const GridSession& grid() const { return std::get<GridSession>(session); }

    template <class Fn>
    auto with_session(Fn&& fn) const {
        if (is_gaussian()) return fn(gaussian());
        return fn(grid());
    }
};

GaussianProduct gaussian_initial_state(const ProblemConfig& config, const Potential& pot,
                                       const BlockStructure& blocks) {
    if (config.init.one_sweep_from_point)
        return one_sweep_from_point(pot, blocks, config.init.point);
    std::vector<Matrix> covs;
    covs.reserve(static_cast<std::size_t>(blocks.block_count()));
    for (int k = 0; k < blocks.block_count(); ++k) {
        Matrix cov(blocks.size(k), blocks.size(k));
        for (int i = 0; i < blocks.size(k); ++i)
            cov(i, i) = config.init.variances[static_cast<std::size_t>(blocks.offset(k) + i)];
        covs.push_back(std::move(cov));
    }
    return GaussianProduct(blocks, config.init.means, std::move(covs));
}

EngineContext build_context(const ProblemConfig& config) {
    EngineContext ctx;
    ctx.pot = std::make_shared<const Potential>(config.potential());
    const BlockStructure bare = config.block_structure();
    ctx.weights = block_smoothness(*ctx.pot, bare);
    ctx.blocks = std::make_shared<const BlockStructure>(bare.with_weights(ctx.weights));
    ctx.report = analyze_potential(*ctx.pot, *ctx.blocks);
    ctx.block_count = ctx.blocks->block_count();
    ctx.hash = problem_hash(config);
    if (config.lambda_star_override) {
        ctx.lambda_effective = *config.lambda_star_override;
        ctx.lambda_certified = false;
        ctx.lambda_source = "override";
    } else {
        ctx.lambda_effective = ctx.report.lambda_star;
        ctx.lambda_certified = ctx.report.lambda_star_certified;
        ctx.lambda_source = "computed";
    }

    if (config.engine == EngineKind::Gaussian) {
        auto reference = std::make_shared<const GaussianProduct>(mf_optimum(*ctx.pot, *ctx.blocks));
        ctx.session.emplace<GaussianSession>(gaussian_initial_state(config, *ctx.pot, *ctx.blocks),
                                             ctx.pot, reference, ctx.weights);
        ctx.gap0 = ctx.gaussian().gap();
    } else {
        const Grid1D grid = *config.grid;
        const SpotCheck spot = convexity_spot_check(*ctx.pot, *ctx.blocks, 200, grid.lo, grid.hi);
        if (!spot.convex_ok)
            throw std::runtime_error(
                "convexity spot check failed: worst scaled Hessian eigenvalue " +
                format_double(spot.worst_eigenvalue) + "; the grid engine requires a convex "
                "potential on the working domain");
        const int max_order = std::max(2, ctx.pot->max_monomial_degree());
        GridProduct init = config.init.one_sweep_from_point
                               ? one_sweep_from_point_grid(*ctx.pot, *ctx.blocks, grid,
                                                           config.init.point)
                               : gaussian_grid_product(grid, config.init.means,
                                                       config.init.variances, max_order);
        ReferenceSolution ref = solve_reference(*ctx.pot, *ctx.blocks, init, ctx.weights);
        auto ref_state = std::make_shared<const GridProduct>(std::move(ref.state));
        ctx.session.emplace<GridSession>(std::move(init), ctx.pot, ctx.blocks, ref_state,
                                         ref.free_energy, ctx.weights);
        ctx.gap0 = ctx.grid().gap();
    }
    return ctx;
}

json analysis_json(const EngineContext& ctx) {
    json a;
    a["L"] = ctx.report.smoothness;
    a["lambda_star"] = ctx.report.lambda_star;
    a["lambda_star_certified"] = ctx.report.lambda_star_certified;
    a["exact"] = ctx.report.exact;
    if (ctx.report.lambda_classical) a["lambda_classical"] = *ctx.report.lambda_classical;
    if (ctx.report.smoothness_classical) a["L_classical"] = *ctx.report.smoothness_classical;
    if (ctx.report.lambda_dq) a["lambda_dq"] = *ctx.report.lambda_dq;
    return a;
}

std::uint64_t schedule_seed_base(const ProblemConfig& config) {
    return config.schedule.kind() == Schedule::Kind::Random ? config.schedule.seed() : 0;
}

struct CheckRow {
    std::string name;
    std::string status;  // PASS / FAIL / SKIP
    std::string detail;
};

void print_checks(std::ostream& out, const std::vector<CheckRow>& rows) {
    out << std::left << std::setw(26) << "check" << std::setw(8) << "status"
        << "detail\n";
    for (const CheckRow& row : rows)
        out << std::left << std::setw(26) << row.name << std::setw(8) << row.status << row.detail
            << "\n";
}

template <class Session>
CheckRow descent_along_trajectory(const Session& initial, const Schedule& schedule, int updates,
                                  double lambda_star, double tolerance) {
    Session session = initial;
    ScheduleCursor cursor(schedule, session.block_count());
    // below this the gap sits at the engine's numerical floor and the
    // one-step ratio is noise
    const double floor =
        1e3 * Session::monotone_slack * std::max(1.0, std::abs(session.gap()));
    int checked = 0, failed = 0;
    double worst = 0.0;
    for (int n = 0; n <= updates; ++n) {
        if (n % 10 == 0 && session.all_updated() && session.gap() > floor) {
            const DescentCheck c = expected_descent_check(session, lambda_star, tolerance);
            ++checked;
            if (!c.pass) ++failed;
            if (c.rhs > 0.0) worst = std::max(worst, c.lhs / c.rhs);
        }
        if (n < updates) session.apply_update(cursor.next());
    }
    CheckRow row;
    row.name = "expected_descent";
    row.status = failed == 0 ? "PASS" : "FAIL";
    row.detail = std::to_string(checked) + " states checked, " + std::to_string(failed) +
                 " failures, worst lhs/rhs = " + format_double(worst);
    return row;
}

}  // namespace

int cmd_analyze(const ProblemConfig& config, std::ostream& out) {
    try {
        const EngineContext ctx = build_context(config);
        out << "problem: d=" << config.dimension() << " K=" << ctx.block_count
            << " engine=" << config.engine_name() << " hash=" << ctx.hash << "\n";
        out << "L_k:";
        for (double l : ctx.report.smoothness) out << " " << format_double(l);
        out << "\n";
        out << "lambda*: " << format_double(ctx.report.lambda_star) << " ("
            << (ctx.report.lambda_star_certified ? "certified" : "declared")
            << (ctx.report.exact ? ", exact" : "") << ")\n";
        if (config.lambda_star_override)
            out << "lambda* override (declared): " << format_double(*config.lambda_star_override)
                << "\n";
        if (ctx.report.lambda_dq)
            out << "lambda_dq (D_Q metric): " << format_double(*ctx.report.lambda_dq) << "\n";
        if (ctx.report.lambda_classical && ctx.report.smoothness_classical) {
            out << "lambda: " << format_double(*ctx.report.lambda_classical)
                << "  L: " << format_double(*ctx.report.smoothness_classical) << "\n";
            if (*ctx.report.lambda_classical > 0.0)
                out << "condition number L/lambda: "
                    << format_double(*ctx.report.smoothness_classical /
                                     *ctx.report.lambda_classical)
                    << "\n";
        }
        if (ctx.lambda_effective > 0.0)
            out << "coordinate-wise condition number 1/lambda*: "
                << format_double(1.0 / ctx.lambda_effective) << "\n";
        out << "gap0: " << format_double(ctx.gap0) << "\n";

        json j;
        j["engine"] = config.engine_name();
        j["block_count"] = ctx.block_count;
        j["gap0"] = ctx.gap0;
        j["problem_hash"] = ctx.hash;
        j["analysis"] = analysis_json(ctx);
        if (config.lambda_star_override) j["lambda_star_override"] = *config.lambda_star_override;

        if (config.epsilon && ctx.lambda_effective > 0.0 &&
            ctx.gap0 > *config.epsilon * config.delta.value_or(1.0)) {
            const double eps = *config.epsilon;
            const double delta = config.delta.value_or(1.0);
            const long long rs =
                iterations_to_epsilon(ctx.block_count, ctx.lambda_effective, ctx.gap0, eps, delta);
            const double lam = ctx.lambda_effective;
            const long long ds = static_cast<long long>(std::ceil(
                static_cast<double>(ctx.block_count) * ctx.block_count / (lam * lam) *
                std::log(ctx.gap0 / eps)));
            out << "RS budget (eps=" << format_double(eps) << ", delta=" << format_double(delta)
                << "): " << rs << " updates\n";
            out << "DS budget (eps=" << format_double(eps) << "): " << ds << " factor updates\n";
            j["rs_budget"] = rs;
            j["ds_budget"] = ds;
        } else if (config.epsilon && !(ctx.lambda_effective > 0.0)) {
            out << "budgets: skipped (lambda* = 0; convex-case budget needs the radius R)\n";
        }
        out << j.dump() << "\n";
        return kExitOk;
    } catch (const std::exception& e) {
        out << "analyze: error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

int cmd_run(const ProblemConfig& config, const std::string& out_dir, std::ostream& out,
            int threads) {
    namespace fs = std::filesystem;
    std::vector<std::string> written;
    try {
        const EngineContext ctx = build_context(config);
        std::vector<Trajectory> trajectories;
        const EnsembleSummary ensemble = ctx.with_session([&](const auto& session) {
            return monte_carlo(session, config.schedule, schedule_seed_base(config),
                               config.trials, config.updates, &trajectories, threads, ctx.hash);
        });

        RunSummary summary;
        summary.engine = config.engine_name();
        summary.block_count = ctx.block_count;
        summary.trials = config.trials;
        summary.updates = config.updates;
        summary.gap0 = ensemble.gap0;
        summary.lambda_star = ctx.lambda_effective;
        summary.lambda_star_certified = ctx.lambda_certified;
        summary.lambda_star_source = ctx.lambda_source;
        summary.analysis = ctx.report;
        summary.ensemble = ensemble;
        summary.envelope_mode = "none";
        if (ctx.lambda_effective > 0.0) {
            for (const SummaryRow& row : ensemble.rows)
                summary.envelope.push_back(rate_bound_strong(row.n, ctx.block_count,
                                                             ctx.lambda_effective, ensemble.gap0));
            if (config.trials >= 100 && config.schedule.kind() == Schedule::Kind::Random) {
                const EnvelopeReport report =
                    envelope_check_strong(ensemble, ctx.block_count, ctx.lambda_effective);
                summary.envelope_mode = report.mode;
                summary.envelope_violations = report.violations;
            }
        } else {
            const EnvelopeReport report = envelope_check_convex(trajectories, ctx.block_count);
            summary.envelope_mode = report.mode;
            summary.envelope_violations = report.violations;
        }

        json meta;
        meta["command"] = "run";
        meta["problem_hash"] = ctx.hash;
        meta["config"] = json::parse(config_to_json(config, 0));

        fs::create_directories(out_dir);
        const std::string csv_path = (fs::path(out_dir) / "trajectory.csv").string();
        const std::string summary_path = (fs::path(out_dir) / "summary.json").string();
        const std::string meta_path = (fs::path(out_dir) / "run_meta.json").string();
        write_text_file(csv_path, trajectory_csv(trajectories));
        written.push_back(csv_path);
        write_text_file(summary_path, summary_to_json(summary));
        written.push_back(summary_path);
        write_text_file(meta_path, meta.dump(2) + "\n");
        written.push_back(meta_path);

        out << "wrote " << csv_path << " (" << trajectories.size() << " trials x "
            << config.updates << " updates)\n";
        out << "wrote " << summary_path << "\n";
        out << "wrote " << meta_path << "\n";
        out << "final mean gap: " << format_double(ensemble.rows.back().mean_gap) << "\n";
        if (summary.envelope_mode != "none")
            out << "envelope (" << summary.envelope_mode
                << "): " << summary.envelope_violations << " violations\n";
        return kExitOk;
    } catch (const std::exception& e) {
        for (const std::string& path : written) {
            std::error_code ec;
            std::filesystem::remove(path, ec);
        }
        out << "run: error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

int cmd_verify(const ProblemConfig& config, std::ostream& out, int threads) {
    try {
        const EngineContext ctx = build_context(config);
        std::vector<CheckRow> rows;

        // one-step expected descent along a trajectory, every 10th state
        if (!ctx.lambda_certified) {
            rows.push_back({"expected_descent", "SKIP",
                            ctx.lambda_source == "override"
                                ? "skipped (lambda* declared by override, not certified)"
                                : "skipped (lambda* = " + format_double(ctx.lambda_effective) +
                                      ", not certified)"});
        } else {
            const double tolerance = ctx.is_gaussian() ? 1e-10 : 1e-4;
            rows.push_back(ctx.with_session([&](const auto& session) {
                return descent_along_trajectory(session, config.schedule, config.updates,
                                                ctx.report.lambda_star, tolerance);
            }));
        }

        // rate envelopes over the ensemble
        std::vector<Trajectory> trajectories;
        ctx.with_session([&](const auto& session) {
            monte_carlo(session, config.schedule, schedule_seed_base(config), config.trials,
                        config.updates, &trajectories, threads, ctx.hash);
            return 0;
        });
        const EnsembleSummary ensemble = summarize(trajectories);
        if (ctx.lambda_effective > 0.0) {
            if (config.schedule.kind() != Schedule::Kind::Random) {
                rows.push_back({"envelope_strong", "SKIP", "requires a random schedule"});
            } else if (config.trials < 100) {
                rows.push_back({"envelope_strong", "SKIP", "requires at least 100 trials"});
            } else {
                const EnvelopeReport report =
                    envelope_check_strong(ensemble, ctx.block_count, ctx.lambda_effective);
                CheckRow row{"envelope_strong", report.violations == 0 ? "PASS" : "FAIL",
                             std::to_string(report.violations) + " violations over " +
                                 std::to_string(ensemble.rows.size()) + " points (lambda*=" +
                                 format_double(ctx.lambda_effective) + ", " + ctx.lambda_source +
                                 ")"};
                rows.push_back(std::move(row));
            }
            rows.push_back({"envelope_convex", "SKIP", "skipped (lambda* > 0: strong mode applies)"});
        } else {
            rows.push_back({"envelope_strong", "SKIP", "skipped (lambda* = 0)"});
            const EnvelopeReport report = envelope_check_convex(trajectories, ctx.block_count);
            rows.push_back({"envelope_convex", report.violations == 0 ? "PASS" : "FAIL",
                            std::to_string(report.violations) + " violations over " +
                                std::to_string(trajectories.size()) + " trials"});
        }

        // Wasserstein-gap control along every iterate
        if (ctx.lambda_effective > 0.0) {
            long violations = 0;
            for (const Trajectory& t : trajectories)
                violations += talagrand_violations(t, ctx.lambda_effective);
            rows.push_back({"talagrand", violations == 0 ? "PASS" : "FAIL",
                            std::to_string(violations) + " violations over " +
                                std::to_string(trajectories.size()) + " trials"});
        } else {
            rows.push_back({"talagrand", "SKIP", "skipped (lambda* = 0)"});
        }

        // contraction window from the worst-case probe
        if (ctx.is_gaussian() && ctx.pot->pure_quadratic() && ctx.blocks->all_scalar()) {
            const int n_updates = std::clamp(config.updates, 10, 40);
            const int trials = std::clamp(config.trials, 200, 20000);
            const ContractionWindow window = contraction_window_check(
                *ctx.pot, *ctx.blocks, n_updates, trials, 3.0,
                schedule_seed_base(config) + UINT64_C(999331));
            if (window.skipped_degenerate) {
                rows.push_back({"contraction_window", "SKIP", window.note});
            } else {
                std::string detail = "c = " + format_double(window.contraction) + " vs window [" +
                                     format_double(window.window_lo) + ", " +
                                     format_double(window.window_hi) + "]";
                if (!window.note.empty()) detail += " — " + window.note;
                // only an upper-side violation contradicts the proved rate
                rows.push_back({"contraction_window", window.upper_ok ? "PASS" : "FAIL", detail});
            }
        } else {
            rows.push_back({"contraction_window", "SKIP",
                            "requires the gaussian engine with scalar blocks"});
        }

        print_checks(out, rows);
        for (const CheckRow& row : rows)
            if (row.status == "FAIL") return kExitRuntime;
        return kExitOk;
    } catch (const std::exception& e) {
        out << "verify: error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

int cmd_compare(const ProblemConfig& config, std::ostream& out) {
    if (!config.epsilon) {
        out << "compare: config must set epsilon\n";
        return kExitValidation;
    }
    try {
        const EngineContext ctx = build_context(config);
        if (!(ctx.report.lambda_star > 0.0) || !ctx.report.lambda_star_certified) {
            out << "compare: requires a certified lambda* > 0 (got "
                << format_double(ctx.report.lambda_star) << ", "
                << (ctx.report.lambda_star_certified ? "certified" : "not certified") << ")\n";
            return kExitValidation;
        }
        const CompareScans result = ctx.with_session([&](const auto& session) {
            return compare_scans(session, *config.epsilon, config.trials,
                                 schedule_seed_base(config), ctx.report.lambda_star);
        });
        out << "gap0: " << format_double(result.gap0) << ", eps: " << format_double(result.eps)
            << "\n";
        out << "RS median updates to eps: " << result.rs_updates_median << " (over "
            << result.trials << " trials)\n";
        out << "DS updates to eps: " << result.ds_updates << "\n";
        out << "ratio RS/DS: " << format_double(result.ratio)
            << (result.ds_updates <= ctx.block_count ? "  (both O(K) here)" : "") << "\n";
        out << "RS theoretical budget: " << result.rs_budget << " updates\n";
        out << "DS theoretical budget: " << result.ds_budget << " factor updates\n";
        json j;
        j["gap0"] = result.gap0;
        j["eps"] = result.eps;
        j["trials"] = result.trials;
        j["rs_updates_median"] = result.rs_updates_median;
        j["ds_updates"] = result.ds_updates;
        j["ratio"] = result.ratio;
        j["rs_budget"] = result.rs_budget;
        j["ds_budget"] = result.ds_budget;
        out << j.dump() << "\n";
        return kExitOk;
    } catch (const std::exception& e) {
        out << "compare: error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

int cmd_plot(const std::string& csv_path, const std::string& svg_path, std::ostream& out) {
    std::string text;
    try {
        text = read_text_file(csv_path);
    } catch (const std::exception& e) {
        out << "plot: " << e.what() << "\n";
        return kExitValidation;
    }
    std::string svg;
    try {
        svg = render_gap_plot_svg(parse_csv(text));
    } catch (const std::exception& e) {
        out << "plot: " << e.what() << "\n";
        return kExitValidation;
    }
    try {
        write_text_file(svg_path, svg);
    } catch (const std::exception& e) {
        out << "plot: " << e.what() << "\n";
        return kExitRuntime;
    }
    out << "wrote " << svg_path << "\n";
    return kExitOk;
}

}  // namespace mfcavi::cli
