// mfcavi: run, analyze and verify random- and deterministic-scan coordinate
// ascent variational inference on block log-concave targets.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mfcavi/commands.hpp"
#include "mfcavi/config.hpp"

namespace {

struct CommonOptions {
    std::string config_path;
    std::optional<int> trials;
    std::optional<std::uint64_t> seed;
    std::optional<int> updates;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("--config", opts.config_path, "problem configuration (JSON)")
        ->required();
    cmd->add_option("--trials", opts.trials, "override the configured trial count");
    cmd->add_option("--seed", opts.seed, "override the random-schedule seed");
    cmd->add_option("--updates", opts.updates, "override the configured update count");
}

int load_with_overrides(const CommonOptions& opts, mfcavi::ProblemConfig& config) {
    mfcavi::ConfigLoad loaded = mfcavi::load_config(opts.config_path);
    if (!loaded.ok()) {
        std::cerr << "config validation failed:\n";
        for (const std::string& error : loaded.errors) std::cerr << "  " << error << "\n";
        return mfcavi::cli::kExitValidation;
    }
    config = std::move(*loaded.config);
    if (opts.trials) {
        if (*opts.trials < 1) {
            std::cerr << "--trials must be >= 1\n";
            return mfcavi::cli::kExitValidation;
        }
        config.trials = *opts.trials;
    }
    if (opts.updates) {
        if (*opts.updates < 0) {
            std::cerr << "--updates must be >= 0\n";
            return mfcavi::cli::kExitValidation;
        }
        config.updates = *opts.updates;
    }
    if (opts.seed) {
        if (config.schedule.kind() != mfcavi::Schedule::Kind::Random) {
            std::cerr << "--seed requires a random schedule in the config\n";
            return mfcavi::cli::kExitValidation;
        }
        config.schedule = config.schedule.with_seed(*opts.seed);
    }
    return mfcavi::cli::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"coordinate ascent variational inference runner and bound verifier"};
    app.require_subcommand(1);

    CommonOptions analyze_opts, run_opts, verify_opts, compare_opts;
    std::string out_dir = "out";
    int threads = 0;
    std::string plot_csv, plot_svg;

    CLI::App* analyze = app.add_subcommand("analyze", "print the convergence constants");
    add_common(analyze, analyze_opts);

    CLI::App* run = app.add_subcommand("run", "run trials and write trajectory/summary files");
    add_common(run, run_opts);
    run->add_option("--out", out_dir, "output directory")->capture_default_str();
    run->add_option("--threads", threads, "worker threads (0 = auto)")->capture_default_str();

    CLI::App* verify = app.add_subcommand("verify", "run the bound-verification checks");
    add_common(verify, verify_opts);
    verify->add_option("--threads", threads, "worker threads (0 = auto)")->capture_default_str();

    CLI::App* compare = app.add_subcommand("compare", "random vs cyclic scan update counts");
    add_common(compare, compare_opts);

    CLI::App* plot = app.add_subcommand("plot", "render a trajectory CSV as an SVG rate plot");
    plot->add_option("csv", plot_csv, "trajectory.csv produced by `run`")->required();
    plot->add_option("svg", plot_svg, "output SVG path")->required();

    CLI11_PARSE(app, argc, argv);

    mfcavi::ProblemConfig config;
    if (analyze->parsed()) {
        if (const int rc = load_with_overrides(analyze_opts, config)) return rc;
        return mfcavi::cli::cmd_analyze(config, std::cout);
    }
    if (run->parsed()) {
        if (const int rc = load_with_overrides(run_opts, config)) return rc;
        return mfcavi::cli::cmd_run(config, out_dir, std::cout, threads);
    }
    if (verify->parsed()) {
        if (const int rc = load_with_overrides(verify_opts, config)) return rc;
        return mfcavi::cli::cmd_verify(config, std::cout, threads);
    }
    if (compare->parsed()) {
        if (const int rc = load_with_overrides(compare_opts, config)) return rc;
        return mfcavi::cli::cmd_compare(config, std::cout);
    }
    if (plot->parsed()) return mfcavi::cli::cmd_plot(plot_csv, plot_svg, std::cout);
    return mfcavi::cli::kExitValidation;
}
