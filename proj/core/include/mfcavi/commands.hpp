#pragma once

#include <iosfwd>
#include <string>

#include "mfcavi/config.hpp"

namespace mfcavi::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

/// Prints the convergence constants (L_k, lambda*, classical constants,
/// condition numbers) and, when epsilon is configured, the random- and
/// deterministic-scan update budgets. The last stdout line is the same
/// report as compact JSON.
int cmd_analyze(const ProblemConfig& config, std::ostream& out);

/// Runs the configured trials and writes trajectory.csv, summary.json and
/// run_meta.json into out_dir. Nothing is left behind on failure.
int cmd_run(const ProblemConfig& config, const std::string& out_dir, std::ostream& out,
            int threads = 0);

/// Runs the bound-verification battery: one-step expected descent along a
/// trajectory, the rate envelope over the ensemble, the Wasserstein-gap
/// control, and the worst-case contraction window for scalar-block
/// quadratics. Exit 2 on any failed check.
int cmd_verify(const ProblemConfig& config, std::ostream& out, int threads = 0);

/// Random-scan vs deterministic-scan update counts to reach epsilon, with
/// their theoretical budgets.
int cmd_compare(const ProblemConfig& config, std::ostream& out);

/// Renders a trajectory CSV as a self-contained SVG rate plot.
int cmd_plot(const std::string& csv_path, const std::string& svg_path, std::ostream& out);

}  // namespace mfcavi::cli
