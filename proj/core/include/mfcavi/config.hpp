#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mfcavi/block_structure.hpp"
#include "mfcavi/grid_engine.hpp"
#include "mfcavi/potential.hpp"
#include "mfcavi/rng.hpp"

namespace mfcavi {

enum class EngineKind { Gaussian, Grid };

struct InitConfig {
    bool one_sweep_from_point = false;
    Vector means;
    Vector variances;  // per coordinate; diagonal covariance for d_k > 1
    Vector point;      // one_sweep_from_point only
};

/// Fully validated problem description as loaded from a config file.
struct ProblemConfig {
    std::vector<int> blocks;
    Matrix quadratic;
    Vector linear;
    std::vector<Monomial> monomials;
    std::optional<std::vector<double>> extra_smoothness;
    EngineKind engine = EngineKind::Gaussian;
    std::optional<Grid1D> grid;  // grid engine; filled with defaults when omitted
    InitConfig init;
    Schedule schedule = Schedule::cyclic();
    int updates = 100;
    int trials = 1;
    std::optional<double> epsilon;
    std::optional<double> delta;
    /// Declared (uncertified) convexity constant; overrides the computed
    /// one in envelope checks so that wrong declarations surface as
    /// violations.
    std::optional<double> lambda_star_override;

    int dimension() const;
    Potential potential() const;
    BlockStructure block_structure() const;
    std::string engine_name() const { return engine == EngineKind::Gaussian ? "gaussian" : "grid"; }
};

/// Either a config or the full list of validation errors; parse errors
/// carry line/column, semantic errors carry field paths.
struct ConfigLoad {
    std::optional<ProblemConfig> config;
    std::vector<std::string> errors;

    bool ok() const { return config.has_value() && errors.empty(); }
};

ConfigLoad load_config(const std::string& path);
ConfigLoad parse_config(const std::string& json_text, const std::string& origin = "<string>");

/// Canonical JSON echo of a validated config; parse_config on the result
/// reproduces the config.
std::string config_to_json(const ProblemConfig& config, int indent = 2);

/// FNV-1a over the canonical serialization of the problem fields (blocks,
/// potential, engine, grid, init); schedule, trials and updates do not
/// contribute.
std::string problem_hash(const ProblemConfig& config);

}  // namespace mfcavi
