#include "mfcavi/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mfcavi/analysis.hpp"
#include "mfcavi/io.hpp"

namespace mfcavi {

using nlohmann::json;

namespace {

struct Validator {
    std::vector<std::string> errors;

    void fail(const std::string& path, const std::string& message) {
        errors.push_back(path + ": " + message);
    }

    bool require(bool ok, const std::string& path, const std::string& message) {
        if (!ok) fail(path, message);
        return ok;
    }
};

std::pair<int, int> line_column(const std::string& text, std::size_t byte) {
    int line = 1, column = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            column = 1;
        } else {
            ++column;
        }
    }
    return {line, column};
}

bool get_positive_int(const json& j, const char* key, int& out, Validator& v,
                      const std::string& path) {
    if (!j.contains(key)) return false;
    if (!j[key].is_number_integer() || j[key].get<long long>() < 1) {
        v.fail(path, "must be a positive integer");
        return false;
    }
    out = j[key].get<int>();
    return true;
}

std::optional<Vector> get_vector(const json& j, Validator& v, const std::string& path) {
    if (!j.is_array()) {
        v.fail(path, "must be an array of numbers");
        return std::nullopt;
    }
    Vector out;
    out.reserve(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) {
            v.fail(path + "[" + std::to_string(i) + "]", "must be a number");
            return std::nullopt;
        }
        const double value = j[i].get<double>();
        if (!std::isfinite(value)) {
            v.fail(path + "[" + std::to_string(i) + "]", "must be finite");
            return std::nullopt;
        }
        out.push_back(value);
    }
    return out;
}

}  // namespace

int ProblemConfig::dimension() const {
    int d = 0;
    for (int s : blocks) d += s;
    return d;
}

Potential ProblemConfig::potential() const {
    return Potential(quadratic, linear, monomials, extra_smoothness);
}

BlockStructure ProblemConfig::block_structure() const { return BlockStructure(blocks); }

ConfigLoad load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        ConfigLoad out;
        out.errors.push_back(path + ": cannot open file");
        return out;
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str(), path);
}

ConfigLoad parse_config(const std::string& json_text, const std::string& origin) {
    ConfigLoad out;
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        const auto [line, column] = line_column(json_text, e.byte > 0 ? e.byte - 1 : 0);
        out.errors.push_back(origin + ":" + std::to_string(line) + ":" + std::to_string(column) +
                             ": JSON parse error: " + e.what());
        return out;
    }
    if (!j.is_object()) {
        out.errors.push_back(origin + ": top-level JSON value must be an object");
        return out;
    }

    Validator v;
    ProblemConfig cfg;

    // blocks
    if (!j.contains("blocks")) {
        v.fail("blocks", "required");
    } else if (!j["blocks"].is_array() || j["blocks"].empty()) {
        v.fail("blocks", "must be a non-empty array of positive integers");
    } else {
        for (std::size_t k = 0; k < j["blocks"].size(); ++k) {
            const json& e = j["blocks"][k];
            if (!e.is_number_integer() || e.get<long long>() < 1) {
                v.fail("blocks[" + std::to_string(k) + "]", "must be a positive integer");
            } else {
                cfg.blocks.push_back(e.get<int>());
            }
        }
    }
    const int d = cfg.dimension();
    const int block_count = static_cast<int>(cfg.blocks.size());

    // quadratic
    if (!j.contains("quadratic") || !j["quadratic"].is_object()) {
        v.fail("quadratic", "required object with fields Q and b");
    } else {
        const json& quad = j["quadratic"];
        if (!quad.contains("Q") || !quad["Q"].is_array() ||
            static_cast<int>(quad["Q"].size()) != d) {
            v.fail("quadratic.Q", "must be a " + std::to_string(d) + "x" + std::to_string(d) +
                                      " nested array");
        } else {
            cfg.quadratic = Matrix(d, d);
            bool shape_ok = true;
            for (int i = 0; i < d && shape_ok; ++i) {
                const auto row = get_vector(quad["Q"][static_cast<std::size_t>(i)], v,
                                            "quadratic.Q[" + std::to_string(i) + "]");
                if (!row || static_cast<int>(row->size()) != d) {
                    if (row)
                        v.fail("quadratic.Q[" + std::to_string(i) + "]",
                               "row must have length " + std::to_string(d));
                    shape_ok = false;
                    break;
                }
                for (int c = 0; c < d; ++c) cfg.quadratic(i, c) = (*row)[static_cast<std::size_t>(c)];
            }
            if (shape_ok) {
                for (int i = 0; i < d; ++i)
                    for (int c = i + 1; c < d; ++c)
                        if (std::abs(cfg.quadratic(i, c) - cfg.quadratic(c, i)) > 1e-9)
                            v.fail("quadratic.Q", "not symmetric: entries (" + std::to_string(i) +
                                                      "," + std::to_string(c) + ") and (" +
                                                      std::to_string(c) + "," + std::to_string(i) +
                                                      ") differ by more than 1e-9");
            }
        }
        if (!quad.contains("b")) {
            v.fail("quadratic.b", "required");
        } else if (auto b = get_vector(quad["b"], v, "quadratic.b")) {
            if (static_cast<int>(b->size()) != d)
                v.fail("quadratic.b", "must have length " + std::to_string(d));
            else
                cfg.linear = std::move(*b);
        }
    }

    // monomials
    if (j.contains("monomials")) {
        if (!j["monomials"].is_array()) {
            v.fail("monomials", "must be an array");
        } else {
            for (std::size_t t = 0; t < j["monomials"].size(); ++t) {
                const std::string path = "monomials[" + std::to_string(t) + "]";
                const json& mj = j["monomials"][t];
                if (!mj.is_object() || !mj.contains("coeff") || !mj.contains("powers") ||
                    !mj["coeff"].is_number() || !mj["powers"].is_object()) {
                    v.fail(path, "must be an object {coeff: number, powers: {index: exponent}}");
                    continue;
                }
                Monomial m;
                m.coeff = mj["coeff"].get<double>();
                bool ok = std::isfinite(m.coeff);
                if (!ok) v.fail(path + ".coeff", "must be finite");
                for (const auto& [key, value] : mj["powers"].items()) {
                    int index = -1;
                    try {
                        index = std::stoi(key);
                    } catch (...) {
                        v.fail(path + ".powers", "index '" + key + "' is not an integer");
                        ok = false;
                        continue;
                    }
                    if (index < 0 || index >= d) {
                        v.fail(path + ".powers", "coordinate " + key + " out of range [0," +
                                                     std::to_string(d) + ")");
                        ok = false;
                        continue;
                    }
                    if (!value.is_number_integer() || value.get<long long>() < 1) {
                        v.fail(path + ".powers." + key, "exponent must be a positive integer");
                        ok = false;
                        continue;
                    }
                    m.powers.emplace_back(index, value.get<int>());
                }
                if (ok) cfg.monomials.push_back(std::move(m));
            }
        }
    }

    // extra smoothness
    if (j.contains("extra_smoothness")) {
        if (auto extra = get_vector(j["extra_smoothness"], v, "extra_smoothness")) {
            if (static_cast<int>(extra->size()) != block_count) {
                v.fail("extra_smoothness", "must have one entry per block");
            } else {
                for (std::size_t k = 0; k < extra->size(); ++k)
                    if ((*extra)[k] < 0.0)
                        v.fail("extra_smoothness[" + std::to_string(k) + "]", "must be >= 0");
                cfg.extra_smoothness = std::move(*extra);
            }
        }
    }

    // engine
    std::string engine = "gaussian";
    if (j.contains("engine")) {
        if (!j["engine"].is_string() ||
            (j["engine"] != "gaussian" && j["engine"] != "grid")) {
            v.fail("engine", "must be \"gaussian\" or \"grid\"");
        } else {
            engine = j["engine"].get<std::string>();
        }
    }
    cfg.engine = engine == "grid" ? EngineKind::Grid : EngineKind::Gaussian;
    if (cfg.engine == EngineKind::Gaussian && !cfg.monomials.empty())
        v.fail("engine", "gaussian engine requires purely quadratic potential");
    if (cfg.engine == EngineKind::Grid) {
        for (int s : cfg.blocks)
            if (s != 1) {
                v.fail("blocks", "grid engine requires all blocks of size 1");
                break;
            }
    }
    if (!cfg.monomials.empty() && !cfg.extra_smoothness)
        v.fail("extra_smoothness", "required when monomials are present (declared per-block "
                                   "smoothness of the monomial part)");

    // grid
    if (j.contains("grid")) {
        if (cfg.engine != EngineKind::Grid) {
            v.fail("grid", "only valid with engine \"grid\"");
        } else if (!j["grid"].is_object()) {
            v.fail("grid", "must be an object {lo, hi, points}");
        } else {
            const json& g = j["grid"];
            double lo = -12.0, hi = 12.0;
            int points = 2048;
            if (g.contains("lo") && g["lo"].is_number()) lo = g["lo"].get<double>();
            else if (g.contains("lo")) v.fail("grid.lo", "must be a number");
            if (g.contains("hi") && g["hi"].is_number()) hi = g["hi"].get<double>();
            else if (g.contains("hi")) v.fail("grid.hi", "must be a number");
            get_positive_int(g, "points", points, v, "grid.points");
            if (!(lo < hi)) v.fail("grid", "needs lo < hi");
            else if (points < 64) v.fail("grid.points", "must be at least 64");
            else cfg.grid = Grid1D(lo, hi, points);
        }
    }

    // init
    if (!j.contains("init") || !j["init"].is_object()) {
        v.fail("init", "required: {means, variances} or {one_sweep_from_point}");
    } else {
        const json& init = j["init"];
        if (init.contains("one_sweep_from_point")) {
            cfg.init.one_sweep_from_point = true;
            if (auto p = get_vector(init["one_sweep_from_point"], v, "init.one_sweep_from_point")) {
                if (static_cast<int>(p->size()) != d)
                    v.fail("init.one_sweep_from_point", "must have length " + std::to_string(d));
                else
                    cfg.init.point = std::move(*p);
            }
        } else if (init.contains("means") && init.contains("variances")) {
            if (auto m = get_vector(init["means"], v, "init.means")) {
                if (static_cast<int>(m->size()) != d)
                    v.fail("init.means", "must have length " + std::to_string(d));
                else
                    cfg.init.means = std::move(*m);
            }
            if (auto s = get_vector(init["variances"], v, "init.variances")) {
                if (static_cast<int>(s->size()) != d) {
                    v.fail("init.variances", "must have length " + std::to_string(d));
                } else {
                    for (std::size_t i = 0; i < s->size(); ++i)
                        if (!((*s)[i] > 0.0))
                            v.fail("init.variances[" + std::to_string(i) + "]",
                                   "must be positive");
                    cfg.init.variances = std::move(*s);
                }
            }
        } else {
            v.fail("init", "needs either means+variances or one_sweep_from_point");
        }
    }

    // schedule
    if (j.contains("schedule")) {
        const json& s = j["schedule"];
        if (!s.is_object() || !s.contains("type") || !s["type"].is_string()) {
            v.fail("schedule", "must be an object with a string field 'type'");
        } else {
            const std::string type = s["type"].get<std::string>();
            if (type == "random") {
                std::uint64_t seed = 0;
                if (s.contains("seed") && s["seed"].is_number_unsigned())
                    seed = s["seed"].get<std::uint64_t>();
                else if (s.contains("seed") && s["seed"].is_number_integer() &&
                         s["seed"].get<long long>() >= 0)
                    seed = static_cast<std::uint64_t>(s["seed"].get<long long>());
                else
                    v.fail("schedule.seed", "required non-negative integer for random scan");
                cfg.schedule = Schedule::random(seed);
            } else if (type == "cyclic") {
                cfg.schedule = Schedule::cyclic();
            } else if (type == "fixed") {
                if (!s.contains("sequence") || !s["sequence"].is_array() ||
                    s["sequence"].empty()) {
                    v.fail("schedule.sequence", "required non-empty array for fixed scan");
                } else {
                    std::vector<int> seq;
                    bool ok = true;
                    for (std::size_t i = 0; i < s["sequence"].size(); ++i) {
                        const json& e = s["sequence"][i];
                        if (!e.is_number_integer() || e.get<long long>() < 0 ||
                            e.get<long long>() >= block_count) {
                            v.fail("schedule.sequence[" + std::to_string(i) + "]",
                                   "must be a block index in [0," + std::to_string(block_count) +
                                       ")");
                            ok = false;
                        } else {
                            seq.push_back(e.get<int>());
                        }
                    }
                    if (ok && !seq.empty()) cfg.schedule = Schedule::fixed(std::move(seq));
                }
            } else {
                v.fail("schedule.type", "must be one of random, cyclic, fixed");
            }
        }
    }

    // counters and thresholds
    if (j.contains("updates")) {
        if (!j["updates"].is_number_integer() || j["updates"].get<long long>() < 0)
            v.fail("updates", "must be a non-negative integer");
        else
            cfg.updates = j["updates"].get<int>();
    }
    if (j.contains("trials")) {
        int trials = 1;
        if (get_positive_int(j, "trials", trials, v, "trials")) cfg.trials = trials;
    }
    for (const char* key : {"epsilon", "delta"}) {
        if (!j.contains(key)) continue;
        if (!j[key].is_number() || !(j[key].get<double>() > 0.0)) {
            v.fail(key, "must be a positive number");
        } else if (std::string(key) == "epsilon") {
            cfg.epsilon = j[key].get<double>();
        } else {
            if (j[key].get<double>() > 1.0) v.fail(key, "must be in (0, 1]");
            else cfg.delta = j[key].get<double>();
        }
    }
    if (j.contains("lambda_star_override")) {
        if (!j["lambda_star_override"].is_number() ||
            j["lambda_star_override"].get<double>() < 0.0 ||
            j["lambda_star_override"].get<double>() > 1.0)
            v.fail("lambda_star_override", "must be a number in [0, 1]");
        else
            cfg.lambda_star_override = j["lambda_star_override"].get<double>();
    }

    // cross-field checks that need a constructible potential
    if (v.errors.empty()) {
        try {
            const Potential pot = cfg.potential();
            const BlockStructure blocks = cfg.block_structure();
            if (cfg.engine == EngineKind::Gaussian) (void)Cholesky(pot.quadratic());
            if (cfg.engine == EngineKind::Grid && !cfg.grid) {
                // default window +-12 in the per-block rescaled coordinates
                const std::vector<double> weights = block_smoothness(pot, blocks);
                double min_weight = weights.front();
                for (double w : weights) min_weight = std::min(min_weight, w);
                const double half = 12.0 / std::sqrt(min_weight);
                cfg.grid = Grid1D(-half, half, 2048);
            }
        } catch (const std::exception& e) {
            v.fail("quadratic", e.what());
        }
    }

    out.errors = std::move(v.errors);
    if (out.errors.empty()) out.config = std::move(cfg);
    return out;
}

std::string config_to_json(const ProblemConfig& config, int indent) {
    json j;
    j["blocks"] = config.blocks;
    const int d = config.dimension();
    json q = json::array();
    for (int i = 0; i < d; ++i) {
        json row = json::array();
        for (int c = 0; c < d; ++c) row.push_back(config.quadratic(i, c));
        q.push_back(std::move(row));
    }
    j["quadratic"]["Q"] = std::move(q);
    j["quadratic"]["b"] = config.linear;
    if (!config.monomials.empty()) {
        json ms = json::array();
        for (const Monomial& m : config.monomials) {
            json mj;
            mj["coeff"] = m.coeff;
            json powers = json::object();
            for (const auto& [idx, e] : m.powers) powers[std::to_string(idx)] = e;
            mj["powers"] = std::move(powers);
            ms.push_back(std::move(mj));
        }
        j["monomials"] = std::move(ms);
    }
    if (config.extra_smoothness) j["extra_smoothness"] = *config.extra_smoothness;
    j["engine"] = config.engine_name();
    if (config.grid) {
        j["grid"]["lo"] = config.grid->lo;
        j["grid"]["hi"] = config.grid->hi;
        j["grid"]["points"] = config.grid->points;
    }
    if (config.init.one_sweep_from_point) {
        j["init"]["one_sweep_from_point"] = config.init.point;
    } else {
        j["init"]["means"] = config.init.means;
        j["init"]["variances"] = config.init.variances;
    }
    switch (config.schedule.kind()) {
        case Schedule::Kind::Random:
            j["schedule"]["type"] = "random";
            j["schedule"]["seed"] = config.schedule.seed();
            break;
        case Schedule::Kind::Cyclic:
            j["schedule"]["type"] = "cyclic";
            break;
        case Schedule::Kind::Fixed:
            j["schedule"]["type"] = "fixed";
            j["schedule"]["sequence"] = config.schedule.sequence();
            break;
    }
    j["updates"] = config.updates;
    j["trials"] = config.trials;
    if (config.epsilon) j["epsilon"] = *config.epsilon;
    if (config.delta) j["delta"] = *config.delta;
    if (config.lambda_star_override) j["lambda_star_override"] = *config.lambda_star_override;
    return j.dump(indent);
}

std::string problem_hash(const ProblemConfig& config) {
    json j;
    j["blocks"] = config.blocks;
    const int d = config.dimension();
    json q = json::array();
    for (int i = 0; i < d; ++i) {
        json row = json::array();
        for (int c = 0; c < d; ++c) row.push_back(config.quadratic(i, c));
        q.push_back(std::move(row));
    }
    j["Q"] = std::move(q);
    j["b"] = config.linear;
    json ms = json::array();
    for (const Monomial& m : config.monomials) {
        json mj;
        mj["coeff"] = m.coeff;
        for (const auto& [idx, e] : m.powers) mj["powers"][std::to_string(idx)] = e;
        ms.push_back(std::move(mj));
    }
    j["monomials"] = std::move(ms);
    j["engine"] = config.engine_name();
    if (config.grid) j["grid"] = {config.grid->lo, config.grid->hi, config.grid->points};
    if (config.init.one_sweep_from_point)
        j["init"] = {{"point", config.init.point}};
    else
        j["init"] = {{"means", config.init.means}, {"variances", config.init.variances}};
    return fnv1a_hex(j.dump());
}

}  // namespace mfcavi
