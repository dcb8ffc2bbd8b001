#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "mfcavi/commands.hpp"
#include "mfcavi/config.hpp"
#include "mfcavi/io.hpp"
#include "mfcavi/svg_plot.hpp"

using namespace mfcavi;
namespace fs = std::filesystem;

namespace {

const char* kMinimalGaussian = R"({
  "blocks": [1, 1],
  "quadratic": {"Q": [[1.0, 0.5], [0.5, 1.0]], "b": [0.0, 0.0]},
  "init": {"means": [1.0, 1.0], "variances": [1.0, 1.0]}
})";

std::string temp_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("mfcavi_test_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir.string();
}

int count_occurrences(const std::string& text, const std::string& needle) {
    int count = 0;
    std::size_t pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos) {
        ++count;
        pos += needle.size();
    }
    return count;
}

}  // namespace

TEST_CASE("config parsing and defaults") {
    SUBCASE("minimal config fills defaults") {
        const ConfigLoad loaded = parse_config(kMinimalGaussian);
        REQUIRE(loaded.ok());
        CHECK(loaded.config->trials == 1);
        CHECK(loaded.config->schedule.kind() == Schedule::Kind::Cyclic);
        CHECK(loaded.config->engine == EngineKind::Gaussian);
        CHECK(loaded.config->updates == 100);
        CHECK_FALSE(loaded.config->epsilon.has_value());
    }
    SUBCASE("asymmetric Q rejected naming the entries") {
        const char* bad = R"({
          "blocks": [1, 1],
          "quadratic": {"Q": [[1.0, 0.5], [0.4999, 1.0]], "b": [0.0, 0.0]},
          "init": {"means": [0.0, 0.0], "variances": [1.0, 1.0]}
        })";
        const ConfigLoad loaded = parse_config(bad);
        REQUIRE_FALSE(loaded.ok());
        bool found = false;
        for (const std::string& e : loaded.errors)
            if (e.find("(0,1)") != std::string::npos && e.find("(1,0)") != std::string::npos)
                found = true;
        CHECK(found);
    }
    SUBCASE("monomials with the gaussian engine rejected") {
        const char* bad = R"({
          "blocks": [1],
          "quadratic": {"Q": [[1.0]], "b": [0.0]},
          "monomials": [{"coeff": 0.25, "powers": {"0": 4}}],
          "extra_smoothness": [3.0],
          "engine": "gaussian",
          "init": {"means": [0.0], "variances": [1.0]}
        })";
        const ConfigLoad loaded = parse_config(bad);
        REQUIRE_FALSE(loaded.ok());
        bool found = false;
        for (const std::string& e : loaded.errors)
            if (e.find("gaussian engine requires purely quadratic potential") != std::string::npos)
                found = true;
        CHECK(found);
    }
    SUBCASE("all errors are collected, not just the first") {
        const char* bad = R"({
          "blocks": [1, 1],
          "quadratic": {"Q": [[1.0, 0.0], [0.0, 1.0]], "b": [0.0]},
          "init": {"means": [0.0, 0.0], "variances": [1.0, -1.0]},
          "updates": -3,
          "epsilon": 0.0
        })";
        const ConfigLoad loaded = parse_config(bad);
        REQUIRE_FALSE(loaded.ok());
        CHECK(loaded.errors.size() >= 4);
    }
    SUBCASE("parse errors carry line and column") {
        const ConfigLoad loaded = parse_config("{\n  \"blocks\": [1,\n}", "bad.json");
        REQUIRE_FALSE(loaded.ok());
        REQUIRE(loaded.errors.size() == 1);
        CHECK(loaded.errors[0].find("bad.json:3:") != std::string::npos);
        CHECK(loaded.errors[0].find("parse error") != std::string::npos);
    }
    SUBCASE("grid defaults are derived from the smoothness when omitted") {
        const char* grid_cfg = R"({
          "blocks": [1, 1],
          "quadratic": {"Q": [[4.0, 0.5], [0.5, 4.0]], "b": [0.0, 0.0]},
          "engine": "grid",
          "init": {"means": [0.0, 0.0], "variances": [0.25, 0.25]}
        })";
        const ConfigLoad loaded = parse_config(grid_cfg);
        REQUIRE(loaded.ok());
        REQUIRE(loaded.config->grid.has_value());
        CHECK(loaded.config->grid->points == 2048);
        CHECK(loaded.config->grid->hi == doctest::Approx(12.0 / 2.0));  // 12/sqrt(min L)=12/2
    }
    SUBCASE("missing file reports an error") {
        const ConfigLoad loaded = load_config("/nonexistent/nope.json");
        CHECK_FALSE(loaded.ok());
    }
}

TEST_CASE("config echo round-trips through the parser") {
    for (const char* name :
         {"gauss_k5.json", "quartic_flat.json", "tight_rho09.json", "independent_k4.json",
          "gauss_k2_grid.json"}) {
        CAPTURE(name);
        const ConfigLoad loaded = load_config(std::string(MFCAVI_CONFIG_DIR) + "/" + name);
        REQUIRE(loaded.ok());
        const std::string echo = config_to_json(*loaded.config);
        const ConfigLoad again = parse_config(echo);
        REQUIRE(again.ok());
        CHECK(config_to_json(*again.config) == echo);
        CHECK(problem_hash(*again.config) == problem_hash(*loaded.config));
    }
}

TEST_CASE("float formatting round-trips") {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456.789, -0.0, 2.5e17}) {
        const std::string s = format_double(v);
        CHECK(std::stod(s) == v);
    }
}

TEST_CASE("cmd_run writes deterministic outputs") {
    const ConfigLoad loaded = parse_config(R"({
      "blocks": [1, 1],
      "quadratic": {"Q": [[1.0, 0.5], [0.5, 1.0]], "b": [0.0, 0.0]},
      "init": {"means": [1.0, 1.0], "variances": [1.0, 1.0]},
      "schedule": {"type": "random", "seed": 7},
      "updates": 10,
      "trials": 3
    })");
    REQUIRE(loaded.ok());
    const std::string dir_a = temp_dir("run_a");
    const std::string dir_b = temp_dir("run_b");
    std::ostringstream out;
    REQUIRE(cli::cmd_run(*loaded.config, dir_a, out) == cli::kExitOk);
    REQUIRE(cli::cmd_run(*loaded.config, dir_b, out) == cli::kExitOk);

    const std::string csv_a = read_text_file(dir_a + "/trajectory.csv");
    const std::string csv_b = read_text_file(dir_b + "/trajectory.csv");
    CHECK(csv_a == csv_b);

    SUBCASE("row count and header") {
        const CsvTable table = parse_csv(csv_a);
        CHECK(table.rows.size() == 30);  // 3 trials x 10 updates
        REQUIRE(table.columns.size() == 7);
        CHECK(table.columns[0] == "trial");
        CHECK(table.columns[6] == "running_R");
        std::istringstream lines(csv_a);
        std::string header;
        std::getline(lines, header);
        CHECK(header == kTrajectoryHeader);
    }
    SUBCASE("summary round-trips and meta config reloads") {
        const RunSummary summary = summary_from_json(read_text_file(dir_a + "/summary.json"));
        CHECK(summary.trials == 3);
        CHECK(summary.updates == 10);
        CHECK(summary.ensemble.rows.size() == 11);
        CHECK(summary.lambda_star == doctest::Approx(0.5).epsilon(1e-12));

        const nlohmann::json meta = nlohmann::json::parse(read_text_file(dir_a + "/run_meta.json"));
        const ConfigLoad echo = parse_config(meta.at("config").dump());
        CHECK(echo.ok());
        CHECK(problem_hash(*echo.config) == meta.at("problem_hash").get<std::string>());
    }
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
}

TEST_CASE("cmd_run engine failure leaves no partial files") {
    // the linear tilt pushes the conditional mean far outside the domain,
    // so the boundary guard trips during the reference solve
    const ConfigLoad loaded = parse_config(R"({
      "blocks": [1, 1],
      "quadratic": {"Q": [[1.0, 0.5], [0.5, 1.0]], "b": [300.0, 0.0]},
      "engine": "grid",
      "grid": {"lo": -2.0, "hi": 2.0, "points": 512},
      "init": {"means": [0.0, 0.0], "variances": [1.0, 1.0]},
      "updates": 5,
      "trials": 1
    })");
    REQUIRE(loaded.ok());
    const std::string dir = temp_dir("run_fail");
    std::ostringstream out;
    CHECK(cli::cmd_run(*loaded.config, dir, out) == cli::kExitRuntime);
    CHECK_FALSE(fs::exists(dir + "/trajectory.csv"));
    CHECK_FALSE(fs::exists(dir + "/summary.json"));
    CHECK_FALSE(fs::exists(dir + "/run_meta.json"));
    CHECK(out.str().find("error") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("one_sweep_from_point initialization runs through both engines") {
    SUBCASE("gaussian") {
        const ConfigLoad loaded = parse_config(R"({
          "blocks": [1, 1],
          "quadratic": {"Q": [[1.0, 0.5], [0.5, 1.0]], "b": [1.0, 0.0]},
          "init": {"one_sweep_from_point": [2.0, -3.0]},
          "schedule": {"type": "random", "seed": 4},
          "updates": 30,
          "trials": 2
        })");
        REQUIRE(loaded.ok());
        const std::string dir = temp_dir("sweep_gauss");
        std::ostringstream out;
        REQUIRE(cli::cmd_run(*loaded.config, dir, out) == cli::kExitOk);
        const RunSummary summary = summary_from_json(read_text_file(dir + "/summary.json"));
        CHECK(summary.gap0 > 0.0);
        CHECK(std::isfinite(summary.gap0));
        CHECK(summary.ensemble.rows.back().mean_gap < summary.gap0);
        fs::remove_all(dir);
    }
    SUBCASE("grid") {
        const ConfigLoad loaded = parse_config(R"({
          "blocks": [1, 1],
          "quadratic": {"Q": [[0.0, 0.0], [0.0, 0.0]], "b": [0.0, 0.0]},
          "monomials": [
            {"coeff": 0.5, "powers": {"0": 4}},
            {"coeff": 3.0, "powers": {"0": 2, "1": 2}},
            {"coeff": 0.5, "powers": {"1": 4}}
          ],
          "extra_smoothness": [768.0, 768.0],
          "engine": "grid",
          "grid": {"lo": -8.0, "hi": 8.0, "points": 512},
          "init": {"one_sweep_from_point": [1.5, -1.0]},
          "schedule": {"type": "random", "seed": 4},
          "updates": 20,
          "trials": 1
        })");
        REQUIRE(loaded.ok());
        const std::string dir = temp_dir("sweep_grid");
        std::ostringstream out;
        REQUIRE(cli::cmd_run(*loaded.config, dir, out) == cli::kExitOk);
        const RunSummary summary = summary_from_json(read_text_file(dir + "/summary.json"));
        CHECK(summary.gap0 >= 0.0);
        CHECK(summary.ensemble.rows.back().mean_gap <= summary.gap0);
        fs::remove_all(dir);
    }
}

TEST_CASE("cmd_run on the independent target reaches machine zero") {
    const ConfigLoad loaded =
        load_config(std::string(MFCAVI_CONFIG_DIR) + "/independent_k4.json");
    REQUIRE(loaded.ok());
    const std::string dir = temp_dir("run_indep");
    std::ostringstream out;
    REQUIRE(cli::cmd_run(*loaded.config, dir, out) == cli::kExitOk);
    const CsvTable table = parse_csv(read_text_file(dir + "/trajectory.csv"));
    const int gap_col = *table.column("gap");
    CHECK(table.rows.back()[static_cast<std::size_t>(gap_col)] < 1e-12);
    fs::remove_all(dir);
}

TEST_CASE("cmd_analyze prints constants and budgets") {
    const ConfigLoad loaded = load_config(std::string(MFCAVI_CONFIG_DIR) + "/gauss_k5.json");
    REQUIRE(loaded.ok());
    std::ostringstream out;
    REQUIRE(cli::cmd_analyze(*loaded.config, out) == cli::kExitOk);
    const std::string text = out.str();
    CHECK(text.find("lambda*: ") != std::string::npos);
    CHECK(text.find("certified") != std::string::npos);
    CHECK(text.find("RS budget") != std::string::npos);
    CHECK(text.find("DS budget") != std::string::npos);

    // last line is machine-readable JSON
    const std::size_t last_newline = text.find_last_of('\n', text.size() - 2);
    const nlohmann::json j = nlohmann::json::parse(text.substr(last_newline + 1));
    CHECK(j.at("analysis").at("lambda_star").get<double>() == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(j.contains("rs_budget"));
    CHECK(j.at("block_count").get<int>() == 5);
}

TEST_CASE("cmd_analyze independent target yields lambda* = 1 and the K log budget") {
    const ConfigLoad loaded = parse_config(R"({
      "blocks": [1, 1, 1],
      "quadratic": {"Q": [[1.0, 0, 0], [0, 1.0, 0], [0, 0, 1.0]], "b": [0.0, 0.0, 0.0]},
      "init": {"means": [2.0, 2.0, 2.0], "variances": [1.0, 1.0, 1.0]},
      "epsilon": 1e-3
    })");
    REQUIRE(loaded.ok());
    std::ostringstream out;
    REQUIRE(cli::cmd_analyze(*loaded.config, out) == cli::kExitOk);
    const std::string text = out.str();
    const std::size_t last_newline = text.find_last_of('\n', text.size() - 2);
    const nlohmann::json j = nlohmann::json::parse(text.substr(last_newline + 1));
    CHECK(j.at("analysis").at("lambda_star").get<double>() == doctest::Approx(1.0));
    const double gap0 = j.at("gap0").get<double>();
    CHECK(gap0 == doctest::Approx(6.0).epsilon(1e-12));  // 1/2 * 3 * 2^2
    CHECK(j.at("rs_budget").get<long long>() ==
          static_cast<long long>(std::ceil(3.0 * std::log(gap0 / 1e-3))));
}

TEST_CASE("cmd_compare notes the O(K) case on an independent target") {
    const ConfigLoad loaded = parse_config(R"({
      "blocks": [1, 1, 1],
      "quadratic": {"Q": [[1.0, 0, 0], [0, 2.0, 0], [0, 0, 0.5]], "b": [0.0, 0.0, 0.0]},
      "init": {"means": [4.0, 4.0, 4.0], "variances": [1.0, 1.0, 1.0]},
      "schedule": {"type": "random", "seed": 9},
      "trials": 11,
      "epsilon": 1e-9
    })");
    REQUIRE(loaded.ok());
    std::ostringstream out;
    REQUIRE(cli::cmd_compare(*loaded.config, out) == cli::kExitOk);
    CHECK(out.str().find("DS updates to eps: 3") != std::string::npos);
    CHECK(out.str().find("both O(K) here") != std::string::npos);
}

TEST_CASE("cmd_analyze without epsilon omits budgets") {
    const ConfigLoad loaded = parse_config(kMinimalGaussian);
    REQUIRE(loaded.ok());
    std::ostringstream out;
    REQUIRE(cli::cmd_analyze(*loaded.config, out) == cli::kExitOk);
    const std::string text = out.str();
    CHECK(text.find("RS budget") == std::string::npos);
    const std::size_t last_newline = text.find_last_of('\n', text.size() - 2);
    const nlohmann::json j = nlohmann::json::parse(text.substr(last_newline + 1));
    CHECK(j.at("analysis").at("lambda_star").get<double>() ==
          doctest::Approx(0.5).epsilon(1e-12));
    CHECK_FALSE(j.contains("rs_budget"));
}

TEST_CASE("cmd_verify passes on a healthy problem and fails the negative control") {
    nlohmann::json base = {
        {"blocks", {1, 1}},
        {"quadratic",
         {{"Q", {{1.0, 0.9}, {0.9, 1.0}}}, {"b", {0.0, 0.0}}}},
        {"init", {{"means", {2.0, -2.0}}, {"variances", {1.0, 1.0}}}},
        {"schedule", {{"type", "random"}, {"seed", 101}}},
        {"updates", 40},
        {"trials", 200},
    };
    SUBCASE("healthy") {
        const ConfigLoad loaded = parse_config(base.dump());
        REQUIRE(loaded.ok());
        std::ostringstream out;
        CHECK(cli::cmd_verify(*loaded.config, out) == cli::kExitOk);
        CHECK(out.str().find("expected_descent") != std::string::npos);
        CHECK(out.str().find("FAIL") == std::string::npos);
    }
    SUBCASE("declared wrong lambda* is caught by the envelope") {
        base["lambda_star_override"] = 0.9;  // the true value is 0.1
        const ConfigLoad loaded = parse_config(base.dump());
        REQUIRE(loaded.ok());
        std::ostringstream out;
        CHECK(cli::cmd_verify(*loaded.config, out) == cli::kExitRuntime);
        CHECK(out.str().find("envelope_strong") != std::string::npos);
        CHECK(out.str().find("FAIL") != std::string::npos);
    }
}

TEST_CASE("cmd_compare reports counts and budgets") {
    nlohmann::json cfg = {
        {"blocks", {1, 1, 1}},
        {"quadratic",
         {{"Q", {{1.0, 0.6, 0.6}, {0.6, 1.0, 0.6}, {0.6, 0.6, 1.0}}}, {"b", {0.0, 0.0, 0.0}}}},
        {"init", {{"means", {3.0, -3.0, 3.0}}, {"variances", {1.0, 1.0, 1.0}}}},
        {"schedule", {{"type", "random"}, {"seed", 5}}},
        {"trials", 21},
        {"epsilon", 1e-6},
    };
    const ConfigLoad loaded = parse_config(cfg.dump());
    REQUIRE(loaded.ok());
    std::ostringstream out;
    REQUIRE(cli::cmd_compare(*loaded.config, out) == cli::kExitOk);
    const std::string text = out.str();
    CHECK(text.find("RS median updates") != std::string::npos);
    CHECK(text.find("DS updates") != std::string::npos);
    const std::size_t last_newline = text.find_last_of('\n', text.size() - 2);
    const nlohmann::json j = nlohmann::json::parse(text.substr(last_newline + 1));
    CHECK(j.at("rs_updates_median").get<long long>() > 0);
    CHECK(j.at("rs_updates_median").get<long long>() <= j.at("rs_budget").get<long long>());

    SUBCASE("epsilon required") {
        nlohmann::json no_eps = cfg;
        no_eps.erase("epsilon");
        const ConfigLoad plain = parse_config(no_eps.dump());
        REQUIRE(plain.ok());
        std::ostringstream err;
        CHECK(cli::cmd_compare(*plain.config, err) == cli::kExitValidation);
    }
}

TEST_CASE("plot rendering") {
    const ConfigLoad loaded = parse_config(R"({
      "blocks": [1, 1],
      "quadratic": {"Q": [[1.0, 0.5], [0.5, 1.0]], "b": [0.0, 0.0]},
      "init": {"means": [2.0, -1.0], "variances": [1.0, 1.0]},
      "schedule": {"type": "random", "seed": 3},
      "updates": 25,
      "trials": 4
    })");
    REQUIRE(loaded.ok());
    const std::string dir = temp_dir("plot");
    std::ostringstream out;
    REQUIRE(cli::cmd_run(*loaded.config, dir, out) == cli::kExitOk);

    SUBCASE("one thin polyline per trial, no envelope without the column") {
        const std::string svg_path = dir + "/plot.svg";
        REQUIRE(cli::cmd_plot(dir + "/trajectory.csv", svg_path, out) == cli::kExitOk);
        const std::string svg = read_text_file(svg_path);
        CHECK(count_occurrences(svg, "class=\"trial\"") == 4);
        CHECK(count_occurrences(svg, "class=\"mean\"") == 1);
        CHECK(svg.find("stroke-dasharray") == std::string::npos);
        CHECK(svg.find("<svg xmlns") != std::string::npos);
        CHECK(svg.find("update count") != std::string::npos);
    }
    SUBCASE("envelope column yields a dashed path") {
        // append an envelope column to the run's CSV
        const CsvTable table = parse_csv(read_text_file(dir + "/trajectory.csv"));
        std::string csv = "trial,n,gap,envelope\n";
        const int trial_col = *table.column("trial");
        const int n_col = *table.column("n");
        const int gap_col = *table.column("gap");
        for (const auto& row : table.rows) {
            const double env =
                2.0 * std::pow(0.75, row[static_cast<std::size_t>(n_col)]);
            csv += format_double(row[static_cast<std::size_t>(trial_col)]) + "," +
                   format_double(row[static_cast<std::size_t>(n_col)]) + "," +
                   format_double(row[static_cast<std::size_t>(gap_col)]) + "," +
                   format_double(env) + "\n";
        }
        write_text_file(dir + "/with_env.csv", csv);
        REQUIRE(cli::cmd_plot(dir + "/with_env.csv", dir + "/env.svg", out) == cli::kExitOk);
        const std::string svg = read_text_file(dir + "/env.svg");
        CHECK(count_occurrences(svg, "stroke-dasharray") == 1);
        CHECK(count_occurrences(svg, "class=\"envelope\"") == 1);
    }
    SUBCASE("a single-trial CSV yields exactly one thin trace") {
        std::string csv = "trial,n,gap\n";
        for (int n = 1; n <= 12; ++n)
            csv += "0," + std::to_string(n) + "," + format_double(std::pow(0.8, n)) + "\n";
        write_text_file(dir + "/single.csv", csv);
        REQUIRE(cli::cmd_plot(dir + "/single.csv", dir + "/single.svg", out) == cli::kExitOk);
        CHECK(count_occurrences(read_text_file(dir + "/single.svg"), "class=\"trial\"") == 1);
    }
    SUBCASE("empty CSV is an error and writes nothing") {
        write_text_file(dir + "/empty.csv", std::string(kTrajectoryHeader) + "\n");
        CHECK(cli::cmd_plot(dir + "/empty.csv", dir + "/empty.svg", out) ==
              cli::kExitValidation);
        CHECK_FALSE(fs::exists(dir + "/empty.svg"));
    }
    SUBCASE("missing csv is a validation error") {
        CHECK(cli::cmd_plot(dir + "/nope.csv", dir + "/x.svg", out) == cli::kExitValidation);
    }
    fs::remove_all(dir);
}
