#include "doctest.h"

#include "bcarm/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace bcarm;
namespace fs = std::filesystem;

namespace {

RunConfig fixture_config(const std::string& tag) {
    RunConfig c;
    c.input = std::string(BCARM_DATA_DIR) + "/synthetic_sav.csv";
    c.load.mode = InputMode::Return;
    c.split = "2000";
    c.iterations = 12000;
    c.burn_in = 4000;
    c.thin = 8;
    c.seed = 5;
    c.bootstrap = 200;
    c.out_dir = fs::temp_directory_path() / ("bcarm_pipeline_" + tag);
    fs::remove_all(c.out_dir);
    return c;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<std::vector<double>> read_numeric_csv(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        rows.push_back(row);
    }
    return rows;
}

}  // namespace

TEST_CASE("configuration text") {
    const auto kv = parse_config_text("# comment\ntau = 0.01\n\ndq-lags=2  # trailing\nmodel = as\n");
    CHECK(kv.at("tau") == "0.01");
    CHECK(kv.at("dq-lags") == "2");
    RunConfig c;
    apply_settings(c, kv);
    CHECK(c.tau == 0.01);
    CHECK(c.dq_lags == 2);
    CHECK(c.model == "as");
    CHECK_THROWS_AS(apply_settings(c, {{"colour", "red"}}), std::invalid_argument);
    CHECK_THROWS_AS(apply_settings(c, {{"tau", "abc"}}), std::invalid_argument);
    c.alpha = 3;
    CHECK_THROWS(validate(c));
}

TEST_CASE("seed derivation is deterministic and distinct") {
    CHECK(derive_seed(7, 0) == derive_seed(7, 0));
    CHECK(derive_seed(7, 0) != derive_seed(7, 1));
    CHECK(derive_seed(7, 1) != derive_seed(8, 0));
}

TEST_CASE("end-to-end SAV run on the bundled fixture") {
    const auto cfg = fixture_config("sav");
    const auto result = run_pipeline(cfg);
    for (const char* name : {"draws.csv", "forecast.csv", "report.json", "report.csv",
                             "diagnostics.json", "manifest.json"}) {
        CHECK(fs::exists(cfg.out_dir / name));
    }
    CHECK(result.in_sample == 2000);
    CHECK(result.out_sample == 1000);
    CHECK(result.report.actual_over_expected >= 0.7);
    CHECK(result.report.actual_over_expected <= 1.3);
    CHECK(read_csv_header(cfg.out_dir / "forecast.csv") == forecast_columns());
    CHECK(read_csv_header(cfg.out_dir / "draws.csv") == draws_columns(result.spec));

    const auto report = nlohmann::json::parse(slurp(cfg.out_dir / "report.json"));
    CHECK(report.at("violations").get<std::size_t>() == result.report.violations);
    const auto manifest = nlohmann::json::parse(slurp(cfg.out_dir / "manifest.json"));
    CHECK(manifest.at("observations").at("in_sample") == 2000);

    SUBCASE("same configuration and seed give a byte-identical forecast") {
        auto again = cfg;
        again.out_dir = cfg.out_dir.string() + "_again";
        fs::remove_all(again.out_dir);
        (void)run_pipeline(again);
        CHECK(slurp(cfg.out_dir / "forecast.csv") == slurp(again.out_dir / "forecast.csv"));
        fs::remove_all(again.out_dir);
    }
    fs::remove_all(cfg.out_dir);
}

TEST_CASE("spline CARE run exports an ordered news impact curve") {
    auto cfg = fixture_config("spline");
    cfg.model = "spline";
    cfg.alpha = 2;
    cfg.knots = 8;
    cfg.iterations = 6000;
    cfg.burn_in = 2000;
    cfg.thin = 4;
    cfg.calibration_iterations = 1500;
    const auto result = run_pipeline(cfg);
    REQUIRE(result.calibration.has_value());
    CHECK(result.risk.nu.has_value());
    CHECK(result.risk.es.size() == result.out_sample);
    CHECK(read_csv_header(cfg.out_dir / "nic.csv") == nic_columns());
    const auto rows = read_numeric_csv(cfg.out_dir / "nic.csv");
    REQUIRE(rows.size() == cfg.nic_grid);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i > 0) CHECK(rows[i][0] > rows[i - 1][0]);
        CHECK(rows[i][2] <= rows[i][1]);
        CHECK(rows[i][1] <= rows[i][3]);
    }
    fs::remove_all(cfg.out_dir);
}

TEST_CASE("stage errors") {
    auto cfg = fixture_config("errors");
    cfg.input = "/nonexistent.csv";
    try {
        (void)run_pipeline(cfg);
        FAIL("expected a load failure");
    } catch (const StageError& e) {
        CHECK(e.stage() == "load");
    }
    cfg = fixture_config("errors");
    cfg.split = "100";
    try {
        (void)run_pipeline(cfg);
        FAIL("expected a split failure");
    } catch (const StageError& e) {
        CHECK(e.stage() == "split");
    }
}
