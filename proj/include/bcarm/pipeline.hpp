#pragma once

#include "bcarm/backtest.hpp"
#include "bcarm/data.hpp"
#include "bcarm/model.hpp"
#include "bcarm/nic.hpp"
#include "bcarm/risk.hpp"
#include "bcarm/sampler.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bcarm {

struct RunConfig {
    std::string input;
    LoadOptions load{};
    /// Number of in-sample observations, or an ISO date (first out-of-sample day).
    std::string split;
    std::string model = "sav";
    int alpha = 1;
    double tau = 0.05;
    double threshold = 0.0;
    int knots = 20;
    int degree = 3;
    std::size_t iterations = 50000;
    std::size_t burn_in = 20000;
    std::size_t thin = 10;
    std::uint64_t seed = 20180101;
    std::size_t dq_lags = 4;
    std::size_t bootstrap = 1000;
    /// Re-estimate every n out-of-sample observations on the expanding window; 0 keeps parameters fixed.
    std::size_t refit_every = 0;
    /// Chain length per candidate during expectile calibration.
    std::size_t calibration_iterations = 6000;
    std::size_t nic_grid = 101;
    PriorSpec prior{};
    std::filesystem::path out_dir = "out";
};

/**
 * Flat key = value configuration. '#' starts a comment, blank lines are
 * ignored, keys are the long command-line flag names without dashes
 * (e.g. "tau = 0.01", "dq-lags = 4"). Unknown keys are an error.
 */
[[nodiscard]] std::map<std::string, std::string> parse_config_text(const std::string& text);

/// Applies key/value pairs on top of `config`; throws std::invalid_argument on bad keys or values.
void apply_settings(RunConfig& config, const std::map<std::string, std::string>& settings);

void validate(const RunConfig& config);

[[nodiscard]] nlohmann::json to_json(const RunConfig& config);

/// Stage outputs kept in memory alongside the written artifacts.
struct PipelineResult {
    ModelSpec spec;
    std::size_t in_sample = 0;
    std::size_t out_sample = 0;
    PosteriorDraws draws;
    ParamVector params;
    RiskSeries risk;
    std::vector<double> y_out;
    std::vector<std::string> dates_out;
    HitSequence hit;
    BacktestReport report;
    SummaryStats in_sample_stats;
    std::vector<NicCurvePoint> nic;
    std::optional<CalibrationResult> calibration;
    std::vector<std::filesystem::path> artifacts;
};

/// Failure in a named pipeline stage.
class StageError : public std::runtime_error {
public:
    StageError(std::string stage, const std::string& what)
        : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}
    [[nodiscard]] const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

/// Runs the in-memory stages on an already loaded series (no files written).
[[nodiscard]] PipelineResult estimate_and_backtest(const RunConfig& config,
                                                   const ReturnSeries& series);

/// load -> split -> estimate -> forecast -> risk -> backtest -> export.
[[nodiscard]] PipelineResult run_pipeline(const RunConfig& config);

/// Seed for the i-th series of a batch: splitmix64 of master + i.
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

/// Column schemas of the exported artifacts.
[[nodiscard]] std::vector<std::string> forecast_columns();
[[nodiscard]] std::vector<std::string> nic_columns();
[[nodiscard]] std::vector<std::string> draws_columns(const ModelSpec& spec);

void write_draws_csv(const std::filesystem::path& path, const PosteriorDraws& draws);
void write_forecast_csv(const std::filesystem::path& path, const std::vector<std::string>& dates,
                        const std::vector<double>& y, const RiskSeries& risk,
                        const HitSequence& hit);
void write_nic_csv(const std::filesystem::path& path, const std::vector<NicCurvePoint>& curve);

[[nodiscard]] nlohmann::json report_to_json(const BacktestReport& report);
[[nodiscard]] std::string report_to_csv(const BacktestReport& report);
[[nodiscard]] nlohmann::json diagnostics_to_json(const PosteriorDraws& draws);
[[nodiscard]] nlohmann::json summary_to_json(const SummaryStats& stats);

/// Header row of a CSV file split on commas.
[[nodiscard]] std::vector<std::string> read_csv_header(const std::filesystem::path& path);

}  // namespace bcarm
