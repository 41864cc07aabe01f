#pragma once

#include "bcarm/model.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace bcarm {

enum class InputMode { Price, Return };

struct LoadOptions {
    InputMode mode = InputMode::Price;
    std::string date_column = "date";
    /// Value column; empty selects "price" / "return" by mode, falling back to the last column.
    std::string value_column;
    /// strptime-style format for the date column.
    std::string date_format = "%Y-%m-%d";
    /// Optional exogenous threshold-variable column.
    std::string exogenous_column;
};

/**
 * Reads a headered CSV. Price mode returns 100 * (log P_t - log P_{t-1})
 * and drops the first row. Rows with missing, non-finite or (price mode)
 * non-positive values are rejected with their 1-based data-row number.
 * Dates must be strictly increasing.
 */
[[nodiscard]] ReturnSeries load_returns(const std::string& path, const LoadOptions& options);

/// Same as load_returns on in-memory CSV text.
[[nodiscard]] ReturnSeries parse_returns(const std::string& csv_text, const LoadOptions& options);

/// 100 * (log p_t - log p_{t-1}).
[[nodiscard]] std::vector<double> log_returns(const std::vector<double>& prices);

struct SummaryStats {
    std::size_t n = 0;
    double mean = 0.0;
    double median = 0.0;
    double std_dev = 0.0;
    double min = 0.0;
    double max = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    double skewness = 0.0;
    /// Raw (not excess) moment kurtosis.
    double kurtosis = 0.0;
    double jarque_bera = 0.0;
    double jarque_bera_p = 1.0;
    bool degenerate = false;
};

[[nodiscard]] SummaryStats summary_stats(const std::vector<double>& y);

/// Index of the first out-of-sample observation for a split given as an integer count or a date.
[[nodiscard]] std::size_t resolve_split(const ReturnSeries& series, const std::string& split,
                                        const std::string& date_format = "%Y-%m-%d");

}  // namespace bcarm
