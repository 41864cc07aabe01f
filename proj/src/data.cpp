#include "bcarm/data.hpp"

#include "bcarm/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <tuple>

#include <boost/math/special_functions/gamma.hpp>

namespace bcarm {

namespace {

std::string trim(std::string s) {
    auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
        s = s.substr(1, s.size() - 2);
    }
    return s;
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    bool quoted = false;
    for (char c : line) {
        if (c == '"') {
            quoted = !quoted;
        } else if (c == ',' && !quoted) {
            out.push_back(trim(cell));
            cell.clear();
        } else {
            cell.push_back(c);
        }
    }
    out.push_back(trim(cell));
    return out;
}

using DateKey = std::tuple<int, int, int, int, int, int>;

std::optional<DateKey> parse_date(const std::string& text, const std::string& format) {
    std::tm tm{};
    std::istringstream in(text);
    in >> std::get_time(&tm, format.c_str());
    if (in.fail()) {
        return std::nullopt;
    }
    return DateKey{tm.tm_year, tm.tm_mon, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec};
}

std::optional<double> parse_number(const std::string& text) {
    if (text.empty()) {
        return std::nullopt;
    }
    std::size_t used = 0;
    try {
        const double v = std::stod(text, &used);
        if (used != text.size()) {
            return std::nullopt;
        }
        return v;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

std::size_t find_column(const std::vector<std::string>& header, const std::string& name) {
    const std::string target = lower(name);
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (lower(header[i]) == target) {
            return i;
        }
    }
    return header.size();
}

}  // namespace

std::vector<double> log_returns(const std::vector<double>& prices) {
    std::vector<double> out;
    if (prices.size() < 2) {
        return out;
    }
    out.reserve(prices.size() - 1);
    for (std::size_t t = 1; t < prices.size(); ++t) {
        out.push_back((std::log(prices[t]) - std::log(prices[t - 1])) * 100.0);
    }
    return out;
}

ReturnSeries parse_returns(const std::string& csv_text, const LoadOptions& options) {
    std::istringstream in(csv_text);
    std::string line;
    if (!std::getline(in, line)) {
        throw DataError("input is empty (expected a header row)");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::vector<std::string> header = split_csv(line);

    const std::size_t date_col = find_column(header, options.date_column);
    std::size_t value_col = header.size();
    if (!options.value_column.empty()) {
        value_col = find_column(header, options.value_column);
        if (value_col == header.size()) {
            throw DataError("value column '" + options.value_column + "' not found in header");
        }
    } else {
        const std::vector<std::string> candidates =
            options.mode == InputMode::Price
                ? std::vector<std::string>{"price", "close", "adj close", "adj_close"}
                : std::vector<std::string>{"return", "returns", "ret"};
        for (const auto& c : candidates) {
            value_col = find_column(header, c);
            if (value_col != header.size()) break;
        }
        if (value_col == header.size()) {
            value_col = header.size() - 1;
            if (value_col == date_col) {
                throw DataError("no value column found in header");
            }
        }
    }
    std::size_t exo_col = header.size();
    if (!options.exogenous_column.empty()) {
        exo_col = find_column(header, options.exogenous_column);
        if (exo_col == header.size()) {
            throw DataError("exogenous column '" + options.exogenous_column + "' not found");
        }
    }

    std::vector<double> values;
    std::vector<double> exogenous;
    std::vector<std::string> dates;
    std::optional<DateKey> previous;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) {
            continue;
        }
        ++row;
        const std::vector<std::string> cells = split_csv(line);
        const std::string where = "row " + std::to_string(row);
        auto cell = [&](std::size_t col) -> std::string {
            return col < cells.size() ? cells[col] : std::string{};
        };
        const std::optional<double> v = parse_number(cell(value_col));
        if (!v) {
            throw DataError(where + ": missing or unparsable value '" + cell(value_col) + "'");
        }
        if (!std::isfinite(*v)) {
            throw DataError(where + ": non-finite value");
        }
        if (options.mode == InputMode::Price && !(*v > 0.0)) {
            throw DataError(where + ": price must be positive");
        }
        if (date_col < header.size()) {
            const std::string text = cell(date_col);
            const auto key = parse_date(text, options.date_format);
            if (!key) {
                throw DataError(where + ": cannot parse date '" + text + "'");
            }
            if (previous && !(*previous < *key)) {
                throw DataError(where + ": dates are not strictly increasing at '" + text + "'");
            }
            previous = key;
            dates.push_back(text);
        }
        if (exo_col < header.size()) {
            const std::optional<double> z = parse_number(cell(exo_col));
            if (!z || !std::isfinite(*z)) {
                throw DataError(where + ": missing or non-finite exogenous value");
            }
            exogenous.push_back(*z);
        }
        values.push_back(*v);
    }
    if (values.empty()) {
        throw DataError("input has no data rows");
    }

    ReturnSeries out;
    if (options.mode == InputMode::Price) {
        out.values = log_returns(values);
        if (!dates.empty()) out.dates.assign(dates.begin() + 1, dates.end());
        if (!exogenous.empty()) out.exogenous.assign(exogenous.begin() + 1, exogenous.end());
    } else {
        out.values = std::move(values);
        out.dates = std::move(dates);
        out.exogenous = std::move(exogenous);
    }
    return out;
}

ReturnSeries load_returns(const std::string& path, const LoadOptions& options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open '" + path + "'");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_returns(buffer.str(), options);
}

SummaryStats summary_stats(const std::vector<double>& y) {
    if (y.size() < 8) {
        throw std::invalid_argument("summary statistics need at least 8 observations");
    }
    SummaryStats s;
    s.n = y.size();
    const auto n = static_cast<double>(y.size());
    double sum = 0.0;
    for (double v : y) sum += v;
    s.mean = sum / n;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : y) {
        const double d = v - s.mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    s.std_dev = std::sqrt(m2 / (n - 1.0));
    m2 /= n;
    m3 /= n;
    m4 /= n;
    s.min = *std::min_element(y.begin(), y.end());
    s.max = *std::max_element(y.begin(), y.end());
    s.median = empirical_quantile(y, 0.5);
    s.q1 = empirical_quantile(y, 0.25);
    s.q3 = empirical_quantile(y, 0.75);
    if (!(m2 > 0.0)) {
        s.degenerate = true;
        s.skewness = 0.0;
        s.kurtosis = 0.0;
        s.jarque_bera = 0.0;
        s.jarque_bera_p = 1.0;
        return s;
    }
    s.skewness = m3 / std::pow(m2, 1.5);
    s.kurtosis = m4 / (m2 * m2);
    s.jarque_bera =
        n / 6.0 * (s.skewness * s.skewness + 0.25 * (s.kurtosis - 3.0) * (s.kurtosis - 3.0));
    s.jarque_bera_p = boost::math::gamma_q(1.0, 0.5 * s.jarque_bera);
    return s;
}

std::size_t resolve_split(const ReturnSeries& series, const std::string& split,
                          const std::string& date_format) {
    const std::string text = trim(split);
    if (text.empty()) {
        throw std::invalid_argument("split is empty");
    }
    if (std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isdigit(c); })) {
        const auto index = static_cast<std::size_t>(std::stoull(text));
        if (index > series.size()) {
            throw std::invalid_argument("split index " + text + " exceeds the series length");
        }
        return index;
    }
    const auto key = parse_date(text, date_format);
    if (!key) {
        throw std::invalid_argument("split '" + text + "' is neither a count nor a date");
    }
    if (series.dates.empty()) {
        throw std::invalid_argument("date split requested but the series has no dates");
    }
    for (std::size_t i = 0; i < series.dates.size(); ++i) {
        const auto d = parse_date(series.dates[i], date_format);
        if (d && !(*d < *key)) {
            return i;
        }
    }
    return series.size();
}

}  // namespace bcarm
