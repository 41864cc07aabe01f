#include "bcarm/pipeline.hpp"

#include "bcarm/error.hpp"

#include <Eigen/Core>
#include <boost/version.hpp>

#include <algorithm>
#include <cctype>
#include <cstring>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#ifndef BCARM_VERSION
#define BCARM_VERSION "0.0.0"
#endif

namespace bcarm {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

double to_double(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    double out = 0.0;
    try {
        out = std::stod(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != v.size()) {
        throw std::invalid_argument("setting '" + key + "' expects a number, got '" + v + "'");
    }
    return out;
}

std::uint64_t to_count(const std::string& key, const std::string& v) {
    if (v.empty() || !std::all_of(v.begin(), v.end(), [](unsigned char c) { return std::isdigit(c); })) {
        throw std::invalid_argument("setting '" + key + "' expects a non-negative integer, got '" +
                                    v + "'");
    }
    return std::stoull(v);
}

/// FNV-1a over the bit patterns of the estimation sample.
std::uint64_t digest(std::span<const double> y) {
    std::uint64_t h = 1469598103934665603ULL;
    for (double v : y) {
        unsigned char bytes[sizeof(double)];
        std::memcpy(bytes, &v, sizeof(double));
        for (unsigned char b : bytes) {
            h ^= b;
            h *= 1099511628211ULL;
        }
    }
    return h;
}

void check_header(const std::filesystem::path& path, const std::vector<std::string>& expected) {
    if (read_csv_header(path) != expected) {
        throw StageError("export", "artifact '" + path.string() + "' violates its column schema");
    }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw StageError("export", "cannot write '" + path.string() + "'");
    }
    out << text;
}

}  // namespace

std::map<std::string, std::string> parse_config_text(const std::string& text) {
    std::map<std::string, std::string> out;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) {
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
        }
        out[key] = trim(line.substr(eq + 1));
    }
    return out;
}

void apply_settings(RunConfig& c, const std::map<std::string, std::string>& settings) {
    for (const auto& [key, v] : settings) {
        if (key == "input") c.input = v;
        else if (key == "mode") {
            if (v == "price") c.load.mode = InputMode::Price;
            else if (v == "return") c.load.mode = InputMode::Return;
            else throw std::invalid_argument("mode must be 'price' or 'return'");
        }
        else if (key == "date-column") c.load.date_column = v;
        else if (key == "value-column") c.load.value_column = v;
        else if (key == "date-format") c.load.date_format = v;
        else if (key == "exogenous-column") c.load.exogenous_column = v;
        else if (key == "split") c.split = v;
        else if (key == "model") c.model = v;
        else if (key == "alpha") c.alpha = static_cast<int>(to_count(key, v));
        else if (key == "tau") c.tau = to_double(key, v);
        else if (key == "threshold") c.threshold = to_double(key, v);
        else if (key == "knots") c.knots = static_cast<int>(to_count(key, v));
        else if (key == "degree") c.degree = static_cast<int>(to_count(key, v));
        else if (key == "iters") c.iterations = to_count(key, v);
        else if (key == "burnin") c.burn_in = to_count(key, v);
        else if (key == "thin") c.thin = to_count(key, v);
        else if (key == "seed") c.seed = to_count(key, v);
        else if (key == "dq-lags") c.dq_lags = to_count(key, v);
        else if (key == "bootstrap") c.bootstrap = to_count(key, v);
        else if (key == "refit-every") c.refit_every = to_count(key, v);
        else if (key == "calibration-iters") c.calibration_iterations = to_count(key, v);
        else if (key == "nic-grid") c.nic_grid = to_count(key, v);
        else if (key == "omega-var") c.prior.omega_var = to_double(key, v);
        else if (key == "gamma-var") c.prior.gamma_var = to_double(key, v);
        else if (key == "sigma-a") c.prior.sigma_a = to_double(key, v);
        else if (key == "sigma-b") c.prior.sigma_b = to_double(key, v);
        else if (key == "phi-a") c.prior.phi_a = to_double(key, v);
        else if (key == "phi-b") c.prior.phi_b = to_double(key, v);
        else if (key == "out") c.out_dir = v;
        else throw std::invalid_argument("unknown setting '" + key + "'");
    }
}

void validate(const RunConfig& c) {
    (void)nic_variant_from_string(c.model);
    if (c.alpha != 1 && c.alpha != 2) {
        throw std::invalid_argument("alpha must be 1 or 2");
    }
    if (!(c.tau > 0.0 && c.tau < 1.0)) {
        throw std::invalid_argument("tau must lie in (0, 1)");
    }
    if (!(c.iterations > c.burn_in) || c.thin == 0) {
        throw std::invalid_argument("iters must exceed burnin and thin must be positive");
    }
    if (c.alpha == 2 && c.calibration_iterations < 2) {
        throw std::invalid_argument("calibration-iters must be at least 2");
    }
    if (c.split.empty()) {
        throw std::invalid_argument("a split (count or date) is required");
    }
    validate(c.prior);
}

nlohmann::json to_json(const RunConfig& c) {
    nlohmann::json j;
    j["input"] = c.input;
    j["mode"] = c.load.mode == InputMode::Price ? "price" : "return";
    j["date_column"] = c.load.date_column;
    j["value_column"] = c.load.value_column;
    j["date_format"] = c.load.date_format;
    j["exogenous_column"] = c.load.exogenous_column;
    j["split"] = c.split;
    j["model"] = c.model;
    j["alpha"] = c.alpha;
    j["tau"] = c.tau;
    j["threshold"] = c.threshold;
    j["knots"] = c.knots;
    j["degree"] = c.degree;
    j["iters"] = c.iterations;
    j["burnin"] = c.burn_in;
    j["thin"] = c.thin;
    j["seed"] = c.seed;
    j["dq_lags"] = c.dq_lags;
    j["bootstrap"] = c.bootstrap;
    j["refit_every"] = c.refit_every;
    j["calibration_iters"] = c.calibration_iterations;
    j["nic_grid"] = c.nic_grid;
    j["prior"] = {{"omega_var", c.prior.omega_var}, {"gamma_var", c.prior.gamma_var},
                  {"sigma_a", c.prior.sigma_a},     {"sigma_b", c.prior.sigma_b},
                  {"phi_a", c.prior.phi_a},         {"phi_b", c.prior.phi_b}};
    j["out"] = c.out_dir.string();
    return j;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t z = master + (index + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

PipelineResult estimate_and_backtest(const RunConfig& config, const ReturnSeries& series) {
    PipelineResult r;
    std::size_t split = 0;
    try {
        validate(config);
        split = resolve_split(series, config.split, config.load.date_format);
    } catch (const std::exception& e) {
        throw StageError("split", e.what());
    }
    if (split < 500 || split >= series.size()) {
        throw StageError("split", "need at least 500 in-sample and 1 out-of-sample observations "
                                  "(got " + std::to_string(split) + " / " +
                                      std::to_string(series.size() - std::min(split, series.size())) + ")");
    }
    r.in_sample = split;
    r.out_sample = series.size() - split;
    const std::span<const double> all(series.values);
    const auto y_in = all.first(split);
    const auto y_out = all.subspan(split);
    std::span<const double> z_in;
    std::span<const double> z_out;
    if (!series.exogenous.empty()) {
        z_in = std::span<const double>(series.exogenous).first(split);
        z_out = std::span<const double>(series.exogenous).subspan(split);
    }
    r.y_out.assign(y_out.begin(), y_out.end());
    if (!series.dates.empty()) {
        r.dates_out.assign(series.dates.begin() + static_cast<std::ptrdiff_t>(split), series.dates.end());
    }
    r.in_sample_stats = summary_stats(std::vector<double>(y_in.begin(), y_in.end()));

    ModelSpec spec = make_model_spec(nic_variant_from_string(config.model), config.alpha, config.tau);
    spec.nic.threshold = config.threshold;
    if (!z_in.empty()) spec.nic.threshold_variable = ThresholdVariable::Exogenous;
    if (spec.nic.variant == NicVariant::Spline) {
        spec.nic.spline = default_spline_config(y_in, config.knots, config.degree);
    }
    SamplerConfig chain;
    chain.iterations = config.iterations;
    chain.burn_in = config.burn_in;
    chain.thin = config.thin;
    chain.seed = config.seed;

    try {
        if (config.alpha == 2) {
            CalibrationOptions cal;
            cal.chain = chain;
            cal.chain.iterations = config.calibration_iterations;
            cal.chain.burn_in = config.calibration_iterations / 2;
            cal.chain.thin = 1;
            r.calibration = calibrate_nu(spec, config.prior, cal, y_in, config.tau, z_in);
            spec = r.calibration->spec;
            chain.initial = r.calibration->params;
        }
        r.draws = run_chain(spec, config.prior, chain, y_in, z_in);
        r.params = r.draws.posterior_mean();
    } catch (const std::exception& e) {
        throw StageError("estimate", e.what());
    }
    r.spec = spec;

    std::vector<double> g_out;
    try {
        if (config.refit_every == 0) {
            g_out = forecast_path(spec, r.params, y_in, y_out, z_in, z_out);
        } else {
            // Expanding-window re-estimation every refit_every observations.
            g_out.reserve(y_out.size());
            ParamVector params = r.params;
            std::size_t block = 0;
            for (std::size_t s = 0; s < y_out.size(); s += config.refit_every, ++block) {
                const auto window = all.first(split + s);
                const auto z_window =
                    z_in.empty() ? std::span<const double>{} : std::span<const double>(series.exogenous).first(split + s);
                if (s > 0) {
                    SamplerConfig again = chain;
                    again.seed = derive_seed(config.seed, block);
                    again.initial = params;
                    params = run_chain(spec, config.prior, again, window, z_window).posterior_mean();
                }
                const std::size_t len = std::min(config.refit_every, y_out.size() - s);
                const auto z_next = z_out.empty() ? std::span<const double>{} : z_out.subspan(s, len);
                const auto part = forecast_path(spec, params, window, y_out.subspan(s, len), z_window, z_next);
                g_out.insert(g_out.end(), part.begin(), part.end());
            }
        }
    } catch (const std::exception& e) {
        throw StageError("forecast", e.what());
    }

    try {
        r.risk = extract_var(spec, g_out, config.tau,
                             r.calibration ? std::optional<double>(r.calibration->nu) : std::nullopt);
        if (config.alpha == 2) {
            const double mean_y = std::accumulate(y_in.begin(), y_in.end(), 0.0) /
                                  static_cast<double>(y_in.size());
            if (*r.risk.nu < 0.5) {
                attach_es(r.risk, g_out, mean_y);
            }
        }
    } catch (const std::exception& e) {
        throw StageError("risk", e.what());
    }

    try {
        BacktestOptions bt;
        bt.dq_lags = config.dq_lags;
        bt.bootstrap_replications = config.bootstrap;
        bt.seed = derive_seed(config.seed, 1u << 20);
        r.hit = hits(y_out, r.risk.var, config.tau);
        r.report = backtest(y_out, r.risk.var, r.risk.es, config.tau, bt);
    } catch (const std::exception& e) {
        throw StageError("backtest", e.what());
    }

    if (spec.nic.variant == NicVariant::Spline) {
        const std::size_t n = std::max<std::size_t>(config.nic_grid, 2);
        std::vector<double> grid(n);
        const auto& s = spec.nic.spline;
        for (std::size_t i = 0; i < n; ++i) {
            grid[i] = s.lo + (s.hi - s.lo) * static_cast<double>(i) / static_cast<double>(n - 1);
        }
        r.nic = nic_curve(spec.nic, r.draws.beta_draws(), grid, 0.95);
    }
    return r;
}

PipelineResult run_pipeline(const RunConfig& config) {
    ReturnSeries series;
    try {
        validate(config);
        series = load_returns(config.input, config.load);
    } catch (const std::exception& e) {
        throw StageError("load", e.what());
    }
    PipelineResult r = estimate_and_backtest(config, series);

    try {
        std::filesystem::create_directories(config.out_dir);
    } catch (const std::exception& e) {
        throw StageError("export", e.what());
    }
    const auto& dir = config.out_dir;
    write_draws_csv(dir / "draws.csv", r.draws);
    check_header(dir / "draws.csv", draws_columns(r.spec));
    write_forecast_csv(dir / "forecast.csv", r.dates_out, r.y_out, r.risk, r.hit);
    check_header(dir / "forecast.csv", forecast_columns());
    r.artifacts = {dir / "draws.csv", dir / "forecast.csv"};
    if (!r.nic.empty()) {
        write_nic_csv(dir / "nic.csv", r.nic);
        check_header(dir / "nic.csv", nic_columns());
        r.artifacts.push_back(dir / "nic.csv");
    }
    write_text(dir / "report.json", report_to_json(r.report).dump(2) + "\n");
    write_text(dir / "report.csv", report_to_csv(r.report));
    write_text(dir / "diagnostics.json", diagnostics_to_json(r.draws).dump(2) + "\n");

    nlohmann::json manifest;
    manifest["config"] = to_json(config);
    manifest["seed"] = config.seed;
    manifest["versions"] = {
        {"bcarm", BCARM_VERSION},
        {"compiler", __VERSION__},
        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                      "." + std::to_string(EIGEN_MINOR_VERSION)},
        {"boost", BOOST_LIB_VERSION}};
    manifest["observations"] = {{"in_sample", r.in_sample}, {"out_of_sample", r.out_sample}};
    std::ostringstream hex;
    hex << std::hex << digest(std::span<const double>(series.values).first(r.in_sample));
    manifest["estimation_input_fnv1a"] = hex.str();
    manifest["in_sample_summary"] = summary_to_json(r.in_sample_stats);
    manifest["model"] = {{"nic", to_string(r.spec.nic.variant)},
                         {"alpha", r.spec.alpha},
                         {"skewness", r.spec.tau}};
    if (r.spec.nic.variant == NicVariant::Spline) {
        manifest["model"]["spline"] = {{"degree", r.spec.nic.spline.degree},
                                       {"segments", r.spec.nic.spline.segments},
                                       {"lo", r.spec.nic.spline.lo},
                                       {"hi", r.spec.nic.spline.hi}};
    }
    if (r.calibration) {
        nlohmann::json trace = nlohmann::json::array();
        for (const auto& step : r.calibration->trace) {
            trace.push_back({{"nu", step.nu}, {"proportion", step.proportion}});
        }
        manifest["calibration"] = {{"nu", r.calibration->nu},
                                   {"proportion", r.calibration->proportion},
                                   {"trace", trace}};
    }
    nlohmann::json files = nlohmann::json::array();
    for (const auto& a : r.artifacts) files.push_back(a.filename().string());
    for (const char* extra : {"report.json", "report.csv", "diagnostics.json", "manifest.json"}) {
        files.push_back(extra);
    }
    manifest["artifacts"] = files;
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");
    r.artifacts.insert(r.artifacts.end(), {dir / "report.json", dir / "report.csv",
                                           dir / "diagnostics.json", dir / "manifest.json"});
    return r;
}

std::vector<std::string> forecast_columns() { return {"date", "return", "var", "es", "hit"}; }

std::vector<std::string> nic_columns() { return {"y", "mean", "hpd_low", "hpd_high"}; }

std::vector<std::string> draws_columns(const ModelSpec& spec) {
    auto names = parameter_names(spec);
    names.emplace_back("log_posterior");
    return names;
}

void write_draws_csv(const std::filesystem::path& path, const PosteriorDraws& draws) {
    std::ostringstream out;
    for (const auto& n : draws.names) out << n << ',';
    out << "log_posterior\n";
    for (Eigen::Index r = 0; r < draws.values.rows(); ++r) {
        for (Eigen::Index c = 0; c < draws.values.cols(); ++c) {
            out << number(draws.values(r, c)) << ',';
        }
        out << number(draws.log_posterior[static_cast<std::size_t>(r)]) << '\n';
    }
    write_text(path, out.str());
}

void write_forecast_csv(const std::filesystem::path& path, const std::vector<std::string>& dates,
                        const std::vector<double>& y, const RiskSeries& risk,
                        const HitSequence& hit) {
    std::ostringstream out;
    out << "date,return,var,es,hit\n";
    for (std::size_t t = 0; t < y.size(); ++t) {
        out << (t < dates.size() ? dates[t] : std::to_string(t + 1)) << ',' << number(y[t]) << ','
            << number(risk.var[t]) << ',' << (t < risk.es.size() ? number(risk.es[t]) : "") << ','
            << hit.hits[t] << '\n';
    }
    write_text(path, out.str());
}

void write_nic_csv(const std::filesystem::path& path, const std::vector<NicCurvePoint>& curve) {
    std::ostringstream out;
    out << "y,mean,hpd_low,hpd_high\n";
    for (const auto& p : curve) {
        out << number(p.y) << ',' << number(p.mean) << ',' << number(p.hpd_low) << ','
            << number(p.hpd_high) << '\n';
    }
    write_text(path, out.str());
}

nlohmann::json report_to_json(const BacktestReport& r) {
    nlohmann::json j;
    j["tau"] = r.tau;
    j["observations"] = r.observations;
    j["ae"] = r.actual_over_expected;
    j["ad_mean"] = r.ad_mean;
    j["ad_max"] = r.ad_max;
    j["violations"] = r.violations;
    j["lr_uc"] = {{"statistic", r.lr_uc.statistic}, {"p_value", r.lr_uc.p_value}};
    j["lr_cc"] = {{"statistic", r.lr_cc.statistic}, {"p_value", r.lr_cc.p_value}};
    j["dq"] = {{"statistic", r.dq.statistic}, {"p_value", r.dq.p_value}, {"dof", r.dq.dof}};
    j["es_bootstrap_p"] = r.es_bootstrap_p ? nlohmann::json(*r.es_bootstrap_p) : nlohmann::json();
    j["traffic_light"] = to_string(r.zone);
    j["average_check_loss"] = r.average_check_loss;
    return j;
}

std::string report_to_csv(const BacktestReport& r) {
    std::ostringstream out;
    out << "tau,observations,ae,ad_mean,ad_max,violations,lr_uc,lr_uc_p,lr_cc,lr_cc_p,dq,dq_p,"
           "es_bootstrap_p,traffic_light,average_check_loss\n";
    out << number(r.tau) << ',' << r.observations << ',' << number(r.actual_over_expected) << ','
        << number(r.ad_mean) << ',' << number(r.ad_max) << ',' << r.violations << ','
        << number(r.lr_uc.statistic) << ',' << number(r.lr_uc.p_value) << ','
        << number(r.lr_cc.statistic) << ',' << number(r.lr_cc.p_value) << ','
        << number(r.dq.statistic) << ',' << number(r.dq.p_value) << ','
        << (r.es_bootstrap_p ? number(*r.es_bootstrap_p) : "") << ',' << to_string(r.zone) << ','
        << number(r.average_check_loss) << '\n';
    return out.str();
}

nlohmann::json diagnostics_to_json(const PosteriorDraws& d) {
    nlohmann::json j;
    j["acceptance"] = {{"beta", d.acceptance_beta},
                       {"omega", d.acceptance_omega},
                       {"gamma", d.acceptance_gamma},
                       {"sigma", d.acceptance_sigma},
                       {"joint", d.acceptance_joint}};
    j["retained_draws"] = d.size();
    const auto& p = d.final_proposal;
    j["final_proposal"] = {{"step", p.step},
                           {"tuning", p.tuning},
                           {"omega", {{"mean", p.omega_mean}, {"var", p.omega_var}}},
                           {"gamma", {{"mean", p.gamma_mean}, {"var", p.gamma_var}}},
                           {"log_sigma", {{"mean", p.log_sigma_mean}, {"var", p.log_sigma_var}}},
                           {"beta_mean", std::vector<double>(p.beta_mean.data(),
                                                             p.beta_mean.data() + p.beta_mean.size())},
                           {"beta_var", [&] {
                                std::vector<double> v;
                                for (Eigen::Index i = 0; i < p.beta_cov.rows(); ++i) v.push_back(p.beta_cov(i, i));
                                return v;
                            }()}};
    nlohmann::json schedule = nlohmann::json::array();
    for (std::size_t i : {std::size_t{1}, std::size_t{10}, std::size_t{100}, std::size_t{1000},
                          std::size_t{10000}, p.step}) {
        if (i == 0 || i > std::max<std::size_t>(p.step, 1)) continue;
        schedule.push_back({{"step", i}, {"rate", adaptation_rate(i, p.tuning)}});
    }
    j["adaptation_schedule"] = schedule;
    return j;
}

nlohmann::json summary_to_json(const SummaryStats& s) {
    return {{"n", s.n},          {"mean", s.mean},         {"median", s.median},
            {"std", s.std_dev},  {"min", s.min},           {"max", s.max},
            {"q1", s.q1},        {"q3", s.q3},             {"skewness", s.skewness},
            {"kurtosis", s.kurtosis}, {"jarque_bera", s.jarque_bera},
            {"jarque_bera_p", s.jarque_bera_p}, {"degenerate", s.degenerate}};
}

std::vector<std::string> read_csv_header(const std::filesystem::path& path) {
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
}

}  // namespace bcarm
