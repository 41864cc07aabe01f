#include "bcarm/pipeline.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <future>
#include <iostream>
#include <sstream>

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open config file '" + path + "'");
    }
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void print_summary(const bcarm::PipelineResult& r, std::ostream& os) {
    const auto& rep = r.report;
    os << "in-sample " << r.in_sample << ", out-of-sample " << r.out_sample << '\n';
    if (r.calibration) {
        os << "calibrated expectile level nu = " << r.calibration->nu << " (in-sample proportion "
           << r.calibration->proportion << ")\n";
    }
    os << "A/E " << rep.actual_over_expected << ", violations " << rep.violations
       << ", LR_uc p " << rep.lr_uc.p_value << ", LR_cc p " << rep.lr_cc.p_value << ", DQ p "
       << rep.dq.p_value;
    if (rep.es_bootstrap_p) os << ", ES bootstrap p " << *rep.es_bootstrap_p;
    os << ", zone " << bcarm::to_string(rep.zone) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian conditional autoregressive VaR/ES estimation and backtesting"};

    std::vector<std::string> inputs;
    std::string config_path;
    bool summary_only = false;
    std::map<std::string, std::string> flags;

    app.add_option("--input", inputs, "CSV file(s); several inputs run as a batch");
    app.add_option("--config", config_path, "key = value settings file (flags override it)");
    app.add_flag("--summary", summary_only, "print summary statistics of the returns and exit");

    const std::vector<std::pair<std::string, std::string>> keyed = {
        {"mode", "price | return"},
        {"date-column", "date column name"},
        {"value-column", "price/return column name"},
        {"date-format", "strptime date format (default %Y-%m-%d)"},
        {"exogenous-column", "exogenous threshold variable column"},
        {"split", "in-sample size or first out-of-sample date"},
        {"model", "sav | as | threshold | ig | spline"},
        {"alpha", "1 (quantile / CAViaR) or 2 (expectile / CARE)"},
        {"tau", "VaR level"},
        {"threshold", "threshold value r"},
        {"iters", "MCMC iterations"},
        {"burnin", "burn-in iterations"},
        {"thin", "thinning interval"},
        {"seed", "random seed"},
        {"knots", "spline segments k (basis size k + degree)"},
        {"degree", "spline degree"},
        {"dq-lags", "lagged hits in the DQ regression"},
        {"bootstrap", "ES bootstrap replications"},
        {"refit-every", "re-estimate every n forecast days (0 = fixed parameters)"},
        {"calibration-iters", "chain length per expectile calibration candidate"},
        {"nic-grid", "points on the exported news impact curve"},
        {"out", "output directory"},
    };
    for (const auto& [key, help] : keyed) {
        app.add_option_function<std::string>(
            "--" + key, [&flags, key = key](const std::string& v) { flags[key] = v; }, help);
    }

    CLI11_PARSE(app, argc, argv);

    try {
        std::map<std::string, std::string> settings;
        if (!config_path.empty()) {
            settings = bcarm::parse_config_text(read_file(config_path));
        }
        for (const auto& [k, v] : flags) settings[k] = v;
        if (inputs.empty()) {
            if (auto it = settings.find("input"); it != settings.end()) inputs.push_back(it->second);
        }
        settings.erase("input");
        if (inputs.empty()) {
            std::cerr << "error: no --input given\n";
            return 2;
        }

        bcarm::RunConfig base;
        bcarm::apply_settings(base, settings);

        if (summary_only) {
            for (const auto& path : inputs) {
                const auto series = bcarm::load_returns(path, base.load);
                std::cout << bcarm::summary_to_json(bcarm::summary_stats(series.values)).dump(2)
                          << '\n';
            }
            return 0;
        }

        if (inputs.size() == 1) {
            base.input = inputs.front();
            const auto result = bcarm::run_pipeline(base);
            print_summary(result, std::cout);
            return 0;
        }

        // Batch: one pipeline per series, seeds split from the master seed.
        std::vector<std::future<bcarm::PipelineResult>> jobs;
        for (std::size_t i = 0; i < inputs.size(); ++i) {
            bcarm::RunConfig cfg = base;
            cfg.input = inputs[i];
            cfg.seed = bcarm::derive_seed(base.seed, i);
            cfg.out_dir = base.out_dir / std::filesystem::path(inputs[i]).stem();
            jobs.push_back(std::async(std::launch::async, [cfg] { return bcarm::run_pipeline(cfg); }));
        }
        int status = 0;
        for (std::size_t i = 0; i < jobs.size(); ++i) {
            try {
                const auto result = jobs[i].get();
                std::cout << "[" << inputs[i] << "] ";
                print_summary(result, std::cout);
            } catch (const std::exception& e) {
                std::cerr << "[" << inputs[i] << "] error: " << e.what() << '\n';
                status = 1;
            }
        }
        return status;
    } catch (const bcarm::StageError& e) {
        std::cerr << "error in stage '" << e.stage() << "': " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
