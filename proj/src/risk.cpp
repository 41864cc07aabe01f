#include "bcarm/risk.hpp"

#include "bcarm/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace bcarm {

double proportion_below(std::span<const double> y, std::span<const double> g) {
    if (y.size() != g.size()) {
        throw DimensionMismatch("return and level series differ in length");
    }
    if (y.empty()) {
        return 0.0;
    }
    std::size_t below = 0;
    for (std::size_t t = 0; t < y.size(); ++t) {
        below += y[t] < g[t] ? 1 : 0;
    }
    return static_cast<double>(below) / static_cast<double>(y.size());
}

double expectile_to_es(double mu, double nu, double tau, double mean_y) {
    if (!(nu >= 0.0 && nu < 0.5)) {
        throw InvalidParameter("expectile level must lie in [0, 0.5) for the ES mapping");
    }
    if (!(tau > 0.0 && tau < 1.0)) {
        throw InvalidParameter("ES level must lie in (0, 1)");
    }
    const double k = nu / ((1.0 - 2.0 * nu) * tau);
    // (1 + k) mu - k mean_y, arranged so nu = 0 and mu = mean_y return mu exactly.
    return mu + k * (mu - mean_y);
}

RiskSeries extract_var(const ModelSpec& spec, std::span<const double> g, double tau,
                       std::optional<double> nu) {
    RiskSeries out;
    out.tau = tau;
    if (spec.alpha == 2) {
        out.nu = nu ? nu : std::optional<double>(spec.tau);
    }
    out.var.resize(g.size());
    std::transform(g.begin(), g.end(), out.var.begin(), [](double v) { return -v; });
    return out;
}

void attach_es(RiskSeries& series, std::span<const double> g, double mean_y) {
    if (!series.nu) {
        throw std::invalid_argument("ES mapping needs a calibrated expectile level");
    }
    series.es.resize(g.size());
    for (std::size_t t = 0; t < g.size(); ++t) {
        series.es[t] = expectile_to_es(g[t], *series.nu, series.tau, mean_y);
    }
}

CalibrationResult calibrate_nu(const ModelSpec& spec, const PriorSpec& prior,
                               const CalibrationOptions& options, std::span<const double> y_in,
                               double tau, std::span<const double> z_in) {
    if (spec.alpha != 2) {
        throw std::invalid_argument("expectile calibration applies to alpha = 2 models");
    }
    if (!(tau > 0.0 && tau < 1.0)) {
        throw InvalidParameter("target level must lie in (0, 1)");
    }
    if (!(options.step > 0.0 && options.step < 0.5)) {
        throw InvalidParameter("calibration grid step must lie in (0, 0.5)");
    }
    const auto grid_size = static_cast<std::size_t>(std::llround(0.5 / options.step));

    struct Fit {
        double proportion = 0.0;
        ModelSpec spec;
        PosteriorDraws draws;
        ParamVector params;
        std::vector<double> path;
    };
    std::map<std::size_t, Fit> fits;
    std::optional<ParamVector> warm_params;
    std::optional<ProposalState> warm_proposal;

    auto fit_at = [&](std::size_t j) -> const Fit& {
        if (auto it = fits.find(j); it != fits.end()) {
            return it->second;
        }
        Fit fit;
        fit.spec = spec;
        fit.spec.tau = static_cast<double>(j) * options.step;
        SamplerConfig chain = options.chain;
        if (!options.cold_start && warm_params) {
            chain.initial = warm_params;
            chain.initial_proposal = warm_proposal;
        }
        fit.draws = run_chain(fit.spec, prior, chain, y_in, z_in);
        fit.params = fit.draws.posterior_mean();
        const CarmModel model(fit.spec, y_in, z_in);
        if (!model.try_recurse(fit.params, fit.path)) {
            throw CalibrationFailure("posterior-mean expectile path exploded at nu = " +
                                     std::to_string(fit.spec.tau));
        }
        fit.proportion = proportion_below(y_in, fit.path);
        warm_params = fit.params;
        warm_proposal = fit.draws.final_proposal;
        return fits.emplace(j, std::move(fit)).first->second;
    };

    // Smallest grid index whose proportion reaches tau.
    std::size_t lo = 1;
    std::size_t hi = grid_size;
    while (lo < hi) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (fit_at(mid).proportion >= tau) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    std::size_t best = lo;
    if (lo > 1) {
        const double above = std::abs(fit_at(lo).proportion - tau);
        const double below = std::abs(fit_at(lo - 1).proportion - tau);
        if (below <= above) {
            best = lo - 1;
        }
    }
    const Fit& chosen = fit_at(best);
    if (chosen.proportion < 0.5 * tau || chosen.proportion > 2.0 * tau) {
        throw CalibrationFailure("no expectile level reproduces the target violation rate (best "
                                 "proportion " + std::to_string(chosen.proportion) + ")");
    }

    CalibrationResult out;
    out.nu = chosen.spec.tau;
    out.proportion = chosen.proportion;
    out.spec = chosen.spec;
    out.draws = chosen.draws;
    out.params = chosen.params;
    out.path = chosen.path;
    for (const auto& [j, fit] : fits) {
        out.trace.push_back({fit.spec.tau, fit.proportion});
    }
    return out;
}

}  // namespace bcarm
