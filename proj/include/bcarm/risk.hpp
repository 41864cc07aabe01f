#pragma once

#include "bcarm/model.hpp"
#include "bcarm/sampler.hpp"

#include <optional>
#include <span>
#include <vector>

namespace bcarm {

/// Risk measures in loss convention: VaR_t = -g_t is positive for lower-tail levels.
struct RiskSeries {
    std::vector<double> var;
    std::vector<double> es;
    double tau = 0.05;
    std::optional<double> nu;
};

/// Proportion of y_t strictly below g_t.
[[nodiscard]] double proportion_below(std::span<const double> y, std::span<const double> g);

struct CalibrationStep {
    double nu = 0.0;
    double proportion = 0.0;
};

struct CalibrationOptions {
    double step = 0.001;
    /// Chain settings for each candidate fit; short chains, warm-started.
    SamplerConfig chain{};
    /// Refit each candidate from the default start instead of the previous candidate.
    bool cold_start = false;
};

struct CalibrationResult {
    double nu = 0.0;
    double proportion = 0.0;
    ModelSpec spec;
    PosteriorDraws draws;
    ParamVector params;
    std::vector<double> path;
    /// Evaluated grid points, sorted by nu.
    std::vector<CalibrationStep> trace;
};

/**
 * Searches nu on the grid {step, 2 step, .., 0.5} for the CARE fit whose
 * posterior-mean expectile path has in-sample proportion below closest to
 * tau (ties resolve to the smaller nu). Bisection over the grid assumes the
 * proportion is non-decreasing in nu. Throws CalibrationFailure if the best
 * proportion is outside [tau/2, 2 tau].
 */
[[nodiscard]] CalibrationResult calibrate_nu(const ModelSpec& spec, const PriorSpec& prior,
                                             const CalibrationOptions& options,
                                             std::span<const double> y_in, double tau,
                                             std::span<const double> z_in = {});

/// ES_t = (1 + k) mu_t - k mean_y with k = nu / ((1 - 2 nu) tau).
[[nodiscard]] double expectile_to_es(double mu, double nu, double tau, double mean_y);

/// VaR_t = -g_t (alpha = 1 quantile path, or alpha = 2 calibrated expectile path).
[[nodiscard]] RiskSeries extract_var(const ModelSpec& spec, std::span<const double> g, double tau,
                                     std::optional<double> nu = std::nullopt);

/// Adds ES_t from the expectile path (requires series.nu).
void attach_es(RiskSeries& series, std::span<const double> g, double mean_y);

}  // namespace bcarm
