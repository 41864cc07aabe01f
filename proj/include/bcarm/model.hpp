#pragma once

#include "bcarm/nic.hpp"
#include "bcarm/sep.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bcarm {

enum class Recursion { Linear, IndirectGarch };

/// How the first level g_1 is chosen.
enum class InitialLevel {
    /// Empirical tau-quantile (alpha = 1) or tau-expectile (alpha = 2) of the first observations.
    Empirical,
    /// Caller-supplied value in ModelSpec::initial_level_value.
    Fixed,
};

struct ModelSpec {
    NicSpec nic{};
    int alpha = 1;
    double tau = 0.05;
    Recursion recursion = Recursion::Linear;
    InitialLevel initial_level = InitialLevel::Empirical;
    double initial_level_value = 0.0;
    std::size_t initial_window = 100;
};

/// Returns a ModelSpec for `variant` with the matching recursion.
[[nodiscard]] ModelSpec make_model_spec(NicVariant variant, int alpha, double tau);

/// Throws InvalidParameter on inconsistent recursion / NIC pairing or bad alpha / tau.
void validate(const ModelSpec& spec);

/// Full parameter state Xi = (omega, gamma, beta, sigma, phi^2).
struct ParamVector {
    double omega = 0.0;
    double gamma = 0.0;
    std::vector<double> beta;
    double sigma = 1.0;
    std::optional<double> phi2;
};

/// Ordered observations with optional labels and an optional exogenous threshold variable.
struct ReturnSeries {
    std::vector<double> values;
    std::vector<std::string> dates;
    std::vector<double> exogenous;

    [[nodiscard]] std::size_t size() const { return values.size(); }
};

/// Empirical tau-quantile with linear interpolation between order statistics.
[[nodiscard]] double empirical_quantile(std::span<const double> y, double tau);

/// Sample tau-expectile: the root of sum |tau - 1{y<e}| (y - e) = 0.
[[nodiscard]] double empirical_expectile(std::span<const double> y, double tau);

/// g_1 under the spec's initial-level policy.
[[nodiscard]] double initial_level(const ModelSpec& spec, std::span<const double> y);

/**
 * Pre-processed model over a fixed data set. Caches |y|, y^2, the spline
 * basis rows and g_1 so that repeated likelihood evaluations (MCMC) cost
 * O(T) without allocation.
 */
class CarmModel {
public:
    CarmModel(ModelSpec spec, std::span<const double> y, std::span<const double> z = {});

    [[nodiscard]] const ModelSpec& spec() const { return spec_; }
    [[nodiscard]] std::size_t size() const { return y_.size(); }
    [[nodiscard]] std::span<const double> data() const { return y_; }
    [[nodiscard]] double first_level() const { return g1_; }

    /// Fills `g` (resized to T). Returns false if a level became non-finite.
    bool try_recurse(const ParamVector& params, std::vector<double>& g) const;

    /// Level path; throws NonFiniteRecursion on overflow.
    [[nodiscard]] std::vector<double> recurse(const ParamVector& params) const;

    /// SEP log-likelihood; -infinity for invalid sigma or explosive parameters.
    [[nodiscard]] double log_likelihood(const ParamVector& params) const;

private:
    [[nodiscard]] double news(const ParamVector& params, std::size_t t) const;

    ModelSpec spec_;
    std::vector<double> y_;
    std::vector<double> z_;
    std::vector<BasisRow> basis_;
    double g1_ = 0.0;
    mutable std::vector<double> scratch_;
};

/// Level path g_1..g_T. Throws NonFiniteRecursion if the path overflows.
[[nodiscard]] std::vector<double> recurse_g(const ModelSpec& spec, const ParamVector& params,
                                            std::span<const double> y,
                                            std::span<const double> z = {});

/// Sum over t of sep_log_pdf(y_t; g_t, sigma, tau, alpha); -infinity for sigma <= 0.
[[nodiscard]] double log_likelihood(const ModelSpec& spec, const ParamVector& params,
                                    std::span<const double> y, std::span<const double> z = {});

/**
 * One-step-ahead levels for the out-of-sample period with parameters held
 * fixed: element j depends on realized returns up to y_out[j-1] only.
 */
[[nodiscard]] std::vector<double> forecast_path(const ModelSpec& spec, const ParamVector& params,
                                                std::span<const double> y_in,
                                                std::span<const double> y_out,
                                                std::span<const double> z_in = {},
                                                std::span<const double> z_out = {});

}  // namespace bcarm
