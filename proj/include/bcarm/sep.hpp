#pragma once

namespace bcarm {

/**
 * Parameters of the Skew Exponential Power density
 *
 *   f(y) = c^{-1} exp{-(1-tau) ((g-y)/sigma)^alpha}   for y < g
 *   f(y) = c^{-1} exp{-tau     ((y-g)/sigma)^alpha}   for y >= g
 *
 * with c = sigma * Gamma(1 + 1/alpha) * (tau^{-1/alpha} + (1-tau)^{-1/alpha}).
 *
 * At alpha = 1 the location g is the tau-quantile and the density is the
 * Asymmetric Laplace with left rate (1-tau)/sigma and right rate tau/sigma,
 * i.e. tau(1-tau)/sigma * exp(-rho_tau((y-g)/sigma)). At alpha = 2 the
 * location is the tau-expectile (Asymmetric Gaussian).
 */
struct SepParams {
    double location = 0.0;
    double scale = 1.0;
    double tau = 0.5;
    double alpha = 1.0;
};

/// Throws InvalidParameter unless scale > 0, 0 < tau < 1 and alpha > 0 (all finite).
void validate(const SepParams& p);

/// log c for the given scale, skewness and shape.
[[nodiscard]] double sep_log_normalizer(double scale, double tau, double alpha);

/// Log-density. Never exponentiates the unnormalized kernel.
[[nodiscard]] double sep_log_pdf(double y, const SepParams& p);

/// P(Y <= y). Closed form for alpha = 1, regularized incomplete gamma otherwise.
[[nodiscard]] double sep_cdf(double y, const SepParams& p);

/// Probability mass to the left of the location, (1-tau)^{-1/a} / (tau^{-1/a} + (1-tau)^{-1/a}).
[[nodiscard]] double sep_left_mass(double tau, double alpha);

/**
 * Asymmetric loss: alpha = 1 gives the quantile check function
 * u (tau - 1{u<0}); alpha = 2 the expectile loss u^2 |tau - 1{u<0}|.
 */
[[nodiscard]] double check_loss(double u, double tau, int alpha);

}  // namespace bcarm
