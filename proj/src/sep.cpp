#include "bcarm/sep.hpp"

#include "bcarm/error.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <limits>
#include <string>

namespace bcarm {

void validate(const SepParams& p) {
    if (!std::isfinite(p.location)) {
        throw InvalidParameter("SEP location must be finite");
    }
    if (!(p.scale > 0.0) || !std::isfinite(p.scale)) {
        throw InvalidParameter("SEP scale must be positive, got " + std::to_string(p.scale));
    }
    if (!(p.tau > 0.0 && p.tau < 1.0)) {
        throw InvalidParameter("SEP skewness must lie in (0, 1), got " + std::to_string(p.tau));
    }
    if (!(p.alpha > 0.0) || !std::isfinite(p.alpha)) {
        throw InvalidParameter("SEP shape must be positive, got " + std::to_string(p.alpha));
    }
}

double sep_log_normalizer(double scale, double tau, double alpha) {
    const double inv = 1.0 / alpha;
    // tau^{-1/a} + (1-tau)^{-1/a} in log space.
    const double a = -inv * std::log(tau);
    const double b = -inv * std::log1p(-tau);
    const double hi = std::max(a, b);
    const double lse = hi + std::log(std::exp(a - hi) + std::exp(b - hi));
    return std::log(scale) + boost::math::lgamma(1.0 + inv) + lse;
}

double sep_log_pdf(double y, const SepParams& p) {
    validate(p);
    const double log_c = sep_log_normalizer(p.scale, p.tau, p.alpha);
    if (y < p.location) {
        const double u = (p.location - y) / p.scale;
        const double ua = p.alpha == 1.0 ? u : (p.alpha == 2.0 ? u * u : std::pow(u, p.alpha));
        return -log_c - (1.0 - p.tau) * ua;
    }
    const double u = (y - p.location) / p.scale;
    const double ua = p.alpha == 1.0 ? u : (p.alpha == 2.0 ? u * u : std::pow(u, p.alpha));
    return -log_c - p.tau * ua;
}

double sep_left_mass(double tau, double alpha) {
    const double left = std::pow(1.0 - tau, -1.0 / alpha);
    const double right = std::pow(tau, -1.0 / alpha);
    return left / (left + right);
}

double sep_cdf(double y, const SepParams& p) {
    validate(p);
    if (std::isinf(y)) {
        return y > 0 ? 1.0 : 0.0;
    }
    if (p.alpha == 1.0) {
        // Asymmetric Laplace: left mass is exactly tau.
        if (y < p.location) {
            return p.tau * std::exp(-(1.0 - p.tau) * (p.location - y) / p.scale);
        }
        return 1.0 - (1.0 - p.tau) * std::exp(-p.tau * (y - p.location) / p.scale);
    }
    // Substituting v = w u^alpha turns each tail integral into Gamma(1/alpha, v).
    const double shape = 1.0 / p.alpha;
    const double left = sep_left_mass(p.tau, p.alpha);
    if (y < p.location) {
        const double v = (1.0 - p.tau) * std::pow((p.location - y) / p.scale, p.alpha);
        return left * boost::math::gamma_q(shape, v);
    }
    const double v = p.tau * std::pow((y - p.location) / p.scale, p.alpha);
    return left + (1.0 - left) * boost::math::gamma_p(shape, v);
}

double check_loss(double u, double tau, int alpha) {
    if (!(tau > 0.0 && tau < 1.0)) {
        throw InvalidParameter("check loss level must lie in (0, 1)");
    }
    const double weight = u < 0.0 ? tau - 1.0 : tau;
    switch (alpha) {
        case 1:
            return u * weight;
        case 2:
            return u * u * std::abs(weight);
        default:
            throw InvalidParameter("check loss shape must be 1 or 2");
    }
}

}  // namespace bcarm
