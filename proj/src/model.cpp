#include "bcarm/model.hpp"

#include "bcarm/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bcarm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// Levels beyond this are treated as an exploded recursion.
constexpr double kLevelLimit = 1e150;

double pow_alpha(double u, int alpha) {
    switch (alpha) {
        case 1:
            return u;
        case 2:
            return u * u;
        default:
            return std::pow(u, alpha);
    }
}

}  // namespace

ModelSpec make_model_spec(NicVariant variant, int alpha, double tau) {
    ModelSpec spec;
    spec.nic.variant = variant;
    spec.alpha = alpha;
    spec.tau = tau;
    spec.recursion =
        variant == NicVariant::IndirectGarch ? Recursion::IndirectGarch : Recursion::Linear;
    return spec;
}

void validate(const ModelSpec& spec) {
    if (spec.alpha != 1 && spec.alpha != 2) {
        throw InvalidParameter("model shape alpha must be 1 or 2");
    }
    if (!(spec.tau > 0.0 && spec.tau < 1.0)) {
        throw InvalidParameter("model level tau must lie in (0, 1)");
    }
    const bool ig = spec.nic.variant == NicVariant::IndirectGarch;
    if (ig != (spec.recursion == Recursion::IndirectGarch)) {
        throw InvalidParameter(
            "the indirect-GARCH recursion and news impact curve must be used together");
    }
    if (spec.nic.variant == NicVariant::Spline) {
        (void)bspline_row(spec.nic.spline, spec.nic.spline.lo);
    }
}

double empirical_quantile(std::span<const double> y, double tau) {
    if (y.empty()) {
        throw std::invalid_argument("quantile of an empty sample");
    }
    std::vector<double> s(y.begin(), y.end());
    std::sort(s.begin(), s.end());
    const double h = (static_cast<double>(s.size()) - 1.0) * tau;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, s.size() - 1);
    return s[lo] + (h - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

double empirical_expectile(std::span<const double> y, double tau) {
    if (y.empty()) {
        throw std::invalid_argument("expectile of an empty sample");
    }
    const auto [lo_it, hi_it] = std::minmax_element(y.begin(), y.end());
    double lo = *lo_it;
    double hi = *hi_it;
    auto score = [&](double e) {
        double s = 0.0;
        for (double v : y) {
            s += (v < e ? 1.0 - tau : tau) * (v - e);
        }
        return s;
    };
    // score is continuous and strictly decreasing in e.
    for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + std::abs(lo)); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (score(mid) > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

double initial_level(const ModelSpec& spec, std::span<const double> y) {
    if (spec.initial_level == InitialLevel::Fixed) {
        return spec.initial_level_value;
    }
    if (y.empty()) {
        throw std::invalid_argument("initial level needs at least one observation");
    }
    const auto window = y.first(std::min(std::max<std::size_t>(spec.initial_window, 1), y.size()));
    const double level = spec.alpha == 2 ? empirical_expectile(window, spec.tau)
                                         : empirical_quantile(window, spec.tau);
    return level;
}

CarmModel::CarmModel(ModelSpec spec, std::span<const double> y, std::span<const double> z)
    : spec_(std::move(spec)), y_(y.begin(), y.end()), z_(z.begin(), z.end()) {
    validate(spec_);
    if (y_.empty()) {
        throw std::invalid_argument("model needs at least one observation");
    }
    if (!z_.empty() && z_.size() != y_.size()) {
        throw DimensionMismatch("threshold variable length differs from the return series");
    }
    if (spec_.nic.variant == NicVariant::Threshold &&
        spec_.nic.threshold_variable == ThresholdVariable::Exogenous && z_.empty()) {
        throw std::invalid_argument("exogenous threshold variable requested but not supplied");
    }
    if (spec_.nic.variant == NicVariant::Spline) {
        basis_.reserve(y_.size());
        for (double v : y_) {
            basis_.push_back(bspline_row(spec_.nic.spline, v));
        }
    }
    g1_ = initial_level(spec_, y_);
}

double CarmModel::news(const ParamVector& params, std::size_t t) const {
    // Impact of y_{t-1} on g_t.
    const double y_prev = y_[t - 1];
    const auto& beta = params.beta;
    switch (spec_.nic.variant) {
        case NicVariant::SymmetricAbsoluteValue:
            return beta[0] * std::abs(y_prev);
        case NicVariant::AsymmetricSlope:
            return y_prev > 0.0 ? beta[0] * y_prev : -beta[1] * y_prev;
        case NicVariant::Threshold: {
            const bool self = spec_.nic.threshold_variable == ThresholdVariable::Self || z_.empty();
            const double z_prev = self ? y_prev : z_[t - 1];
            return (z_prev <= spec_.nic.threshold ? beta[0] : beta[1]) * std::abs(y_prev);
        }
        case NicVariant::IndirectGarch:
            return beta[0] * y_prev * y_prev;
        case NicVariant::Spline: {
            const BasisRow& row = basis_[t - 1];
            double s = 0.0;
            for (std::size_t j = 0; j < row.values.size(); ++j) {
                s += beta[row.first + j] * row.values[j];
            }
            return s;
        }
    }
    return 0.0;
}

bool CarmModel::try_recurse(const ParamVector& params, std::vector<double>& g) const {
    if (params.beta.size() != spec_.nic.num_coefficients()) {
        throw DimensionMismatch("coefficient vector has " + std::to_string(params.beta.size()) +
                                " entries, news impact curve expects " +
                                std::to_string(spec_.nic.num_coefficients()));
    }
    const std::size_t n = y_.size();
    g.resize(n);
    g[0] = g1_;
    if (spec_.recursion == Recursion::IndirectGarch) {
        // Lower-tail levels are negative; the recursion delivers the magnitude.
        const double sign = spec_.tau < 0.5 ? -1.0 : 1.0;
        for (std::size_t t = 1; t < n; ++t) {
            const double radicand = params.omega + params.gamma * g[t - 1] * g[t - 1] + news(params, t);
            g[t] = sign * std::sqrt(std::max(radicand, 0.0));
            if (!(std::abs(g[t]) < kLevelLimit)) {
                return false;
            }
        }
        return true;
    }
    for (std::size_t t = 1; t < n; ++t) {
        g[t] = params.omega + params.gamma * g[t - 1] + news(params, t);
        if (!(std::abs(g[t]) < kLevelLimit)) {
            return false;
        }
    }
    return true;
}

std::vector<double> CarmModel::recurse(const ParamVector& params) const {
    std::vector<double> g;
    if (!try_recurse(params, g)) {
        throw NonFiniteRecursion("level recursion overflowed (explosive parameters)");
    }
    return g;
}

double CarmModel::log_likelihood(const ParamVector& params) const {
    if (!(params.sigma > 0.0) || !std::isfinite(params.sigma)) {
        return kNegInf;
    }
    if (!try_recurse(params, scratch_)) {
        return kNegInf;
    }
    const double tau = spec_.tau;
    const double inv_sigma = 1.0 / params.sigma;
    const int alpha = spec_.alpha;
    double below = 0.0;
    double above = 0.0;
    for (std::size_t t = 0; t < y_.size(); ++t) {
        const double u = (y_[t] - scratch_[t]) * inv_sigma;
        if (u < 0.0) {
            below += pow_alpha(-u, alpha);
        } else {
            above += pow_alpha(u, alpha);
        }
    }
    const double log_c = sep_log_normalizer(params.sigma, tau, static_cast<double>(alpha));
    const double ll = -static_cast<double>(y_.size()) * log_c - (1.0 - tau) * below - tau * above;
    return std::isfinite(ll) ? ll : kNegInf;
}

std::vector<double> recurse_g(const ModelSpec& spec, const ParamVector& params,
                              std::span<const double> y, std::span<const double> z) {
    return CarmModel(spec, y, z).recurse(params);
}

double log_likelihood(const ModelSpec& spec, const ParamVector& params, std::span<const double> y,
                      std::span<const double> z) {
    return CarmModel(spec, y, z).log_likelihood(params);
}

std::vector<double> forecast_path(const ModelSpec& spec, const ParamVector& params,
                                  std::span<const double> y_in, std::span<const double> y_out,
                                  std::span<const double> z_in, std::span<const double> z_out) {
    if (y_in.empty() || y_out.empty()) {
        throw std::invalid_argument("forecasting needs in-sample and out-of-sample observations");
    }
    if (z_in.empty() != z_out.empty()) {
        throw DimensionMismatch("threshold variable must cover both samples");
    }
    ModelSpec fixed = spec;
    fixed.initial_level = InitialLevel::Fixed;
    fixed.initial_level_value = initial_level(spec, y_in);

    std::vector<double> all(y_in.begin(), y_in.end());
    all.insert(all.end(), y_out.begin(), y_out.end());
    std::vector<double> z_all;
    if (!z_in.empty() && !z_out.empty()) {
        z_all.assign(z_in.begin(), z_in.end());
        z_all.insert(z_all.end(), z_out.begin(), z_out.end());
    }
    // The level for period T+j uses returns through T+j-1, so the final
    // realized return is not needed; it is kept to reuse the full path code.
    const std::vector<double> g = recurse_g(fixed, params, all, z_all);
    return {g.end() - static_cast<std::ptrdiff_t>(y_out.size()), g.end()};
}

}  // namespace bcarm
