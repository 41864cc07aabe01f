#include "bcarm/nic.hpp"

#include "bcarm/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bcarm {

std::size_t NicSpec::num_coefficients() const {
    switch (variant) {
        case NicVariant::SymmetricAbsoluteValue:
        case NicVariant::IndirectGarch:
            return 1;
        case NicVariant::AsymmetricSlope:
        case NicVariant::Threshold:
            return 2;
        case NicVariant::Spline:
            return spline.dimension();
    }
    return 0;
}

std::string to_string(NicVariant v) {
    switch (v) {
        case NicVariant::SymmetricAbsoluteValue:
            return "sav";
        case NicVariant::AsymmetricSlope:
            return "as";
        case NicVariant::Threshold:
            return "threshold";
        case NicVariant::IndirectGarch:
            return "ig";
        case NicVariant::Spline:
            return "spline";
    }
    return "unknown";
}

NicVariant nic_variant_from_string(const std::string& name) {
    if (name == "sav") return NicVariant::SymmetricAbsoluteValue;
    if (name == "as") return NicVariant::AsymmetricSlope;
    if (name == "threshold") return NicVariant::Threshold;
    if (name == "ig") return NicVariant::IndirectGarch;
    if (name == "spline") return NicVariant::Spline;
    throw std::invalid_argument("unknown news impact curve '" + name +
                                "' (expected sav, as, threshold, ig or spline)");
}

SplineConfig default_spline_config(std::span<const double> y, int segments, int degree) {
    if (y.empty()) {
        throw std::invalid_argument("spline range needs at least one observation");
    }
    const auto [lo_it, hi_it] = std::minmax_element(y.begin(), y.end());
    double range = *hi_it - *lo_it;
    if (range <= 0.0) {
        range = 1.0;
    }
    SplineConfig cfg;
    cfg.segments = segments;
    cfg.degree = degree;
    cfg.lo = *lo_it - 0.05 * range;
    cfg.hi = *hi_it + 0.05 * range;
    return cfg;
}

namespace {

void check_spline(const SplineConfig& cfg) {
    if (cfg.degree < 1) {
        throw InvalidParameter("spline degree must be at least 1");
    }
    if (cfg.segments < 2) {
        throw InvalidParameter("spline needs at least 2 segments");
    }
    if (!(cfg.lo < cfg.hi)) {
        throw InvalidParameter("spline range must satisfy lo < hi");
    }
}

}  // namespace

BasisRow bspline_row(const SplineConfig& cfg, double y) {
    check_spline(cfg);
    const int d = cfg.degree;
    const double h = (cfg.hi - cfg.lo) / cfg.segments;
    const double x = std::clamp(y, cfg.lo, cfg.hi);
    // Extended equidistant knots t_j = lo + (j - d) h.
    auto knot = [&](int j) { return cfg.lo + (j - d) * h; };
    int span = d + static_cast<int>(std::floor((x - cfg.lo) / h));
    span = std::clamp(span, d, d + cfg.segments - 1);

    std::vector<double> n(d + 1, 0.0);
    std::vector<double> left(d + 1, 0.0);
    std::vector<double> right(d + 1, 0.0);
    n[0] = 1.0;
    for (int j = 1; j <= d; ++j) {
        left[j] = x - knot(span + 1 - j);
        right[j] = knot(span + j) - x;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            const double temp = n[r] / (right[r + 1] + left[j - r]);
            n[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        n[j] = saved;
    }
    return BasisRow{static_cast<std::size_t>(span - d), std::move(n)};
}

std::vector<double> bspline_basis(const NicSpec& spec, double y) {
    if (spec.variant != NicVariant::Spline) {
        throw std::invalid_argument("bspline_basis requires a spline news impact curve");
    }
    const BasisRow row = bspline_row(spec.spline, y);
    std::vector<double> out(spec.spline.dimension(), 0.0);
    for (std::size_t j = 0; j < row.values.size(); ++j) {
        out[row.first + j] = row.values[j];
    }
    return out;
}

double nic_eval(const NicSpec& spec, std::span<const double> beta, double y_prev, double z_prev) {
    if (beta.size() != spec.num_coefficients()) {
        throw DimensionMismatch("news impact curve '" + to_string(spec.variant) + "' expects " +
                                std::to_string(spec.num_coefficients()) + " coefficients, got " +
                                std::to_string(beta.size()));
    }
    switch (spec.variant) {
        case NicVariant::SymmetricAbsoluteValue:
            return beta[0] * std::abs(y_prev);
        case NicVariant::AsymmetricSlope:
            return beta[0] * std::max(y_prev, 0.0) + beta[1] * std::max(-y_prev, 0.0);
        case NicVariant::Threshold:
            return (z_prev <= spec.threshold ? beta[0] : beta[1]) * std::abs(y_prev);
        case NicVariant::IndirectGarch:
            return beta[0] * y_prev * y_prev;
        case NicVariant::Spline: {
            const BasisRow row = bspline_row(spec.spline, y_prev);
            double s = 0.0;
            for (std::size_t j = 0; j < row.values.size(); ++j) {
                s += beta[row.first + j] * row.values[j];
            }
            return s;
        }
    }
    return 0.0;
}

PenaltyMatrix make_penalty(std::size_t n) {
    if (n < 3) {
        throw InvalidParameter("second-difference penalty needs at least 3 coefficients");
    }
    PenaltyMatrix p;
    p.d2 = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n - 2), static_cast<Eigen::Index>(n));
    for (Eigen::Index r = 0; r < p.d2.rows(); ++r) {
        p.d2(r, r) = 1.0;
        p.d2(r, r + 1) = -2.0;
        p.d2(r, r + 2) = 1.0;
    }
    p.k = p.d2.transpose() * p.d2;
    return p;
}

double penalty_quadform(std::span<const double> beta, const PenaltyMatrix& k) {
    if (beta.size() != k.dimension()) {
        throw DimensionMismatch("penalty expects " + std::to_string(k.dimension()) +
                                " coefficients, got " + std::to_string(beta.size()));
    }
    double s = 0.0;
    for (std::size_t v = 2; v < beta.size(); ++v) {
        const double diff = beta[v] - 2.0 * beta[v - 1] + beta[v - 2];
        s += diff * diff;
    }
    return s;
}

std::pair<double, double> hpd_interval(std::vector<double> sample, double mass) {
    if (sample.empty()) {
        throw std::invalid_argument("HPD interval of an empty sample");
    }
    if (!(mass > 0.0 && mass <= 1.0)) {
        throw std::invalid_argument("HPD mass must lie in (0, 1]");
    }
    std::sort(sample.begin(), sample.end());
    const std::size_t n = sample.size();
    const auto window = std::max<std::size_t>(
        1, std::min(n, static_cast<std::size_t>(std::ceil(mass * static_cast<double>(n)))));
    std::size_t best = 0;
    double width = sample[window - 1] - sample[0];
    for (std::size_t i = 1; i + window <= n; ++i) {
        const double w = sample[i + window - 1] - sample[i];
        if (w < width) {
            width = w;
            best = i;
        }
    }
    return {sample[best], sample[best + window - 1]};
}

std::vector<NicCurvePoint> nic_curve(const NicSpec& spec, const Eigen::MatrixXd& beta_draws,
                                     std::span<const double> grid, double mass) {
    if (static_cast<std::size_t>(beta_draws.cols()) != spec.num_coefficients()) {
        throw DimensionMismatch("coefficient draws do not match the news impact curve");
    }
    if (beta_draws.rows() == 0) {
        throw std::invalid_argument("news impact curve needs at least one draw");
    }
    std::vector<NicCurvePoint> out;
    out.reserve(grid.size());
    std::vector<double> values(static_cast<std::size_t>(beta_draws.rows()));
    std::vector<double> beta(spec.num_coefficients());
    for (double y : grid) {
        for (Eigen::Index r = 0; r < beta_draws.rows(); ++r) {
            for (Eigen::Index c = 0; c < beta_draws.cols(); ++c) {
                beta[static_cast<std::size_t>(c)] = beta_draws(r, c);
            }
            values[static_cast<std::size_t>(r)] = nic_eval(spec, beta, y, y);
        }
        const double mean =
            std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
        const auto [lo, hi] = hpd_interval(values, mass);
        out.push_back({y, mean, lo, hi});
    }
    return out;
}

}  // namespace bcarm
