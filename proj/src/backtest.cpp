#include "bcarm/backtest.hpp"

#include "bcarm/error.hpp"
#include "bcarm/sep.hpp"

#include <Eigen/Dense>
#include <boost/math/distributions/binomial.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace bcarm {

namespace {

/// n log p with the 0 log 0 = 0 convention.
double xlogy(double n, double p) { return n == 0.0 ? 0.0 : n * std::log(p); }

}  // namespace

double HitSequence::actual_over_expected() const {
    if (hits.empty()) {
        return 0.0;
    }
    return static_cast<double>(violations) / (static_cast<double>(hits.size()) * tau);
}

std::string to_string(TrafficLight zone) {
    switch (zone) {
        case TrafficLight::Green:
            return "green";
        case TrafficLight::Yellow:
            return "yellow";
        case TrafficLight::Red:
            return "red";
    }
    return "unknown";
}

double chi2_sf(double x, double dof) {
    if (!(dof > 0.0)) {
        throw std::invalid_argument("chi-squared degrees of freedom must be positive");
    }
    if (!(x > 0.0)) {
        return 1.0;
    }
    if (std::isinf(x)) {
        return 0.0;
    }
    return boost::math::gamma_q(0.5 * dof, 0.5 * x);
}

HitSequence hits(std::span<const double> y, std::span<const double> var, double tau) {
    if (y.size() != var.size()) {
        throw DimensionMismatch("returns and VaR forecasts differ in length");
    }
    HitSequence out;
    out.tau = tau;
    out.hits.resize(y.size());
    for (std::size_t t = 0; t < y.size(); ++t) {
        const bool hit = y[t] < -var[t];
        out.hits[t] = hit ? 1 : 0;
        if (hit) {
            ++out.violations;
            out.deviations.push_back(std::abs(y[t] + var[t]));
        }
    }
    return out;
}

TestResult kupiec_lr_uc(std::size_t x, std::size_t m, double tau) {
    if (m == 0 || x > m) {
        throw std::invalid_argument("unconditional coverage test needs 0 <= x <= m and m > 0");
    }
    const double xd = static_cast<double>(x);
    const double md = static_cast<double>(m);
    const double rate = xd / md;
    const double null_ll = xlogy(md - xd, 1.0 - tau) + xlogy(xd, tau);
    const double alt_ll = xlogy(md - xd, 1.0 - rate) + xlogy(xd, rate);
    const double lr = std::max(0.0, -2.0 * (null_ll - alt_ll));
    return {lr, chi2_sf(lr, 1.0), 1.0};
}

double christoffersen_lr_ind(std::span<const int> hit) {
    if (hit.size() < 2) {
        throw std::invalid_argument("independence test needs at least two observations");
    }
    double n00 = 0, n01 = 0, n10 = 0, n11 = 0;
    for (std::size_t t = 1; t < hit.size(); ++t) {
        const int prev = hit[t - 1];
        const int cur = hit[t];
        if (prev == 0) {
            (cur == 0 ? n00 : n01) += 1.0;
        } else {
            (cur == 0 ? n10 : n11) += 1.0;
        }
    }
    const double pi = (n01 + n11) / (n00 + n01 + n10 + n11);
    const double pi0 = n00 + n01 > 0 ? n01 / (n00 + n01) : 0.0;
    const double pi1 = n10 + n11 > 0 ? n11 / (n10 + n11) : 0.0;
    const double null_ll = xlogy(n00 + n10, 1.0 - pi) + xlogy(n01 + n11, pi);
    const double alt_ll =
        xlogy(n00, 1.0 - pi0) + xlogy(n01, pi0) + xlogy(n10, 1.0 - pi1) + xlogy(n11, pi1);
    return std::max(0.0, -2.0 * (null_ll - alt_ll));
}

TestResult christoffersen_lr_cc(const HitSequence& hit) {
    const TestResult uc = kupiec_lr_uc(hit.violations, hit.size(), hit.tau);
    const double lr = uc.statistic + christoffersen_lr_ind(hit.hits);
    return {lr, chi2_sf(lr, 2.0), 2.0};
}

TestResult dq_test(const HitSequence& hit, std::span<const double> var, std::size_t lags) {
    const std::size_t m = hit.size();
    if (var.size() != m) {
        throw DimensionMismatch("hit sequence and VaR forecasts differ in length");
    }
    if (m <= lags + 2) {
        throw std::invalid_argument("dynamic quantile test needs more observations than lags + 2");
    }
    const auto n = static_cast<Eigen::Index>(m - lags);
    const auto k = static_cast<Eigen::Index>(lags + 2);
    Eigen::VectorXd h(n);
    Eigen::MatrixXd x(n, k);
    for (Eigen::Index r = 0; r < n; ++r) {
        const std::size_t t = static_cast<std::size_t>(r) + lags;
        h(r) = hit.hits[t] - hit.tau;
        x(r, 0) = 1.0;
        for (std::size_t l = 1; l <= lags; ++l) {
            x(r, static_cast<Eigen::Index>(l)) = hit.hits[t - l] - hit.tau;
        }
        x(r, k - 1) = var[t];
    }
    // Relative pivot threshold well above round-off so exactly collinear columns
    // (constant VaR, no hits) are treated as rank deficient.
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
    cod.setThreshold(1e-10);
    cod.compute(x);
    const Eigen::VectorXd fitted = x * cod.solve(h);
    const double stat = std::max(0.0, h.dot(fitted) / (hit.tau * (1.0 - hit.tau)));
    const auto dof = static_cast<double>(std::max<Eigen::Index>(cod.rank(), 1));
    return {stat, chi2_sf(stat, dof), dof};
}

std::vector<double> es_residuals(std::span<const double> y, std::span<const double> var,
                                 std::span<const double> es) {
    if (y.size() != var.size() || y.size() != es.size()) {
        throw DimensionMismatch("returns, VaR and ES series differ in length");
    }
    std::vector<double> r;
    for (std::size_t t = 0; t < y.size(); ++t) {
        if (y[t] < -var[t]) {
            const double q = -var[t];
            r.push_back((y[t] - es[t]) / q);
        }
    }
    return r;
}

double bootstrap_zero_mean_test(std::span<const double> residuals, std::size_t replications,
                                Rng& rng) {
    const std::size_t n = residuals.size();
    if (n < 2) {
        throw InsufficientData("bootstrap test needs at least two residuals");
    }
    if (replications == 0) {
        throw std::invalid_argument("bootstrap needs at least one replication");
    }
    auto moments = [n](auto&& at) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += at(i);
        mean /= static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) ss += (at(i) - mean) * (at(i) - mean);
        return std::pair{mean, std::sqrt(ss / static_cast<double>(n - 1))};
    };
    auto t_stat = [n](double mean, double sd) {
        if (sd == 0.0) {
            return mean == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), mean);
        }
        return mean / (sd / std::sqrt(static_cast<double>(n)));
    };
    const auto [mean, sd] = moments([&](std::size_t i) { return residuals[i]; });
    if (sd == 0.0) {
        return mean == 0.0 ? 1.0 : 0.0;
    }
    const double observed = std::abs(t_stat(mean, sd));

    // Resample from the residuals shifted to satisfy the null of zero mean.
    std::vector<double> centered(residuals.begin(), residuals.end());
    for (double& v : centered) v -= mean;
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<double> sample(n);
    std::size_t extreme = 0;
    for (std::size_t b = 0; b < replications; ++b) {
        for (double& v : sample) v = centered[pick(rng)];
        const auto [bm, bs] = moments([&](std::size_t i) { return sample[i]; });
        if (std::abs(t_stat(bm, bs)) >= observed) {
            ++extreme;
        }
    }
    return static_cast<double>(extreme) / static_cast<double>(replications);
}

double es_bootstrap_test(std::span<const double> y, std::span<const double> var,
                         std::span<const double> es, std::size_t replications, Rng& rng) {
    const std::vector<double> r = es_residuals(y, var, es);
    if (r.size() < 3) {
        throw InsufficientData("ES bootstrap test needs at least 3 violations, got " +
                               std::to_string(r.size()));
    }
    return bootstrap_zero_mean_test(r, replications, rng);
}

TrafficLight traffic_light(std::size_t x, std::size_t m, double tau) {
    if (m == 0 || x > m) {
        throw std::invalid_argument("traffic light needs 0 <= x <= m and m > 0");
    }
    const boost::math::binomial_distribution<double> dist(static_cast<double>(m), tau);
    const double cdf = boost::math::cdf(dist, static_cast<double>(x));
    if (cdf <= 0.95) {
        return TrafficLight::Green;
    }
    return cdf <= 0.9999 ? TrafficLight::Yellow : TrafficLight::Red;
}

BacktestReport backtest(std::span<const double> y, std::span<const double> var,
                        std::span<const double> es, double tau, const BacktestOptions& options) {
    const HitSequence hit = hits(y, var, tau);
    BacktestReport report;
    report.tau = tau;
    report.observations = hit.size();
    report.violations = hit.violations;
    report.actual_over_expected = hit.actual_over_expected();
    if (!hit.deviations.empty()) {
        report.ad_mean = std::accumulate(hit.deviations.begin(), hit.deviations.end(), 0.0) /
                         static_cast<double>(hit.deviations.size());
        report.ad_max = *std::max_element(hit.deviations.begin(), hit.deviations.end());
    }
    report.lr_uc = kupiec_lr_uc(hit.violations, hit.size(), tau);
    report.lr_cc = christoffersen_lr_cc(hit);
    report.dq = dq_test(hit, var, options.dq_lags);
    if (!es.empty() && hit.violations >= 3) {
        Rng rng(options.seed);
        report.es_bootstrap_p = es_bootstrap_test(y, var, es, options.bootstrap_replications, rng);
    }
    report.zone = traffic_light(hit.violations, hit.size(), tau);
    double loss = 0.0;
    for (std::size_t t = 0; t < y.size(); ++t) {
        loss += check_loss(y[t] + var[t], tau, 1);
    }
    report.average_check_loss = y.empty() ? 0.0 : loss / static_cast<double>(y.size());
    return report;
}

}  // namespace bcarm
