#pragma once

#include "bcarm/sampler.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bcarm {

struct HitSequence {
    std::vector<int> hits;
    double tau = 0.05;
    std::size_t violations = 0;
    /// |y_t + VaR_t| on violation days.
    std::vector<double> deviations;

    [[nodiscard]] std::size_t size() const { return hits.size(); }
    [[nodiscard]] double actual_over_expected() const;
};

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    double dof = 0.0;
};

enum class TrafficLight { Green, Yellow, Red };

[[nodiscard]] std::string to_string(TrafficLight zone);

/// Upper tail of the chi-squared distribution.
[[nodiscard]] double chi2_sf(double x, double dof);

/// I_t = 1{y_t < -VaR_t}.
[[nodiscard]] HitSequence hits(std::span<const double> y, std::span<const double> var, double tau);

/// Kupiec unconditional coverage LR with 0 log 0 = 0; chi2(1).
[[nodiscard]] TestResult kupiec_lr_uc(std::size_t x, std::size_t m, double tau);

/// Christoffersen independence statistic alone (first-order Markov alternative).
[[nodiscard]] double christoffersen_lr_ind(std::span<const int> hits);

/// LR_cc = LR_uc + LR_ind; chi2(2).
[[nodiscard]] TestResult christoffersen_lr_cc(const HitSequence& hit);

/**
 * Engle-Manganelli dynamic quantile test. Regressors: intercept, `lags`
 * lagged demeaned hits and the contemporaneous VaR. A rank-deficient design
 * is projected with a pseudo-inverse and the degrees of freedom reduced to
 * the rank.
 */
[[nodiscard]] TestResult dq_test(const HitSequence& hit, std::span<const double> var,
                                 std::size_t lags = 4);

/// Residuals (y_t - ES_t) / q_t on violation days, q_t = -VaR_t.
[[nodiscard]] std::vector<double> es_residuals(std::span<const double> y,
                                               std::span<const double> var,
                                               std::span<const double> es);

/// Two-sided studentized bootstrap test of zero mean on null-centered residuals.
[[nodiscard]] double bootstrap_zero_mean_test(std::span<const double> residuals,
                                              std::size_t replications, Rng& rng);

/// Residual bootstrap test for ES forecasts; throws InsufficientData with < 3 violations.
[[nodiscard]] double es_bootstrap_test(std::span<const double> y, std::span<const double> var,
                                       std::span<const double> es, std::size_t replications,
                                       Rng& rng);

/// Basel zones from the Binomial(m, tau) CDF at x: green <= 0.95 < yellow <= 0.9999 < red.
[[nodiscard]] TrafficLight traffic_light(std::size_t x, std::size_t m, double tau);

struct BacktestReport {
    double actual_over_expected = 0.0;
    double ad_mean = 0.0;
    double ad_max = 0.0;
    std::size_t violations = 0;
    std::size_t observations = 0;
    double tau = 0.05;
    TestResult lr_uc;
    TestResult lr_cc;
    TestResult dq;
    std::optional<double> es_bootstrap_p;
    TrafficLight zone = TrafficLight::Green;
    double average_check_loss = 0.0;
};

struct BacktestOptions {
    std::size_t dq_lags = 4;
    std::size_t bootstrap_replications = 1000;
    std::uint64_t seed = 1;
};

[[nodiscard]] BacktestReport backtest(std::span<const double> y, std::span<const double> var,
                                      std::span<const double> es, double tau,
                                      const BacktestOptions& options);

}  // namespace bcarm
