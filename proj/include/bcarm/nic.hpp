#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace bcarm {

enum class NicVariant { SymmetricAbsoluteValue, AsymmetricSlope, Threshold, IndirectGarch, Spline };

enum class ThresholdVariable { Self, Exogenous };

/// Equidistant B-spline configuration: `segments` equal intervals on [lo, hi], polynomial degree `degree`.
struct SplineConfig {
    int degree = 3;
    int segments = 20;
    double lo = -1.0;
    double hi = 1.0;

    [[nodiscard]] std::size_t dimension() const { return static_cast<std::size_t>(segments + degree); }
};

struct NicSpec {
    NicVariant variant = NicVariant::SymmetricAbsoluteValue;
    double threshold = 0.0;
    ThresholdVariable threshold_variable = ThresholdVariable::Self;
    SplineConfig spline{};

    /// Number of coefficients the variant expects: 1, 2 or segments + degree.
    [[nodiscard]] std::size_t num_coefficients() const;
};

[[nodiscard]] std::string to_string(NicVariant v);
[[nodiscard]] NicVariant nic_variant_from_string(const std::string& name);

/// Default spline range: in-sample [min, max] widened by 5% of the range on each side.
[[nodiscard]] SplineConfig default_spline_config(std::span<const double> y, int segments = 20,
                                                 int degree = 3);

/// Non-zero B-spline values at one point: basis indices first .. first + degree.
struct BasisRow {
    std::size_t first = 0;
    std::vector<double> values;
};

/// Evaluates the degree+1 non-zero basis functions at y (clamped into [lo, hi]).
[[nodiscard]] BasisRow bspline_row(const SplineConfig& cfg, double y);

/// Full basis vector of length segments + degree.
[[nodiscard]] std::vector<double> bspline_basis(const NicSpec& spec, double y);

/// News impact l(beta, y_prev). z_prev is the threshold variable (ignored unless Threshold).
[[nodiscard]] double nic_eval(const NicSpec& spec, std::span<const double> beta, double y_prev,
                              double z_prev);

/// Second-order difference operator D2 ((n-2) x n) and K = D2' D2.
struct PenaltyMatrix {
    Eigen::MatrixXd d2;
    Eigen::MatrixXd k;

    [[nodiscard]] std::size_t dimension() const { return static_cast<std::size_t>(k.rows()); }
    [[nodiscard]] std::size_t rank() const { return dimension() - 2; }
};

[[nodiscard]] PenaltyMatrix make_penalty(std::size_t n);

/// beta' K beta, evaluated as the sum of squared second differences.
[[nodiscard]] double penalty_quadform(std::span<const double> beta, const PenaltyMatrix& k);

/// Row of an exported news-impact curve.
struct NicCurvePoint {
    double y = 0.0;
    double mean = 0.0;
    double hpd_low = 0.0;
    double hpd_high = 0.0;
};

/**
 * Posterior news-impact curve on `grid`: the mean of l(beta_draw, y) over
 * draws and the shortest interval holding `mass` of the draws at each y.
 * beta_draws holds one coefficient vector per row.
 */
[[nodiscard]] std::vector<NicCurvePoint> nic_curve(const NicSpec& spec,
                                                   const Eigen::MatrixXd& beta_draws,
                                                   std::span<const double> grid,
                                                   double mass = 0.95);

/// Shortest interval containing `mass` of the sample.
[[nodiscard]] std::pair<double, double> hpd_interval(std::vector<double> sample, double mass);

}  // namespace bcarm
