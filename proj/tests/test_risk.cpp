#include "doctest.h"

#include "fixtures.hpp"

#include "bcarm/error.hpp"
#include "bcarm/risk.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <random>
#include <vector>

using namespace bcarm;

namespace {

// Expectile level nu of N(0,1) whose expectile equals the tau-quantile q:
// nu = G(q) / (2 G(q) + q), with G(q) = E(q - Z)_+ = q Phi(q) + phi(q); see the
// first-order condition nu E(Z - q)_+ = (1 - nu) E(q - Z)_+ and E(Z - q)_+ = G(q) - q.
double normal_nu_for_quantile(double tau) {
    const boost::math::normal n01;
    const double q = quantile(n01, tau);
    const double lower = q * cdf(n01, q) + pdf(n01, q);
    return lower / (2.0 * lower - q);
}

std::vector<double> normal_series(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d;
    std::vector<double> y(n);
    for (double& v : y) v = d(rng);
    return y;
}

CalibrationOptions constant_level_options() {
    CalibrationOptions opt;
    opt.chain.iterations = 1500;
    opt.chain.burn_in = 500;
    opt.chain.thin = 5;
    opt.chain.free.gamma = false;
    opt.chain.free.beta = false;
    opt.chain.initial = ParamVector{0.0, 0.0, {0.0}, 1.0, {}};
    return opt;
}

}  // namespace

TEST_CASE("normal expectile oracle") {
    // Independent check of the oracle itself by root-finding on the first-order condition.
    const boost::math::normal n01;
    const double q = quantile(n01, 0.05);
    const auto foc = [&](double nu) {
        const double below = q * cdf(n01, q) + pdf(n01, q);
        return nu * (below - q) - (1.0 - nu) * below;
    };
    boost::math::tools::eps_tolerance<double> tol(50);
    const auto [a, b] = boost::math::tools::bisect(foc, 1e-6, 0.5, tol);
    CHECK(normal_nu_for_quantile(0.05) == doctest::Approx(0.5 * (a + b)).epsilon(1e-12));
    CHECK(normal_nu_for_quantile(0.05) == doctest::Approx(0.0123873).epsilon(1e-5));
}

TEST_CASE("expectile calibration") {
    const auto y = normal_series(10000, 12);
    const auto spec = make_model_spec(NicVariant::SymmetricAbsoluteValue, 2, 0.05);
    const auto opt = constant_level_options();

    const auto r05 = calibrate_nu(spec, PriorSpec{}, opt, y, 0.05);
    CHECK(std::abs(r05.nu - normal_nu_for_quantile(0.05)) <= 0.003);
    CHECK(std::abs(r05.proportion - 0.05) < 0.005);
    // Warm-started bisection touches only a handful of grid points.
    CHECK(r05.trace.size() < 15);
    for (std::size_t i = 1; i < r05.trace.size(); ++i) {
        CHECK(r05.trace[i].nu > r05.trace[i - 1].nu);
        CHECK(r05.trace[i].proportion >= r05.trace[i - 1].proportion);
    }

    const auto r01 = calibrate_nu(spec, PriorSpec{}, opt, y, 0.01);
    CHECK(r01.nu < r05.nu);

    // tau = 0.5 lands on the mean expectile at the end of the grid.
    const auto r50 = calibrate_nu(spec, PriorSpec{}, opt, y, 0.5);
    CHECK(r50.nu >= 0.45);
    CHECK(r50.proportion == doctest::Approx(0.5).epsilon(0.05));

    auto cold = opt;
    cold.cold_start = true;
    const auto rc = calibrate_nu(spec, PriorSpec{}, cold, y, 0.05);
    CHECK(std::abs(rc.nu - r05.nu) <= 0.002);

    CHECK_THROWS_AS((void)calibrate_nu(make_model_spec(NicVariant::SymmetricAbsoluteValue, 1, 0.05),
                                       PriorSpec{}, opt, y, 0.05),
                    std::invalid_argument);
}

TEST_CASE("calibration fails when no level reaches the target rate") {
    // Three distinct values: the proportion below any expectile jumps from 0 to 1/3.
    std::vector<double> y;
    for (int i = 0; i < 600; ++i) y.push_back(static_cast<double>(i % 3));
    const auto spec = make_model_spec(NicVariant::SymmetricAbsoluteValue, 2, 0.05);
    CHECK_THROWS_AS((void)calibrate_nu(spec, PriorSpec{}, constant_level_options(), y, 0.01),
                    CalibrationFailure);
}

TEST_CASE("expectile to ES mapping") {
    const double k = 0.01 / (0.98 * 0.05);
    CHECK(expectile_to_es(-2.0, 0.01, 0.05, 0.0) == (1.0 + k) * -2.0);
    CHECK(expectile_to_es(-2.0, 0.01, 0.05, 0.0) == doctest::Approx(-2.4082).epsilon(1e-4));
    CHECK(expectile_to_es(-2.0, 0.0, 0.05, 0.3) == -2.0);
    CHECK(expectile_to_es(0.3, 0.2, 0.05, 0.3) == doctest::Approx(0.3).epsilon(1e-15));
    CHECK_THROWS_AS((void)expectile_to_es(-1.0, 0.5, 0.05, 0.0), InvalidParameter);

    RiskSeries s = extract_var(make_model_spec(NicVariant::SymmetricAbsoluteValue, 2, 0.05),
                               std::vector{-1.0, -2.0}, 0.05, 0.01);
    attach_es(s, std::vector{-1.0, -2.0}, 0.0);
    CHECK(s.es[1] == doctest::Approx(-2.4082).epsilon(1e-4));
    RiskSeries bare = extract_var(make_model_spec(NicVariant::SymmetricAbsoluteValue, 1, 0.05),
                                  std::vector{-1.0}, 0.05);
    CHECK_THROWS(attach_es(bare, std::vector{-1.0}, 0.0));
}

TEST_CASE("VaR extraction") {
    const auto spec = make_model_spec(NicVariant::SymmetricAbsoluteValue, 1, 0.05);
    CHECK(extract_var(spec, std::vector{-1.65}, 0.05).var[0] == 1.65);

    // Constant-level CAViaR fit recovers the empirical quantile.
    const auto y = normal_series(4000, 5);
    SamplerConfig cfg = constant_level_options().chain;
    cfg.iterations = 4000;
    cfg.burn_in = 1000;
    const auto d = run_chain(spec, PriorSpec{}, cfg, y);
    const auto g = recurse_g(spec, d.posterior_mean(), y);
    const auto risk = extract_var(spec, g, 0.05);
    CHECK(risk.var.back() == doctest::Approx(-empirical_quantile(y, 0.05)).epsilon(0.03));
}

TEST_CASE("VaR is ordered across levels on paired fits") {
    const auto path = testing::sav_benchmark(2000, 8);
    SamplerConfig cfg;
    cfg.iterations = 10000;
    cfg.burn_in = 4000;
    cfg.thin = 5;
    std::vector<double> var_01, var_05;
    for (double tau : {0.01, 0.05}) {
        const auto spec = make_model_spec(NicVariant::SymmetricAbsoluteValue, 1, tau);
        const auto d = run_chain(spec, PriorSpec{}, cfg, path.y);
        (tau == 0.01 ? var_01 : var_05) = extract_var(spec, recurse_g(spec, d.posterior_mean(), path.y), tau).var;
    }
    std::size_t ordered = 0;
    for (std::size_t t = 0; t < var_01.size(); ++t) ordered += var_01[t] >= var_05[t] ? 1 : 0;
    CHECK(ordered == var_01.size());
}
