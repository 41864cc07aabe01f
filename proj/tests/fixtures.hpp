#pragma once

// Synthetic data generators shared by the unit and acceptance suites.

#include "bcarm/model.hpp"
#include "bcarm/nic.hpp"
#include "bcarm/sampler.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace bcarm::testing {

/// Asymmetric Laplace draw with zero tau-quantile: left rate (1-tau)/sigma, right rate tau/sigma.
inline double draw_asymmetric_laplace(double tau, double sigma, Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::exponential_distribution<double> e(1.0);
    const double side = u(rng);
    const double mag = e(rng);
    return side < tau ? -mag * sigma / (1.0 - tau) : mag * sigma / tau;
}

struct SyntheticPath {
    std::vector<double> y;
    std::vector<double> g;
    std::uint64_t seed = 0;
};

/**
 * y_t = g_t + e_t with g_t = omega + gamma g_{t-1} + news(y_{t-1}) and
 * AL(tau, sigma) errors. Paths whose level leaves [-limit, limit] are
 * discarded and redrawn from the next sub-seed.
 */
template <class News>
SyntheticPath simulate_linear(double omega, double gamma, News news, double tau, double sigma,
                              std::size_t n, std::uint64_t seed, double limit = 100.0,
                              std::size_t warmup = 200) {
    for (std::uint64_t attempt = 0;; ++attempt) {
        const std::uint64_t s = seed * 1000003ULL + attempt;
        Rng rng(s);
        SyntheticPath path;
        path.seed = s;
        double g = std::abs(1.0 - gamma) > 1e-12 ? omega / (1.0 - gamma) : omega;
        double y_prev = g;
        bool ok = true;
        for (std::size_t t = 0; t < n + warmup; ++t) {
            if (t > 0) g = omega + gamma * g + news(y_prev);
            if (!(std::abs(g) < limit)) {
                ok = false;
                break;
            }
            const double y = g + draw_asymmetric_laplace(tau, sigma, rng);
            if (t >= warmup) {
                path.g.push_back(g);
                path.y.push_back(y);
            }
            y_prev = y;
        }
        if (ok) return path;
    }
}

/// Lower-tail SAV benchmark: (omega, gamma, beta, sigma) = (-0.05, 0.85, -0.2, 0.5), tau = 0.05.
inline SyntheticPath sav_benchmark(std::size_t n, std::uint64_t seed) {
    return simulate_linear(
        -0.05, 0.85, [](double y) { return -0.2 * std::abs(y); }, 0.05, 0.5, n, seed);
}

/// Piecewise-linear asymmetric news impact: slopes 0.4 left / 0.1 right of the kink at 0.25.
inline double kinked_news(double y) {
    constexpr double kink = 0.25;
    return y < kink ? 0.4 * (kink - y) : 0.1 * (y - kink);
}

}  // namespace bcarm::testing
