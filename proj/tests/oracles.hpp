#pragma once

// Brute-force reference statistics, written from the textbook definitions
// without sharing code with the library's backtests.

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <span>
#include <utility>
#include <vector>

namespace bcarm::testing {

/// Bernoulli log-likelihood of a 0/1 sequence at success probability p, term by term.
inline long double bernoulli_loglik(std::span<const int> seq, long double p) {
    long double ll = 0.0L;
    for (int v : seq) {
        const long double prob = v ? p : 1.0L - p;
        if (prob == 0.0L) return -INFINITY;
        ll += std::log(prob);
    }
    return ll;
}

inline double brute_lr_uc(std::span<const int> hit, double tau) {
    long double x = 0;
    for (int v : hit) x += v;
    const long double p_hat = x / hit.size();
    // MLE likelihood: every term with probability 0 or 1 contributes log 1 = 0.
    long double alt = 0.0L;
    for (int v : hit) {
        const long double prob = v ? p_hat : 1.0L - p_hat;
        if (prob > 0.0L) alt += std::log(prob);
    }
    return static_cast<double>(-2.0L * (bernoulli_loglik(hit, tau) - alt));
}

inline double brute_lr_ind(std::span<const int> hit) {
    std::map<std::pair<int, int>, long double> n;
    for (std::size_t t = 1; t < hit.size(); ++t) n[{hit[t - 1], hit[t]}] += 1.0L;
    auto transition_ll = [](long double stay, long double move) {
        const long double total = stay + move;
        long double ll = 0.0L;
        if (total == 0.0L) return ll;
        if (stay > 0.0L) ll += stay * std::log(stay / total);
        if (move > 0.0L) ll += move * std::log(move / total);
        return ll;
    };
    const long double alt = transition_ll(n[{0, 0}], n[{0, 1}]) + transition_ll(n[{1, 1}], n[{1, 0}]);
    const long double ones = n[{0, 1}] + n[{1, 1}];
    const long double zeros = n[{0, 0}] + n[{1, 0}];
    const long double null = transition_ll(zeros, ones);
    return static_cast<double>(-2.0L * (null - alt));
}

inline double brute_lr_cc(std::span<const int> hit, double tau) {
    return brute_lr_uc(hit, tau) + brute_lr_ind(hit);
}

/// DQ = h' X (X'X)^{-1} X' h / (tau (1 - tau)) by explicit normal-equation inversion.
inline double brute_dq(std::span<const int> hit, std::span<const double> var, double tau,
                       std::size_t lags) {
    const std::size_t m = hit.size();
    const std::size_t n = m - lags;
    Eigen::MatrixXd x(n, lags + 2);
    Eigen::VectorXd h(n);
    for (std::size_t r = 0; r < n; ++r) {
        const std::size_t t = r + lags;
        h(r) = hit[t] - tau;
        x(r, 0) = 1.0;
        for (std::size_t l = 1; l <= lags; ++l) x(r, l) = hit[t - l] - tau;
        x(r, lags + 1) = var[t];
    }
    const Eigen::MatrixXd xtx_inv = (x.transpose() * x).inverse();
    const Eigen::VectorXd xth = x.transpose() * h;
    return xth.dot(xtx_inv * xth) / (tau * (1.0 - tau));
}

}  // namespace bcarm::testing
