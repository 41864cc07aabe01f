#pragma once

#include "bcarm/model.hpp"
#include "bcarm/nic.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace bcarm {

using Rng = std::mt19937_64;

/// Hyperparameters. Parametric-NIC coefficients share the omega prior N(0, omega_var).
struct PriorSpec {
    double omega_var = 100.0;
    double gamma_var = 100.0;
    double sigma_a = 0.001;
    double sigma_b = 0.001;
    double phi_a = 0.001;
    double phi_b = 0.001;
};

void validate(const PriorSpec& prior);

/// Independence-proposal parameters per block plus the adaptation counter.
struct ProposalState {
    Eigen::VectorXd beta_mean;
    Eigen::MatrixXd beta_cov;
    double omega_mean = 0.0;
    double omega_var = 0.1;
    double gamma_mean = 0.0;
    double gamma_var = 0.1;
    double log_sigma_mean = 0.0;
    double log_sigma_var = 0.1;
    /// Joint proposal over the free location parameters (omega, gamma, beta).
    Eigen::VectorXd joint_mean;
    Eigen::MatrixXd joint_cov;
    bool joint_omega = false;
    bool joint_gamma = false;
    bool joint_beta = false;
    std::size_t step = 0;
    double tuning = 10.0;
};

/// Which blocks the chain updates; fixed blocks stay at their initial values.
struct FreeBlocks {
    bool beta = true;
    bool omega = true;
    bool gamma = true;
    bool sigma = true;
    /// Extra joint (omega, gamma, beta) independence move after the single-block sweep.
    bool joint = true;
};

struct SamplerConfig {
    std::size_t iterations = 50000;
    std::size_t burn_in = 20000;
    std::size_t thin = 10;
    std::uint64_t seed = 20180101;
    double initial_beta_cov = 0.1;
    double initial_scalar_var = 0.1;
    FreeBlocks free{};
    /// Starting point; defaults described in initial_params().
    std::optional<ParamVector> initial;
    /// Starting proposal state (warm starts); defaults described in initial_proposal().
    std::optional<ProposalState> initial_proposal;
    /// Ignore the likelihood and sample the prior (diagnostics).
    bool prior_only = false;
    /// Record ||Sigma_beta^{(i+1)} - Sigma_beta^{(i)}|| bounds for every adaptation step.
    bool record_adaptation = false;
};

void validate(const SamplerConfig& config);

/// Per-step record of the diminishing-adaptation check on the beta block.
struct AdaptationRecord {
    std::size_t step = 0;
    double rate = 0.0;
    double change_norm = 0.0;
    double bound = 0.0;
};

enum Block : std::uint8_t {
    kBetaBlock = 1,
    kOmegaBlock = 2,
    kGammaBlock = 4,
    kSigmaBlock = 8,
    kJointBlock = 16,
};

struct PosteriorDraws {
    std::vector<std::string> names;
    /// One retained draw per row, columns as in `names`.
    Eigen::MatrixXd values;
    std::vector<double> log_posterior;
    /// Bitmask of Block values accepted on the iteration that produced each draw.
    std::vector<std::uint8_t> accepted;
    /// Log-posterior after every iteration (including burn-in).
    std::vector<double> trace;
    double acceptance_beta = 0.0;
    double acceptance_omega = 0.0;
    double acceptance_gamma = 0.0;
    double acceptance_sigma = 0.0;
    double acceptance_joint = 0.0;
    ProposalState final_proposal;
    std::vector<AdaptationRecord> adaptation;
    std::size_t num_beta = 0;
    bool has_phi2 = false;

    [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(values.rows()); }
    [[nodiscard]] ParamVector draw(std::size_t row) const;
    [[nodiscard]] ParamVector posterior_mean() const;
    /// Column index for a parameter name; throws std::out_of_range.
    [[nodiscard]] std::size_t column(const std::string& name) const;
    [[nodiscard]] Eigen::MatrixXd beta_draws() const;
};

/// Parameter names in draw-column order: omega, gamma, beta_1.., sigma[, phi2].
[[nodiscard]] std::vector<std::string> parameter_names(const ModelSpec& spec);

[[nodiscard]] double log_normal_density(double x, double mean, double var);
[[nodiscard]] double log_inverse_gamma_density(double x, double shape, double scale);

/// log prior of every block (spline: intrinsic RW2 density plus IG on phi^2).
[[nodiscard]] double log_prior(const ModelSpec& spec, const PriorSpec& prior,
                               const ParamVector& params);

[[nodiscard]] double log_posterior(const ModelSpec& spec, const PriorSpec& prior,
                                   const ParamVector& params, std::span<const double> y,
                                   std::span<const double> z = {});

/// Posterior evaluation over a cached model.
[[nodiscard]] double log_posterior(const CarmModel& model, const PriorSpec& prior,
                                   const ParamVector& params);

/// min{1, exp(post_new - post_old + q_at_old - q_at_new)}; 0 when post_new is -infinity.
[[nodiscard]] double mh_accept_prob(double log_post_new, double log_post_old, double log_q_at_old,
                                    double log_q_at_new);

/// Inverse-gamma full conditional of phi^2: shape a + rank(K)/2, scale b + beta'K beta / 2.
struct InverseGammaParams {
    double shape = 0.0;
    double scale = 0.0;
};

[[nodiscard]] InverseGammaParams phi2_full_conditional(std::span<const double> beta,
                                                       const PenaltyMatrix& k,
                                                       const PriorSpec& prior);

[[nodiscard]] double draw_inverse_gamma(const InverseGammaParams& ig, Rng& rng);

[[nodiscard]] double gibbs_update_phi2(std::span<const double> beta, const PenaltyMatrix& k,
                                       const PriorSpec& prior, Rng& rng);

/// Adaptation step size 1 / (C sqrt(i)).
[[nodiscard]] double adaptation_rate(std::size_t i, double tuning = 10.0);

/**
 * Robbins-Monro update of every proposal block towards the current state
 * with step adaptation_rate(i). Sigma_beta is kept positive definite.
 */
[[nodiscard]] ProposalState adapt(const ProposalState& state, const ParamVector& current,
                                  std::size_t i);

[[nodiscard]] ParamVector initial_params(const ModelSpec& spec, std::span<const double> y);
[[nodiscard]] ProposalState initial_proposal(const ModelSpec& spec, const SamplerConfig& config,
                                             std::span<const double> y);

/// Adaptive independent Metropolis-within-Gibbs. Deterministic given config.seed.
[[nodiscard]] PosteriorDraws run_chain(const ModelSpec& spec, const PriorSpec& prior,
                                       const SamplerConfig& config, std::span<const double> y,
                                       std::span<const double> z = {});

}  // namespace bcarm
