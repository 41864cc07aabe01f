#include "bcarm/sampler.hpp"

#include "bcarm/error.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace bcarm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kMinProposalVar = 1e-14;
constexpr double kCovJitter = 1e-8;

bool is_spline(const ModelSpec& spec) { return spec.nic.variant == NicVariant::Spline; }

double sample_std(std::span<const double> y) {
    if (y.size() < 2) {
        return 1.0;
    }
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    double ss = 0.0;
    for (double v : y) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(y.size() - 1));
    return sd > 0.0 ? sd : 1.0;
}

Eigen::LLT<Eigen::MatrixXd> robust_cholesky(Eigen::MatrixXd& cov) {
    cov = 0.5 * (cov + cov.transpose());
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    double jitter = kCovJitter;
    while (llt.info() != Eigen::Success) {
        cov.diagonal().array() += jitter;
        llt.compute(cov);
        jitter *= 10.0;
    }
    return llt;
}

/// Log Gaussian kernel -0.5 (x-mu)' S^{-1} (x-mu); normalizers cancel in the MH ratio.
double gaussian_kernel(const Eigen::LLT<Eigen::MatrixXd>& llt, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& mean) {
    const Eigen::VectorXd w = llt.matrixL().solve(x - mean);
    return -0.5 * w.squaredNorm();
}

Eigen::VectorXd pack_joint(const ProposalState& state, const ParamVector& params) {
    Eigen::VectorXd v(state.joint_mean.size());
    Eigen::Index i = 0;
    if (state.joint_omega) v(i++) = params.omega;
    if (state.joint_gamma) v(i++) = params.gamma;
    if (state.joint_beta) {
        for (double b : params.beta) v(i++) = b;
    }
    return v;
}

void unpack_joint(const ProposalState& state, const Eigen::VectorXd& v, ParamVector& params) {
    Eigen::Index i = 0;
    if (state.joint_omega) params.omega = v(i++);
    if (state.joint_gamma) params.gamma = v(i++);
    if (state.joint_beta) {
        for (double& b : params.beta) b = v(i++);
    }
}

}  // namespace

void validate(const PriorSpec& prior) {
    const double values[] = {prior.omega_var, prior.gamma_var, prior.sigma_a,
                             prior.sigma_b,   prior.phi_a,     prior.phi_b};
    for (double v : values) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw InvalidParameter("prior hyperparameters must be positive and finite");
        }
    }
}

void validate(const SamplerConfig& config) {
    if (!(config.iterations > config.burn_in)) {
        throw std::invalid_argument("sampler iterations must exceed the burn-in");
    }
    if (config.thin == 0) {
        throw std::invalid_argument("thinning interval must be positive");
    }
    if (!(config.initial_beta_cov > 0.0) || !(config.initial_scalar_var > 0.0)) {
        throw std::invalid_argument("initial proposal scales must be positive");
    }
}

std::vector<std::string> parameter_names(const ModelSpec& spec) {
    std::vector<std::string> names{"omega", "gamma"};
    const std::size_t p = spec.nic.num_coefficients();
    for (std::size_t j = 0; j < p; ++j) {
        names.push_back("beta_" + std::to_string(j + 1));
    }
    names.emplace_back("sigma");
    if (is_spline(spec)) {
        names.emplace_back("phi2");
    }
    return names;
}

double log_normal_density(double x, double mean, double var) {
    const double d = x - mean;
    return -0.5 * (std::log(2.0 * std::numbers::pi * var) + d * d / var);
}

double log_inverse_gamma_density(double x, double shape, double scale) {
    if (!(x > 0.0)) {
        return kNegInf;
    }
    return shape * std::log(scale) - boost::math::lgamma(shape) - (shape + 1.0) * std::log(x) -
           scale / x;
}

double log_prior(const ModelSpec& spec, const PriorSpec& prior, const ParamVector& params) {
    if (!(params.sigma > 0.0) || !std::isfinite(params.sigma)) {
        return kNegInf;
    }
    double lp = log_normal_density(params.omega, 0.0, prior.omega_var) +
                log_normal_density(params.gamma, 0.0, prior.gamma_var) +
                log_inverse_gamma_density(params.sigma, prior.sigma_a, prior.sigma_b);
    if (is_spline(spec)) {
        if (!params.phi2 || !(*params.phi2 > 0.0)) {
            return kNegInf;
        }
        const double phi2 = *params.phi2;
        const auto& b = params.beta;
        double quad = 0.0;
        for (std::size_t v = 2; v < b.size(); ++v) {
            const double diff = b[v] - 2.0 * b[v - 1] + b[v - 2];
            quad += diff * diff;
        }
        const double rank = static_cast<double>(b.size()) - 2.0;
        lp += -quad / (2.0 * phi2) - 0.5 * rank * std::log(phi2) +
              log_inverse_gamma_density(phi2, prior.phi_a, prior.phi_b);
    } else {
        for (double b : params.beta) {
            lp += log_normal_density(b, 0.0, prior.omega_var);
        }
    }
    return lp;
}

double log_posterior(const CarmModel& model, const PriorSpec& prior, const ParamVector& params) {
    const double lp = log_prior(model.spec(), prior, params);
    if (lp == kNegInf) {
        return kNegInf;
    }
    const double ll = model.log_likelihood(params);
    return ll == kNegInf ? kNegInf : ll + lp;
}

double log_posterior(const ModelSpec& spec, const PriorSpec& prior, const ParamVector& params,
                     std::span<const double> y, std::span<const double> z) {
    return log_posterior(CarmModel(spec, y, z), prior, params);
}

double mh_accept_prob(double log_post_new, double log_post_old, double log_q_at_old,
                      double log_q_at_new) {
    if (log_post_new == kNegInf || std::isnan(log_post_new)) {
        return 0.0;
    }
    const double log_ratio = log_post_new - log_post_old + log_q_at_old - log_q_at_new;
    if (std::isnan(log_ratio)) {
        return 0.0;
    }
    return log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
}

InverseGammaParams phi2_full_conditional(std::span<const double> beta, const PenaltyMatrix& k,
                                         const PriorSpec& prior) {
    return {prior.phi_a + 0.5 * static_cast<double>(k.rank()),
            prior.phi_b + 0.5 * penalty_quadform(beta, k)};
}

double draw_inverse_gamma(const InverseGammaParams& ig, Rng& rng) {
    std::gamma_distribution<double> gamma(ig.shape, 1.0);
    return ig.scale / gamma(rng);
}

double gibbs_update_phi2(std::span<const double> beta, const PenaltyMatrix& k,
                         const PriorSpec& prior, Rng& rng) {
    return draw_inverse_gamma(phi2_full_conditional(beta, k, prior), rng);
}

double adaptation_rate(std::size_t i, double tuning) {
    if (i == 0) {
        throw std::invalid_argument("adaptation step counter starts at 1");
    }
    return 1.0 / (tuning * std::sqrt(static_cast<double>(i)));
}

ProposalState adapt(const ProposalState& state, const ParamVector& current, std::size_t i) {
    const double rate = adaptation_rate(i, state.tuning);
    ProposalState next = state;
    next.step = i;

    const auto p = static_cast<Eigen::Index>(current.beta.size());
    if (state.beta_mean.size() == p && p > 0) {
        const Eigen::Map<const Eigen::VectorXd> x(current.beta.data(), p);
        const Eigen::VectorXd d = x - state.beta_mean;
        next.beta_mean = state.beta_mean + rate * d;
        next.beta_cov = state.beta_cov + rate * (d * d.transpose() - state.beta_cov);
        (void)robust_cholesky(next.beta_cov);
    }

    if (state.joint_mean.size() > 0) {
        const Eigen::VectorXd d = pack_joint(state, current) - state.joint_mean;
        next.joint_mean = state.joint_mean + rate * d;
        next.joint_cov = state.joint_cov + rate * (d * d.transpose() - state.joint_cov);
        (void)robust_cholesky(next.joint_cov);
    }

    auto scalar = [rate](double& mean, double& var, double x) {
        const double d = x - mean;
        mean += rate * d;
        var = std::max(var + rate * (d * d - var), kMinProposalVar);
    };
    scalar(next.omega_mean, next.omega_var, current.omega);
    scalar(next.gamma_mean, next.gamma_var, current.gamma);
    scalar(next.log_sigma_mean, next.log_sigma_var, std::log(current.sigma));
    return next;
}

ParamVector initial_params(const ModelSpec& spec, std::span<const double> y) {
    ParamVector params;
    const double level = spec.alpha == 2 ? empirical_expectile(y, spec.tau)
                                         : empirical_quantile(y, spec.tau);
    params.gamma = 0.8;
    params.sigma = sample_std(y);
    const std::size_t p = spec.nic.num_coefficients();
    if (spec.recursion == Recursion::IndirectGarch) {
        params.omega = (1.0 - params.gamma) * level * level;
        params.beta.assign(p, 0.0);
    } else if (is_spline(spec)) {
        // A constant spline carries the intercept.
        params.omega = 0.0;
        params.beta.assign(p, (1.0 - params.gamma) * level);
        params.phi2 = 1.0;
    } else {
        params.omega = (1.0 - params.gamma) * level;
        params.beta.assign(p, 0.0);
    }
    return params;
}

ProposalState initial_proposal(const ModelSpec& spec, const SamplerConfig& config,
                               std::span<const double> y) {
    ProposalState state;
    const auto p = static_cast<Eigen::Index>(spec.nic.num_coefficients());
    state.beta_mean = Eigen::VectorXd::Zero(p);
    state.beta_cov = config.initial_beta_cov * Eigen::MatrixXd::Identity(p, p);
    state.omega_var = config.initial_scalar_var;
    state.gamma_var = config.initial_scalar_var;
    state.log_sigma_var = config.initial_scalar_var;
    state.log_sigma_mean = std::log(sample_std(y) / 2.0);

    // Joint move over the free location parameters; it lets omega, gamma and beta travel
    // together along the ridge the single-block moves mix poorly on.
    const FreeBlocks& free = config.free;
    if (free.joint) {
        state.joint_omega = free.omega && !is_spline(spec);
        state.joint_gamma = free.gamma;
        state.joint_beta = free.beta && p > 0;
        const Eigen::Index dim = (state.joint_omega ? 1 : 0) + (state.joint_gamma ? 1 : 0) +
                                 (state.joint_beta ? p : 0);
        if (dim >= 2) {
            state.joint_mean = Eigen::VectorXd::Zero(dim);
            state.joint_cov = config.initial_scalar_var * Eigen::MatrixXd::Identity(dim, dim);
        } else {
            state.joint_omega = state.joint_gamma = state.joint_beta = false;
        }
    }
    return state;
}

ParamVector PosteriorDraws::draw(std::size_t row) const {
    const auto r = static_cast<Eigen::Index>(row);
    ParamVector p;
    p.omega = values(r, 0);
    p.gamma = values(r, 1);
    p.beta.resize(num_beta);
    for (std::size_t j = 0; j < num_beta; ++j) {
        p.beta[j] = values(r, static_cast<Eigen::Index>(2 + j));
    }
    p.sigma = values(r, static_cast<Eigen::Index>(2 + num_beta));
    if (has_phi2) {
        p.phi2 = values(r, static_cast<Eigen::Index>(3 + num_beta));
    }
    return p;
}

ParamVector PosteriorDraws::posterior_mean() const {
    if (values.rows() == 0) {
        throw std::logic_error("posterior mean of an empty draw set");
    }
    const Eigen::VectorXd m = values.colwise().mean();
    ParamVector p;
    p.omega = m(0);
    p.gamma = m(1);
    p.beta.resize(num_beta);
    for (std::size_t j = 0; j < num_beta; ++j) {
        p.beta[j] = m(static_cast<Eigen::Index>(2 + j));
    }
    p.sigma = m(static_cast<Eigen::Index>(2 + num_beta));
    if (has_phi2) {
        p.phi2 = m(static_cast<Eigen::Index>(3 + num_beta));
    }
    return p;
}

std::size_t PosteriorDraws::column(const std::string& name) const {
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) {
        throw std::out_of_range("no parameter named '" + name + "'");
    }
    return static_cast<std::size_t>(it - names.begin());
}

Eigen::MatrixXd PosteriorDraws::beta_draws() const {
    return values.middleCols(2, static_cast<Eigen::Index>(num_beta));
}

PosteriorDraws run_chain(const ModelSpec& spec, const PriorSpec& prior,
                         const SamplerConfig& config, std::span<const double> y,
                         std::span<const double> z) {
    validate(spec);
    validate(prior);
    validate(config);
    const CarmModel model(spec, y, z);
    const bool spline = is_spline(spec);
    FreeBlocks free = config.free;
    if (spline) {
        free.omega = false;
    }

    auto evaluate = [&](const ParamVector& p) {
        return config.prior_only ? log_prior(spec, prior, p) : log_posterior(model, prior, p);
    };

    ParamVector current = config.initial ? *config.initial : initial_params(spec, y);
    if (current.beta.size() != spec.nic.num_coefficients()) {
        throw DimensionMismatch("initial coefficient vector does not match the news impact curve");
    }
    if (spline) {
        current.omega = 0.0;
        if (!current.phi2) current.phi2 = 1.0;
    }
    double lp = evaluate(current);
    for (int attempt = 0; attempt < 10 && lp == kNegInf; ++attempt) {
        current.gamma *= 0.5;
        for (double& b : current.beta) b *= 0.5;
        lp = evaluate(current);
    }
    if (lp == kNegInf) {
        throw InitializationFailure("no starting point with finite posterior after 10 retries");
    }

    ProposalState state =
        config.initial_proposal ? *config.initial_proposal : initial_proposal(spec, config, y);
    const std::size_t p = spec.nic.num_coefficients();
    const std::optional<PenaltyMatrix> penalty =
        spline ? std::optional<PenaltyMatrix>(make_penalty(p)) : std::nullopt;

    PosteriorDraws out;
    out.names = parameter_names(spec);
    out.num_beta = p;
    out.has_phi2 = spline;
    const std::size_t kept = (config.iterations - config.burn_in) / config.thin;
    out.values.resize(static_cast<Eigen::Index>(kept), static_cast<Eigen::Index>(out.names.size()));
    out.log_posterior.reserve(kept);
    out.accepted.reserve(kept);
    out.trace.reserve(config.iterations);

    Rng rng(config.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::size_t acc_beta = 0;
    std::size_t acc_omega = 0;
    std::size_t acc_gamma = 0;
    std::size_t acc_sigma = 0;
    std::size_t acc_joint = 0;
    std::size_t row = 0;
    const bool joint_move = free.joint && state.joint_mean.size() >= 2 &&
                            !(state.joint_omega && !free.omega) &&
                            !(state.joint_gamma && !free.gamma) &&
                            !(state.joint_beta && !free.beta);

    auto scalar_step = [&](double& value, double mean, double var, Block block,
                           std::size_t& counter, std::uint8_t& flags, bool log_scale) {
        const double sd = std::sqrt(var);
        const double proposal_point = mean + sd * normal(rng);
        const double old_point = log_scale ? std::log(value) : value;
        // log q on the natural scale; the log-sigma proposal carries the 1/sigma Jacobian.
        double log_q_new = -0.5 * (proposal_point - mean) * (proposal_point - mean) / var;
        double log_q_old = -0.5 * (old_point - mean) * (old_point - mean) / var;
        if (log_scale) {
            log_q_new -= proposal_point;
            log_q_old -= old_point;
        }
        const double saved = value;
        value = log_scale ? std::exp(proposal_point) : proposal_point;
        const double lp_new = evaluate(current);
        if (uniform(rng) < mh_accept_prob(lp_new, lp, log_q_old, log_q_new)) {
            lp = lp_new;
            flags |= block;
            ++counter;
        } else {
            value = saved;
        }
    };

    for (std::size_t it = 1; it <= config.iterations; ++it) {
        std::uint8_t flags = 0;
        if (free.beta && p > 0) {
            Eigen::MatrixXd cov = state.beta_cov;
            const auto llt = robust_cholesky(cov);
            Eigen::VectorXd z_draw(static_cast<Eigen::Index>(p));
            for (Eigen::Index j = 0; j < z_draw.size(); ++j) z_draw(j) = normal(rng);
            const Eigen::VectorXd proposal = state.beta_mean + llt.matrixL() * z_draw;
            const Eigen::Map<const Eigen::VectorXd> old(current.beta.data(),
                                                        static_cast<Eigen::Index>(p));
            const double log_q_old = gaussian_kernel(llt, old, state.beta_mean);
            const double log_q_new = -0.5 * z_draw.squaredNorm();
            const std::vector<double> saved = current.beta;
            for (std::size_t j = 0; j < p; ++j) current.beta[j] = proposal(static_cast<Eigen::Index>(j));
            const double lp_new = evaluate(current);
            if (uniform(rng) < mh_accept_prob(lp_new, lp, log_q_old, log_q_new)) {
                lp = lp_new;
                flags |= kBetaBlock;
                ++acc_beta;
            } else {
                current.beta = saved;
            }
        }
        if (free.omega) {
            scalar_step(current.omega, state.omega_mean, state.omega_var, kOmegaBlock, acc_omega,
                        flags, false);
        }
        if (free.gamma) {
            scalar_step(current.gamma, state.gamma_mean, state.gamma_var, kGammaBlock, acc_gamma,
                        flags, false);
        }
        if (free.sigma) {
            scalar_step(current.sigma, state.log_sigma_mean, state.log_sigma_var, kSigmaBlock,
                        acc_sigma, flags, true);
        }
        if (joint_move) {
            Eigen::MatrixXd cov = state.joint_cov;
            const auto llt = robust_cholesky(cov);
            Eigen::VectorXd z_draw(state.joint_mean.size());
            for (Eigen::Index j = 0; j < z_draw.size(); ++j) z_draw(j) = normal(rng);
            const Eigen::VectorXd proposal = state.joint_mean + llt.matrixL() * z_draw;
            const double log_q_old =
                gaussian_kernel(llt, pack_joint(state, current), state.joint_mean);
            const double log_q_new = -0.5 * z_draw.squaredNorm();
            const ParamVector saved = current;
            unpack_joint(state, proposal, current);
            const double lp_new = evaluate(current);
            if (uniform(rng) < mh_accept_prob(lp_new, lp, log_q_old, log_q_new)) {
                lp = lp_new;
                flags |= kJointBlock;
                ++acc_joint;
            } else {
                current = saved;
            }
        }
        if (spline && free.beta) {
            current.phi2 = gibbs_update_phi2(current.beta, *penalty, prior, rng);
            lp = evaluate(current);
        }

        const ProposalState next = adapt(state, current, it);
        if (config.record_adaptation && p > 0) {
            const Eigen::VectorXd d =
                Eigen::Map<const Eigen::VectorXd>(current.beta.data(), static_cast<Eigen::Index>(p)) -
                state.beta_mean;
            const double rate = adaptation_rate(it, state.tuning);
            out.adaptation.push_back({it, rate, (next.beta_cov - state.beta_cov).norm(),
                                      rate * ((d * d.transpose()).norm() + state.beta_cov.norm())});
        }
        state = next;
        out.trace.push_back(lp);

        if (it > config.burn_in && (it - config.burn_in) % config.thin == 0 && row < kept) {
            const auto r = static_cast<Eigen::Index>(row);
            out.values(r, 0) = current.omega;
            out.values(r, 1) = current.gamma;
            for (std::size_t j = 0; j < p; ++j) {
                out.values(r, static_cast<Eigen::Index>(2 + j)) = current.beta[j];
            }
            out.values(r, static_cast<Eigen::Index>(2 + p)) = current.sigma;
            if (spline) {
                out.values(r, static_cast<Eigen::Index>(3 + p)) = *current.phi2;
            }
            out.log_posterior.push_back(lp);
            out.accepted.push_back(flags);
            ++row;
        }
    }
    const auto n = static_cast<double>(config.iterations);
    out.acceptance_beta = static_cast<double>(acc_beta) / n;
    out.acceptance_omega = static_cast<double>(acc_omega) / n;
    out.acceptance_gamma = static_cast<double>(acc_gamma) / n;
    out.acceptance_sigma = static_cast<double>(acc_sigma) / n;
    out.acceptance_joint = static_cast<double>(acc_joint) / n;
    out.final_proposal = state;
    return out;
}

}  // namespace bcarm
