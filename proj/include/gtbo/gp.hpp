// gp.hpp
//
// Matern-5/2 ARD Gaussian process surrogate with MAP hyperparameter fitting
// under log-normal priors. Targets are standardized internally (zero mean,
// unit variance) before fitting; predictions are mapped back, and the
// predictive variance is the latent one, without the likelihood noise.

#ifndef GTBO_GP_HPP
#define GTBO_GP_HPP

#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "gtbo/common.hpp"

namespace gtbo {

// log-normal over a positive hyperparameter: log(x) ~ N(mu, sigma^2)
struct LengthscalePrior {
    double mu = 0.0;
    double sigma = 1.0;
};

struct GpHyperparams {
    std::vector<double> lengthscales;  // one per dimension, > 0
    double signal_var = 1.0;
    double noise_var = 1e-2;   // likelihood noise on the standardized scale
    double mean_const = 0.0;   // constant mean on the standardized scale
};

struct GpPriors {
    std::vector<LengthscalePrior> lengthscales;  // one per dimension
    LengthscalePrior signal_var{0.0, 1.0};
    LengthscalePrior noise_var{-4.0, 1.0};
    // the constant mean is unpenalized
};

struct GpError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GpFitConfig {
    int restarts = 3;
    int max_iters = 200;
    double grad_tol = 1e-5;   // max-abs over the log-space gradient
    double init_step = 0.1;
};

// Fitted surrogate. train_targets and hyper live on the standardized scale;
// target_shift/target_scale map predictions back. chol_lower and alpha cache
// the factorization of K + (noise + jitter) I.
struct GpSurrogate {
    std::vector<std::vector<double>> train_inputs;
    std::vector<double> train_targets;
    GpHyperparams hyper;
    GpPriors priors;
    double target_shift = 0.0;
    double target_scale = 1.0;
    double jitter = 0.0;            // absolute diagonal addition used
    double fit_log_posterior = 0.0;
    Eigen::MatrixXd chol_lower;
    Eigen::VectorXd alpha;

    int dim() const { return static_cast<int>(hyper.lengthscales.size()); }
    int size() const { return static_cast<int>(train_targets.size()); }
};

struct GpPrediction {
    double mean = 0.0;
    double variance = 0.0;  // latent, clamped at 0
};

// value of the MAP objective and its gradient in the packed parameterization
// [log l_1 .. log l_D, log signal_var, log noise_var, mean_const]
struct GpObjective {
    double value = 0.0;
    std::vector<double> grad;
};

/// signal_var * (1 + sqrt5 r + 5 r^2 / 3) * exp(-sqrt5 r) with
/// r^2 = sum_i ((a_i - b_i) / l_i)^2.
double matern52(const std::vector<double>& a, const std::vector<double>& b,
                const GpHyperparams& h);

/// Log marginal likelihood of the targets plus the log-normal prior
/// log-densities, with the analytic gradient. Targets are used as given (the
/// fit standardizes before calling this). Zero training points leave only
/// the prior terms. Throws GpError when the kernel matrix cannot be
/// factorized even at the top of the jitter ladder.
GpObjective log_posterior_with_grad(
    const std::vector<std::vector<double>>& inputs,
    const std::vector<double>& targets, const GpPriors& priors,
    const GpHyperparams& hyper);

/// Surrogate at fixed hyperparameters: standardizes the targets and caches
/// the factorization. No optimization.
GpSurrogate build_surrogate(const std::vector<std::vector<double>>& inputs,
                            const std::vector<double>& targets,
                            const GpPriors& priors,
                            const GpHyperparams& hyper);

/// MAP fit by gradient ascent with an adaptive step, multiple restarts, and
/// the jitter ladder. The first restart starts from the prior medians, or
/// from *warm_start when given; later restarts draw their starting point
/// from the priors. Throws GpError when every restart fails to factorize.
GpSurrogate fit_map(const std::vector<std::vector<double>>& inputs,
                    const std::vector<double>& targets, const GpPriors& priors,
                    const GpFitConfig& cfg, Rng& rng,
                    const GpHyperparams* warm_start = nullptr);

/// Standard GP posterior at x on the original target scale. The variance is
/// the latent one (no likelihood noise), clamped at 0.
GpPrediction predict(const GpSurrogate& gp, const std::vector<double>& x);

}  // namespace gtbo

#endif  // GTBO_GP_HPP
