// gp.cpp

#include "gtbo/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

namespace gtbo {

namespace {

constexpr double kSqrt5 = 2.2360679774997896964091736687747;

// tried in order, as multiples of (signal_var + noise_var) on the diagonal
constexpr double kJitterLevels[] = {0.0,  1e-10, 1e-9, 1e-8, 1e-7,
                                    1e-6, 1e-5,  1e-4};

void check_shapes(const std::vector<std::vector<double>>& inputs,
                  const std::vector<double>& targets, const GpPriors& priors,
                  const GpHyperparams& hyper) {
    const std::size_t d = hyper.lengthscales.size();
    if (d == 0)
        throw std::invalid_argument("gp: zero-dimensional hyperparameters");
    if (priors.lengthscales.size() != d)
        throw std::invalid_argument("gp: one lengthscale prior per dimension");
    if (inputs.size() != targets.size())
        throw std::invalid_argument("gp: inputs/targets size mismatch");
    for (const auto& row : inputs)
        if (row.size() != d)
            throw std::invalid_argument("gp: input dimension mismatch");
    if (!(hyper.signal_var > 0.0) || !(hyper.noise_var > 0.0))
        throw std::invalid_argument("gp: variances must be positive");
    for (double l : hyper.lengthscales)
        if (!(l > 0.0))
            throw std::invalid_argument("gp: lengthscales must be positive");
    auto check_prior = [](const LengthscalePrior& p) {
        if (!(p.sigma > 0.0))
            throw std::invalid_argument("gp: prior sigma must be positive");
    };
    for (const auto& p : priors.lengthscales) check_prior(p);
    check_prior(priors.signal_var);
    check_prior(priors.noise_var);
}

Eigen::MatrixXd scaled_inputs(const std::vector<std::vector<double>>& inputs,
                              const std::vector<double>& l) {
    const int n = static_cast<int>(inputs.size());
    const int d = static_cast<int>(l.size());
    Eigen::MatrixXd xs(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) xs(i, j) = inputs[i][j] / l[j];
    return xs;
}

// pairwise scaled distances and the kernel matrix; both exactly symmetric
struct KernelParts {
    Eigen::MatrixXd r;
    Eigen::MatrixXd k;
};

KernelParts kernel_matrix(const Eigen::MatrixXd& xs, double signal_var) {
    const int n = static_cast<int>(xs.rows());
    KernelParts kp{Eigen::MatrixXd(n, n), Eigen::MatrixXd(n, n)};
    for (int i = 0; i < n; ++i) {
        kp.r(i, i) = 0.0;
        kp.k(i, i) = signal_var;
        for (int j = i + 1; j < n; ++j) {
            const double r = (xs.row(i) - xs.row(j)).norm();
            const double v = signal_var *
                             (1.0 + kSqrt5 * r + (5.0 / 3.0) * r * r) *
                             std::exp(-kSqrt5 * r);
            kp.r(i, j) = kp.r(j, i) = r;
            kp.k(i, j) = kp.k(j, i) = v;
        }
    }
    return kp;
}

// log density of the log-normal prior at the parameter value exp(t)
double prior_logpdf(double t, const LengthscalePrior& p) {
    const double z = (t - p.mu) / p.sigma;
    return -t - std::log(p.sigma) - 0.5 * kLog2Pi - 0.5 * z * z;
}

double prior_grad(double t, const LengthscalePrior& p) {
    return -1.0 - (t - p.mu) / (p.sigma * p.sigma);
}

double prior_terms(const GpPriors& priors, const GpHyperparams& h) {
    double v = 0.0;
    for (std::size_t i = 0; i < h.lengthscales.size(); ++i)
        v += prior_logpdf(std::log(h.lengthscales[i]), priors.lengthscales[i]);
    v += prior_logpdf(std::log(h.signal_var), priors.signal_var);
    v += prior_logpdf(std::log(h.noise_var), priors.noise_var);
    return v;
}

// One objective evaluation. Everything the gradient needs is kept so the
// line search can stay value-only.
struct PostCache {
    int n = 0;
    double jitter_level = 0.0;
    double jitter_abs = 0.0;
    Eigen::MatrixXd xs;
    KernelParts kp;
    Eigen::LLT<Eigen::MatrixXd> llt;
    Eigen::VectorXd resid, alpha;
    double value = 0.0;
};

PostCache eval_value(const std::vector<std::vector<double>>& inputs,
                     const std::vector<double>& targets,
                     const GpPriors& priors, const GpHyperparams& h) {
    PostCache c;
    c.n = static_cast<int>(targets.size());
    c.value = prior_terms(priors, h);
    if (c.n == 0) return c;

    c.xs = scaled_inputs(inputs, h.lengthscales);
    c.kp = kernel_matrix(c.xs, h.signal_var);
    for (double level : kJitterLevels) {
        Eigen::MatrixXd a = c.kp.k;
        const double add = level * (h.signal_var + h.noise_var);
        a.diagonal().array() += h.noise_var + add;
        c.llt.compute(a);
        if (c.llt.info() == Eigen::Success) {
            c.jitter_level = level;
            c.jitter_abs = add;
            c.resid = Eigen::Map<const Eigen::VectorXd>(targets.data(), c.n)
                          .array() -
                      h.mean_const;
            c.alpha = c.llt.solve(c.resid);
            const double logdet =
                2.0 * c.llt.matrixLLT().diagonal().array().log().sum();
            c.value += -0.5 * c.resid.dot(c.alpha) - 0.5 * logdet -
                       0.5 * c.n * kLog2Pi;
            return c;
        }
    }
    throw GpError("gp: kernel factorization failed at maximum jitter");
}

GpObjective grad_from_cache(const PostCache& c, const GpPriors& priors,
                            const GpHyperparams& h) {
    const int d = static_cast<int>(h.lengthscales.size());
    GpObjective out;
    out.value = c.value;
    out.grad.assign(d + 3, 0.0);
    for (int i = 0; i < d; ++i)
        out.grad[i] =
            prior_grad(std::log(h.lengthscales[i]), priors.lengthscales[i]);
    out.grad[d] = prior_grad(std::log(h.signal_var), priors.signal_var);
    out.grad[d + 1] = prior_grad(std::log(h.noise_var), priors.noise_var);
    if (c.n == 0) return out;

    const int n = c.n;
    const Eigen::MatrixXd ainv =
        c.llt.solve(Eigen::MatrixXd::Identity(n, n));
    const Eigen::MatrixXd g =
        0.5 * (c.alpha * c.alpha.transpose() - ainv);
    const double tr_g = g.trace();

    // dK/d log l_i = W .* (xs_i - xs'_i)^2 with
    // W = (5/3) signal_var (1 + sqrt5 r) exp(-sqrt5 r)
    const Eigen::MatrixXd e = g.cwiseProduct(
        (((5.0 / 3.0) * h.signal_var) * (1.0 + kSqrt5 * c.kp.r.array()) *
         (-kSqrt5 * c.kp.r.array()).exp())
            .matrix());
    const Eigen::VectorXd s = e.rowwise().sum();
    const Eigen::MatrixXd m = e * c.xs;
    for (int i = 0; i < d; ++i) {
        const auto col = c.xs.col(i);
        out.grad[i] += 2.0 * (col.array().square().matrix().dot(s) -
                              col.dot(m.col(i)));
    }
    // the jitter scales with both variances, so it contributes to their
    // gradients whenever a nonzero ladder level was needed
    out.grad[d] += g.cwiseProduct(c.kp.k).sum() +
                   c.jitter_level * h.signal_var * tr_g;
    out.grad[d + 1] += h.noise_var * (1.0 + c.jitter_level) * tr_g;
    out.grad[d + 2] = c.alpha.sum();
    return out;
}

Eigen::VectorXd pack(const GpHyperparams& h) {
    const int d = static_cast<int>(h.lengthscales.size());
    Eigen::VectorXd t(d + 3);
    for (int i = 0; i < d; ++i) t[i] = std::log(h.lengthscales[i]);
    t[d] = std::log(h.signal_var);
    t[d + 1] = std::log(h.noise_var);
    t[d + 2] = h.mean_const;
    return t;
}

GpHyperparams unpack(const Eigen::VectorXd& t) {
    const int d = static_cast<int>(t.size()) - 3;
    GpHyperparams h;
    h.lengthscales.resize(d);
    for (int i = 0; i < d; ++i) h.lengthscales[i] = std::exp(t[i]);
    h.signal_var = std::exp(t[d]);
    h.noise_var = std::exp(t[d + 1]);
    h.mean_const = t[d + 2];
    return h;
}

// a large trial step must not overflow exp()
void clamp_params(Eigen::VectorXd& t) {
    const int d = static_cast<int>(t.size()) - 3;
    for (int i = 0; i < d + 2; ++i) t[i] = std::clamp(t[i], -20.0, 20.0);
    t[d + 2] = std::clamp(t[d + 2], -1e3, 1e3);
}

struct Standardized {
    std::vector<double> y;
    double shift = 0.0;
    double scale = 1.0;
};

Standardized standardize(const std::vector<double>& targets) {
    Standardized s;
    const std::size_t n = targets.size();
    if (n == 0) return s;
    const double mean =
        std::accumulate(targets.begin(), targets.end(), 0.0) /
        static_cast<double>(n);
    double var = 0.0;
    for (double v : targets) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    s.shift = mean;
    s.scale = std::max(std::sqrt(var), 1e-12);
    s.y.resize(n);
    for (std::size_t i = 0; i < n; ++i) s.y[i] = (targets[i] - mean) / s.scale;
    return s;
}

struct AscentResult {
    Eigen::VectorXd theta;
    double value = -std::numeric_limits<double>::infinity();
    bool ok = false;
};

// gradient ascent with a step that grows on acceptance and halves on
// rejection; value-only trials, gradient once per accepted iterate
AscentResult ascend(const std::vector<std::vector<double>>& inputs,
                    const std::vector<double>& targets,
                    const GpPriors& priors, Eigen::VectorXd theta,
                    const GpFitConfig& cfg) {
    AscentResult res;
    clamp_params(theta);
    PostCache cache;
    try {
        cache = eval_value(inputs, targets, priors, unpack(theta));
    } catch (const GpError&) {
        res.theta = std::move(theta);
        return res;
    }
    double step = cfg.init_step;
    for (int it = 0; it < cfg.max_iters; ++it) {
        const GpObjective g = grad_from_cache(cache, priors, unpack(theta));
        double gmax = 0.0;
        for (double v : g.grad) gmax = std::max(gmax, std::abs(v));
        if (gmax < cfg.grad_tol) break;
        const Eigen::Map<const Eigen::VectorXd> dir(
            g.grad.data(), static_cast<Eigen::Index>(g.grad.size()));
        bool moved = false;
        while (step >= 1e-12) {
            Eigen::VectorXd trial = theta + step * dir;
            clamp_params(trial);
            bool accept = false;
            PostCache tc;
            try {
                tc = eval_value(inputs, targets, priors, unpack(trial));
                accept = std::isfinite(tc.value) && tc.value > cache.value;
            } catch (const GpError&) {
            }
            if (accept) {
                theta = std::move(trial);
                cache = std::move(tc);
                step *= 1.5;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if (!moved) break;
    }
    res.theta = std::move(theta);
    res.value = cache.value;
    res.ok = true;
    return res;
}

}  // namespace

double matern52(const std::vector<double>& a, const std::vector<double>& b,
                const GpHyperparams& h) {
    if (a.size() != b.size() || a.size() != h.lengthscales.size())
        throw std::invalid_argument("matern52: dimension mismatch");
    double r2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double z = (a[i] - b[i]) / h.lengthscales[i];
        r2 += z * z;
    }
    const double r = std::sqrt(r2);
    return h.signal_var * (1.0 + kSqrt5 * r + (5.0 / 3.0) * r2) *
           std::exp(-kSqrt5 * r);
}

GpObjective log_posterior_with_grad(
    const std::vector<std::vector<double>>& inputs,
    const std::vector<double>& targets, const GpPriors& priors,
    const GpHyperparams& hyper) {
    check_shapes(inputs, targets, priors, hyper);
    const PostCache c = eval_value(inputs, targets, priors, hyper);
    return grad_from_cache(c, priors, hyper);
}

GpSurrogate build_surrogate(const std::vector<std::vector<double>>& inputs,
                            const std::vector<double>& targets,
                            const GpPriors& priors,
                            const GpHyperparams& hyper) {
    check_shapes(inputs, targets, priors, hyper);
    if (targets.empty())
        throw std::invalid_argument("gp: surrogate needs training data");
    const Standardized st = standardize(targets);
    const PostCache c = eval_value(inputs, st.y, priors, hyper);
    GpSurrogate gp;
    gp.train_inputs = inputs;
    gp.train_targets = st.y;
    gp.hyper = hyper;
    gp.priors = priors;
    gp.target_shift = st.shift;
    gp.target_scale = st.scale;
    gp.jitter = c.jitter_abs;
    gp.fit_log_posterior = c.value;
    gp.chol_lower = c.llt.matrixL();
    gp.alpha = c.alpha;
    return gp;
}

GpSurrogate fit_map(const std::vector<std::vector<double>>& inputs,
                    const std::vector<double>& targets, const GpPriors& priors,
                    const GpFitConfig& cfg, Rng& rng,
                    const GpHyperparams* warm_start) {
    if (targets.size() < 2)
        throw std::invalid_argument("gp: fit needs at least 2 points");
    if (cfg.restarts < 1 || cfg.max_iters < 0)
        throw std::invalid_argument("gp: bad fit config");
    const int d = static_cast<int>(priors.lengthscales.size());

    // starting points drawn up front: the rng stream consumed by a fit does
    // not depend on the search path
    std::vector<Eigen::VectorXd> starts;
    starts.reserve(static_cast<std::size_t>(cfg.restarts));
    Eigen::VectorXd t0(d + 3);
    if (warm_start != nullptr) {
        t0 = pack(*warm_start);
    } else {
        for (int i = 0; i < d; ++i) t0[i] = priors.lengthscales[i].mu;
        t0[d] = priors.signal_var.mu;
        t0[d + 1] = priors.noise_var.mu;
        t0[d + 2] = 0.0;
    }
    starts.push_back(t0);
    std::normal_distribution<double> unit(0.0, 1.0);
    for (int s = 1; s < cfg.restarts; ++s) {
        Eigen::VectorXd t(d + 3);
        for (int i = 0; i < d; ++i)
            t[i] = priors.lengthscales[i].mu +
                   priors.lengthscales[i].sigma * unit(rng);
        t[d] = priors.signal_var.mu + priors.signal_var.sigma * unit(rng);
        t[d + 1] = priors.noise_var.mu + priors.noise_var.sigma * unit(rng);
        t[d + 2] = unit(rng);
        starts.push_back(std::move(t));
    }

    const Standardized st = standardize(targets);
    check_shapes(inputs, st.y, priors, unpack(starts.front()));

    // best-of by value, earliest restart on ties
    AscentResult best;
    for (const auto& start : starts) {
        AscentResult r = ascend(inputs, st.y, priors, start, cfg);
        if (r.ok && (!best.ok || r.value > best.value)) best = std::move(r);
    }
    if (!best.ok) throw GpError("gp: every restart failed to factorize");
    return build_surrogate(inputs, targets, priors, unpack(best.theta));
}

GpPrediction predict(const GpSurrogate& gp, const std::vector<double>& x) {
    if (x.size() != gp.hyper.lengthscales.size())
        throw std::invalid_argument("gp: query dimension mismatch");
    const int n = gp.size();
    Eigen::VectorXd ks(n);
    for (int i = 0; i < n; ++i) ks[i] = matern52(gp.train_inputs[i], x, gp.hyper);
    const double mean_std = gp.hyper.mean_const + ks.dot(gp.alpha);
    const Eigen::VectorXd v =
        gp.chol_lower.triangularView<Eigen::Lower>().solve(ks);
    double var_std = gp.hyper.signal_var - v.squaredNorm();
    if (var_std < 0.0) var_std = 0.0;
    return {gp.target_shift + gp.target_scale * mean_std,
            gp.target_scale * gp.target_scale * var_std};
}

}  // namespace gtbo
