// bo.cpp

#include "gtbo/bo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace gtbo {

namespace {

constexpr double kLogEiFloor = -745.0;

double norm_cdf(double z) { return 0.5 * std::erfc(-z * M_SQRT1_2); }

// log(z Phi(z) + phi(z)); the direct form cancels for deeply negative z, so
// switch to the Mills-ratio series there (truncation below 1e-6 relative at
// the branch point)
double log_ei_h(double z) {
    if (z < -10.0) {
        const double z2 = z * z;
        return -0.5 * (kLog2Pi + z2) - 2.0 * std::log(-z) +
               std::log1p(-3.0 / z2 + 15.0 / (z2 * z2) -
                          105.0 / (z2 * z2 * z2) +
                          945.0 / (z2 * z2 * z2 * z2));
    }
    const double phi = std::exp(-0.5 * z * z - 0.5 * kLog2Pi);
    return std::log(z * norm_cdf(z) + phi);
}

double log_ei_from_moments(double mean, double sd, double incumbent) {
    if (!(sd > 0.0)) {
        const double improvement = incumbent - mean;
        return improvement > 0.0
                   ? std::max(std::log(improvement), kLogEiFloor)
                   : kLogEiFloor;
    }
    const double z = (incumbent - mean) / sd;
    return std::max(std::log(sd) + log_ei_h(z), kLogEiFloor);
}

std::vector<std::vector<double>> latin_hypercube(int n, int d, Rng& rng) {
    std::vector<std::vector<double>> pts(
        static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(d)));
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int j = 0; j < d; ++j) {
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        for (int i = 0; i < n; ++i)
            pts[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                (perm[static_cast<std::size_t>(i)] + u01(rng)) / n;
    }
    return pts;
}

// minimum predictive mean over the training inputs, earliest on ties
struct PlugIn {
    double incumbent = std::numeric_limits<double>::infinity();
    std::vector<double> center;
};

PlugIn plug_in_incumbent(const GpSurrogate& gp) {
    PlugIn p;
    for (const auto& x : gp.train_inputs) {
        const double m = predict(gp, x).mean;
        if (m < p.incumbent) {
            p.incumbent = m;
            p.center = x;
        }
    }
    return p;
}

// coordinate pattern search: sweep the coordinates at the current step,
// keeping the first improving move per coordinate; halve the step after a
// sweep without improvement
std::vector<double> pattern_search(const GpSurrogate& gp, double incumbent,
                                   std::vector<double> x) {
    double best = log_expected_improvement(gp, x, incumbent);
    double step = 0.25;
    while (step >= 1e-4) {
        bool improved = false;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double orig = x[i];
            for (double dir : {1.0, -1.0}) {
                const double cand = std::clamp(orig + dir * step, 0.0, 1.0);
                if (cand == orig) continue;
                x[i] = cand;
                const double v = log_expected_improvement(gp, x, incumbent);
                if (v > best) {
                    best = v;
                    improved = true;
                    break;
                }
                x[i] = orig;
            }
        }
        if (!improved) step *= 0.5;
    }
    return x;
}

double population_variance(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    const double mean =
        std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double var = 0.0;
    for (double y : v) var += (y - mean) * (y - mean);
    return var / static_cast<double>(v.size());
}

}  // namespace

void BoConfig::validate() const {
    if (budget < 0)
        throw std::invalid_argument("bo: budget must be nonnegative");
    if (acq_restarts < 1)
        throw std::invalid_argument("bo: acq_restarts must be positive");
    if (acq_raw_samples < 1)
        throw std::invalid_argument("bo: acq_raw_samples must be positive");
    if (dedup_tolerance < 0.0)
        throw std::invalid_argument("bo: dedup tolerance must be nonnegative");
    if (!(active_prior.sigma > 0.0) || !(inactive_prior.sigma > 0.0))
        throw std::invalid_argument("bo: prior sigma must be positive");
    if (first_fit_restarts < 1 || first_fit_iters < 0 || refit_iters < 0)
        throw std::invalid_argument("bo: bad fit schedule");
}

BoDataset dedup_gt_data(const GtResult& gt, double tol) {
    if (tol < 0.0)
        throw std::invalid_argument("bo: dedup tolerance must be nonnegative");

    // evaluation order: the collapsed default, the probe bins, the GT tests
    std::vector<std::pair<std::vector<double>, double>> cands;
    bool have_default = false;
    for (const auto& po : gt.probe.probe_observations) {
        if (po.bin < 0) {
            if (!have_default) {
                cands.emplace_back(po.point, gt.probe.default_estimate);
                have_default = true;
            }
        } else {
            cands.emplace_back(po.point, po.y);
        }
    }
    for (const auto& ob : gt.observations)
        cands.emplace_back(ob.point, ob.z + gt.probe.default_estimate);

    std::vector<int> cmp;
    for (std::size_t i = 0; i < gt.active_dims.size(); ++i)
        if (gt.active_dims[i]) cmp.push_back(static_cast<int>(i));
    if (cmp.empty() && !cands.empty()) {
        // nothing flagged: compare whole points instead of collapsing
        // everything onto the default
        cmp.resize(cands.front().first.size());
        std::iota(cmp.begin(), cmp.end(), 0);
    }

    BoDataset out;
    for (auto& [x, y] : cands) {
        bool dup = false;
        for (const auto& kept : out.points) {
            bool close = true;
            for (int i : cmp) {
                if (std::abs(x[static_cast<std::size_t>(i)] -
                             kept[static_cast<std::size_t>(i)]) > tol) {
                    close = false;
                    break;
                }
            }
            if (close) {
                dup = true;
                break;
            }
        }
        if (!dup) {
            out.points.push_back(std::move(x));
            out.values.push_back(y);
        }
    }
    return out;
}

std::vector<LengthscalePrior> build_priors(
    const std::vector<std::uint8_t>& active_dims,
    const LengthscalePrior& active_prior,
    const LengthscalePrior& inactive_prior) {
    std::vector<LengthscalePrior> out;
    out.reserve(active_dims.size());
    for (auto a : active_dims) out.push_back(a ? active_prior : inactive_prior);
    return out;
}

double log_expected_improvement(const GpSurrogate& gp,
                                const std::vector<double>& x,
                                double incumbent) {
    const GpPrediction p = predict(gp, x);
    return log_ei_from_moments(p.mean, std::sqrt(std::max(p.variance, 0.0)),
                               incumbent);
}

AcqResult optimize_acquisition(const GpSurrogate& gp, const BoConfig& cfg,
                               Rng& rng) {
    cfg.validate();
    const int d = gp.dim();
    const PlugIn pi = plug_in_incumbent(gp);

    auto pool = latin_hypercube(cfg.acq_raw_samples, d, rng);
    std::normal_distribution<double> unit(0.0, 1.0);
    if (!pi.center.empty()) {
        for (double scale : {0.1, 0.01, 0.001}) {
            for (int k = 0; k < 32; ++k) {
                auto x = pi.center;
                for (double& v : x)
                    v = std::clamp(v + scale * unit(rng), 0.0, 1.0);
                pool.push_back(std::move(x));
            }
        }
    }

    std::vector<double> score(pool.size());
    parallel_for(pool.size(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i)
            score[i] = log_expected_improvement(gp, pool[i], pi.incumbent);
    });

    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) {
                         return score[a] > score[b];
                     });

    AcqResult best;
    best.incumbent = pi.incumbent;
    best.log_ei = -std::numeric_limits<double>::infinity();
    const std::size_t starts =
        std::min<std::size_t>(static_cast<std::size_t>(cfg.acq_restarts),
                              order.size());
    for (std::size_t s = 0; s < starts; ++s) {
        auto refined = pattern_search(gp, pi.incumbent, pool[order[s]]);
        const double v = log_expected_improvement(gp, refined, pi.incumbent);
        if (v > best.log_ei) {
            best.log_ei = v;
            best.point = std::move(refined);
        }
    }
    return best;
}

IncumbentTrace run_bo(const Objective& f, const GtResult& gt,
                      const BoConfig& cfg, Rng& rng,
                      const Recorder& recorder) {
    cfg.validate();

    IncumbentTrace trace;
    int iter = 0;
    double inc_y = std::numeric_limits<double>::infinity();
    std::optional<double> inc_truth;
    auto push_row = [&](Phase phase, const std::vector<double>& x, double y,
                        const std::optional<double>& truth) {
        ++iter;
        inc_y = std::min(inc_y, y);
        if (truth && (!inc_truth || *truth < *inc_truth)) inc_truth = *truth;
        trace.push_back({iter, phase, x, y, truth, inc_y, inc_truth});
    };

    // replay the GT phase; its truths were recorded live by the caller
    for (const auto& po : gt.probe.probe_observations)
        push_row(po.bin < 0 ? Phase::ProbeDefault : Phase::ProbeBin, po.point,
                 po.y, std::nullopt);
    for (const auto& ob : gt.observations)
        push_row(Phase::GtTest, ob.point, ob.z + gt.probe.default_estimate,
                 std::nullopt);

    BoDataset data = dedup_gt_data(gt, cfg.dedup_tolerance);

    int d = static_cast<int>(gt.active_dims.size());
    if (d == 0 && !data.points.empty())
        d = static_cast<int>(data.points.front().size());
    if (d == 0) throw std::invalid_argument("bo: cannot infer dimension");

    // a starved dataset gets space-filling seeds out of the BO budget
    int spent = 0;
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    while (static_cast<int>(data.points.size()) < 2 && spent < cfg.budget) {
        std::vector<double> x(static_cast<std::size_t>(d));
        for (double& v : x) v = u01(rng);
        const EvalOutcome out = f(x);
        push_row(Phase::Bo, x, out.y, out.truth);
        if (recorder) recorder({Phase::Bo, iter, x, out.y, out.truth});
        data.points.push_back(std::move(x));
        data.values.push_back(out.y);
        ++spent;
    }
    if (static_cast<int>(data.points.size()) < 2) return trace;

    GpPriors priors;
    priors.lengthscales =
        build_priors(gt.active_dims, cfg.active_prior, cfg.inactive_prior);
    if (priors.lengthscales.empty())
        priors.lengthscales.assign(static_cast<std::size_t>(d),
                                   cfg.inactive_prior);

    // the GT noise estimate, moved to the standardized target scale, seeds
    // the likelihood noise
    GpHyperparams init;
    init.lengthscales.reserve(priors.lengthscales.size());
    for (const auto& p : priors.lengthscales)
        init.lengthscales.push_back(std::exp(p.mu));
    init.signal_var = 1.0;
    init.noise_var = std::clamp(
        gt.noise_model.noise_var /
            std::max(population_variance(data.values), 1e-12),
        1e-9, 10.0);
    init.mean_const = 0.0;

    GpFitConfig first_cfg;
    first_cfg.restarts = cfg.first_fit_restarts;
    first_cfg.max_iters = cfg.first_fit_iters;
    GpFitConfig warm_cfg;
    warm_cfg.restarts = 1;
    warm_cfg.max_iters = cfg.refit_iters;

    bool have_fit = false;
    GpHyperparams prev;
    for (int b = spent; b < cfg.budget; ++b) {
        GpSurrogate gp;
        bool fitted = false;
        try {
            gp = have_fit
                     ? fit_map(data.points, data.values, priors, warm_cfg,
                               rng, &prev)
                     : fit_map(data.points, data.values, priors, first_cfg,
                               rng, &init);
            fitted = true;
        } catch (const GpError&) {
            try {
                gp = fit_map(data.points, data.values, priors, first_cfg, rng);
                fitted = true;
            } catch (const GpError&) {
            }
        }
        if (!fitted) break;  // partial trace
        have_fit = true;
        prev = gp.hyper;

        const AcqResult acq = optimize_acquisition(gp, cfg, rng);
        const EvalOutcome out = f(acq.point);
        push_row(Phase::Bo, acq.point, out.y, out.truth);
        if (recorder) recorder({Phase::Bo, iter, acq.point, out.y, out.truth});
        data.points.push_back(acq.point);
        data.values.push_back(out.y);
    }
    return trace;
}

}  // namespace gtbo
