// orchestrator.cpp

#include "gtbo/orchestrator.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace gtbo {

const char* phase_name(Phase p) {
    switch (p) {
        case Phase::ProbeDefault: return "probe_default";
        case Phase::ProbeBin: return "probe_bin";
        case Phase::GtTest: return "gt_test";
        case Phase::Bo: return "bo";
        case Phase::Random: return "random";
    }
    return "?";
}

void GtConfig::validate() const {
    if (max_tests < 1)
        throw std::invalid_argument("GtConfig: test budget exhausted before any test");
    if (particles < 1) throw std::invalid_argument("GtConfig: particles < 1");
    if (!(prior_q > 0.0) || !(prior_q < 1.0))
        throw std::invalid_argument("GtConfig: prior_q outside (0,1)");
    if (!(c_lower < c_upper))
        throw std::invalid_argument("GtConfig: c_lower must be below c_upper");
    if (!(c_lower >= 0.0) || !(c_upper <= 1.0))
        throw std::invalid_argument("GtConfig: convergence band outside [0,1]");
    if (!(eta > c_lower) || !(eta <= 1.0))
        throw std::invalid_argument("GtConfig: eta outside (c_lower, 1]");
    if (batch_size < 1) throw std::invalid_argument("GtConfig: batch_size < 1");
    if (n_def < 2) throw std::invalid_argument("GtConfig: n_def < 2");
}

bool is_converged(const std::vector<double>& marginals, double c_lower,
                  double c_upper) {
    for (double m : marginals)
        if (m > c_lower && m < c_upper) return false;
    return true;
}

GtResult run_group_testing(const Objective& f, const std::vector<double>& x_def,
                           const GtConfig& cfg, Rng& rng,
                           const Recorder& recorder) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const int dim = static_cast<int>(x_def.size());

    GtResult res;

    // the probe issues n_def default replicates followed by one evaluation
    // per bin; the recording shim relies on that order
    int probe_calls = 0;
    int gt_iteration = 0;
    bool in_probe = true;
    Objective wrapped = [&](const std::vector<double>& x) {
        EvalOutcome out = f(x);
        ++res.evaluations_used;
        if (recorder) {
            EvalRecord rec;
            rec.phase = in_probe ? (probe_calls < cfg.n_def ? Phase::ProbeDefault
                                                            : Phase::ProbeBin)
                                 : Phase::GtTest;
            rec.iteration = in_probe ? 0 : gt_iteration;
            rec.point = x;
            rec.y = out.y;
            rec.truth = out.truth;
            recorder(rec);
        }
        if (in_probe) ++probe_calls;
        return out;
    };

    res.probe = estimate_variances(wrapped, x_def, cfg.n_def, rng);
    res.noise_model = NoiseModel{res.probe.noise_var, res.probe.signal_var};
    in_probe = false;

    ActivityEnsemble ens = init_ensemble(
        dim, cfg.particles, std::vector<double>(dim, cfg.prior_q), rng);

    SelectionConfig sel = cfg.selection;
    sel.batch_size = cfg.batch_size;

    int tests = 0;
    while (tests < cfg.max_tests) {
        sel.batch_size = std::min(cfg.batch_size, cfg.max_tests - tests);
        std::vector<Group> batch;
        try {
            batch = select_batch(ens, res.noise_model, sel, rng);
        } catch (const SelectionFailure&) {
            // fall back to one random singleton so the phase can continue
            std::uniform_int_distribution<int> pick(0, dim - 1);
            batch.push_back(group_from_indices(dim, {pick(rng)}));
            res.warnings.push_back("selection failed at test " +
                                   std::to_string(tests + 1) +
                                   "; tested a random singleton instead");
        }
        for (const Group& g : batch) {
            ++gt_iteration;
            const std::vector<double> x = make_perturbed_point(g, x_def, rng);
            const double z = wrapped(x).y - res.probe.default_estimate;
            res.observations.push_back({g, z, x});
            update_weights(ens, res.observations.back(), res.noise_model);
            res.marginals_history.push_back(marginals(ens));
            ++tests;
        }
        // keep the last row in step with any rejuvenation, so the recorded
        // history ends exactly at the state gamma is read from
        if (maybe_resample_move(ens, res.observations, res.noise_model,
                                cfg.smc, rng))
            res.marginals_history.back() = marginals(ens);
        if (tests >= 5 && is_converged(res.marginals_history.back(),
                                       cfg.c_lower, cfg.c_upper)) {
            res.converged_at = tests;
            break;
        }
    }

    const std::vector<double>& final_marg = res.marginals_history.back();
    res.active_dims.resize(dim);
    int flagged = 0;
    for (int i = 0; i < dim; ++i) {
        res.active_dims[i] = final_marg[i] >= cfg.eta ? 1 : 0;
        flagged += res.active_dims[i];
    }
    if (flagged > static_cast<int>(std::sqrt(double(dim))))
        res.warnings.push_back(
            "flagged " + std::to_string(flagged) +
            " active dimensions, more than sqrt(D); the variance probe "
            "assumes at most sqrt(D) active");

    res.wallclock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    return res;
}

}  // namespace gtbo
