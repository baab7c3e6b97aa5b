// bo.hpp
//
// The optimization phase that follows group testing: deduplicate the GT
// evaluations into a GP training set, put short length-scale priors on the
// flagged dimensions and long ones everywhere else, and loop a log-EI
// acquisition over the full box.
//
// The acquisition is single-point log-EI against the minimum predictive
// mean over the evaluated points (a noisy-robust plug-in incumbent).

#ifndef GTBO_BO_HPP
#define GTBO_BO_HPP

#include <optional>
#include <vector>

#include "gtbo/gp.hpp"
#include "gtbo/objective.hpp"
#include "gtbo/orchestrator.hpp"

namespace gtbo {

struct BoConfig {
    int budget = 100;                        // evaluations after GT
    LengthscalePrior active_prior{0.0, 1.0};
    LengthscalePrior inactive_prior{7.0, 1.0};
    int acq_restarts = 3;       // local refinements from the top candidates
    int acq_raw_samples = 512;  // Latin hypercube pool per iteration
    double dedup_tolerance = 1e-9;  // max-norm over active coordinates
    int first_fit_restarts = 3;
    int first_fit_iters = 200;
    int refit_iters = 100;  // single warm restart per refit

    void validate() const;
};

struct BoDataset {
    std::vector<std::vector<double>> points;
    std::vector<double> values;  // noisy observations
};

// one black-box evaluation plus the running minima up to and including it;
// incumbent_truth tracks the best true value among evaluations whose truth
// was recorded (reporting only, never visible to the algorithm)
struct IncumbentRow {
    int iteration = 0;  // 1-based over all evaluations in the trace
    Phase phase = Phase::Bo;
    std::vector<double> point;
    double y = 0.0;
    std::optional<double> truth;
    double incumbent_y = 0.0;
    std::optional<double> incumbent_truth;
};

using IncumbentTrace = std::vector<IncumbentRow>;

/// GT evaluations as a GP training set: the default replicates collapse to
/// one point carrying their mean, and any later point whose active-dimension
/// coordinates lie within tol (max-norm) of a kept point is dropped. With an
/// all-zero activity vector the comparison falls back to all coordinates.
BoDataset dedup_gt_data(const GtResult& gt, double tol);

/// active_prior where the dimension is flagged, inactive_prior elsewhere.
std::vector<LengthscalePrior> build_priors(
    const std::vector<std::uint8_t>& active_dims,
    const LengthscalePrior& active_prior,
    const LengthscalePrior& inactive_prior);

/// log EI(x) = log E[max(incumbent - Y, 0)] under the predictive normal,
/// with an asymptotic branch for deeply negative z and a floor at -745.
double log_expected_improvement(const GpSurrogate& gp,
                                const std::vector<double>& x,
                                double incumbent);

struct AcqResult {
    std::vector<double> point;
    double log_ei = 0.0;
    double incumbent = 0.0;  // plug-in incumbent used for the search
};

/// Latin hypercube pool plus Gaussian perturbations of the best training
/// point, then coordinate pattern search from the top candidates. The
/// incumbent is the minimum predictive mean over the training inputs.
AcqResult optimize_acquisition(const GpSurrogate& gp, const BoConfig& cfg,
                               Rng& rng);

/// The BO loop. Returns the incumbent trace over all evaluations: the GT
/// phase replayed from gt (truths unknown there), then one row per BO
/// evaluation. Surrogate fit failures retry from fresh starts once;
/// persistent failure ends the loop with a partial trace.
IncumbentTrace run_bo(const Objective& f, const GtResult& gt,
                      const BoConfig& cfg, Rng& rng,
                      const Recorder& recorder = {});

}  // namespace gtbo

#endif  // GTBO_BO_HPP
