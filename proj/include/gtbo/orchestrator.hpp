// The group-testing phase end to end: probe the variances, then iterate
// select-evaluate-update-rejuvenate until the posterior marginals settle
// into the convergence band or the test budget runs out.

#ifndef GTBO_ORCHESTRATOR_HPP
#define GTBO_ORCHESTRATOR_HPP

#include <optional>
#include <string>
#include <vector>

#include "gtbo/common.hpp"
#include "gtbo/gt_model.hpp"
#include "gtbo/objective.hpp"
#include "gtbo/selection.hpp"
#include "gtbo/smc.hpp"
#include "gtbo/variance.hpp"

namespace gtbo {

struct GtConfig {
    int max_tests = 300;
    int particles = 10000;
    double prior_q = 0.05;
    double eta = 0.5;        // classification threshold on final marginals
    double c_lower = 5e-3;   // convergence band [0, c_lower] u [c_upper, 1]
    double c_upper = 0.9;
    int batch_size = 5;      // overrides selection.batch_size
    int n_def = 5;
    SelectionConfig selection;
    SmcConfig smc;

    void validate() const;
};

struct GtResult {
    std::vector<std::uint8_t> active_dims;          // gamma
    std::vector<std::vector<double>> marginals_history;  // one row per test
    std::vector<GtObservation> observations;        // the tested groups
    NoiseModel noise_model;
    VarianceProbeResult probe;
    std::optional<int> converged_at;                // tests used at convergence
    int evaluations_used = 0;
    std::vector<std::string> warnings;
    double wallclock_seconds = 0.0;
};

/// True iff every marginal lies in [0, c_lower] or [c_upper, 1], inclusive.
bool is_converged(const std::vector<double>& marginals, double c_lower,
                  double c_upper);

/// Runs variance probing and the full testing loop. Convergence is checked
/// after each batch once at least 5 tests ran (an all-prior ensemble already
/// satisfies the lower band). Budget is a hard cap: the final batch is
/// truncated to the remaining tests. Each evaluation is passed to `recorder`
/// when one is given.
GtResult run_group_testing(const Objective& f, const std::vector<double>& x_def,
                           const GtConfig& cfg, Rng& rng,
                           const Recorder& recorder = {});

}  // namespace gtbo

#endif  // GTBO_ORCHESTRATOR_HPP
