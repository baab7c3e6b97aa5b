// smc.hpp
//
// Resample-move machinery for the activity ensemble: ESS monitoring,
// systematic resampling, and a Gibbs kernel whose stationary distribution is
// the current exact posterior over activity vectors.

#ifndef GTBO_SMC_HPP
#define GTBO_SMC_HPP

#include "gtbo/gt_model.hpp"

namespace gtbo {

struct SmcConfig {
    double ess_threshold_fraction = 0.5;  // resample-move when ESS <= frac * M
    int gibbs_sweeps = 1;
    int move_dims_per_sweep = 0;  // 0 = all dimensions each sweep
};

/// 1 / sum of squared weights.
double effective_sample_size(const ActivityEnsemble& ens);

/// Low-variance resampling at stratified positions (k + u) / M. Replaces the
/// particle set with `target_count` draws (0 keeps the current count) and
/// resets weights to uniform.
void systematic_resample(ActivityEnsemble& ens, Rng& rng,
                         int target_count = 0);

/// Reference full conditional: log-odds of particle bit i being 1 given the
/// other bits, the prior, and the full observation history. Recomputed from
/// scratch; the Gibbs kernel reproduces this via incremental group counts.
double conditional_logit(const std::uint8_t* particle, int dim, int i,
                         double q_i,
                         const std::vector<GtObservation>& history,
                         const NoiseModel& nm);

/// One or more full-conditional Gibbs sweeps over every particle. Expects
/// uniform weights (call after resampling); the kernel leaves the posterior
/// invariant so weights stay uniform. Each particle moves under its own
/// RNG substream, making the result independent of the worker count.
void gibbs_move(ActivityEnsemble& ens,
                const std::vector<GtObservation>& history,
                const NoiseModel& nm, const SmcConfig& cfg, Rng& rng);

/// Resample + move when the ESS has decayed below the configured fraction
/// of M. Returns whether a resample-move happened.
bool maybe_resample_move(ActivityEnsemble& ens,
                         const std::vector<GtObservation>& history,
                         const NoiseModel& nm, const SmcConfig& cfg,
                         Rng& rng);

}  // namespace gtbo

#endif  // GTBO_SMC_HPP
