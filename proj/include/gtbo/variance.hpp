// Probe-phase estimation of the outcome-model variances: evaluate the
// default point a few times, perturb one bin of dimensions at a time, and
// split the observed differences into a quiet majority (noise) and a loud
// minority (signal).

#ifndef GTBO_VARIANCE_HPP
#define GTBO_VARIANCE_HPP

#include <vector>

#include "gtbo/common.hpp"
#include "gtbo/objective.hpp"

namespace gtbo {

struct ProbeObservation {
    int bin = -1;  // -1 for default-point replicates, else the bin index
    std::vector<double> point;
    double y = 0.0;
};

struct VarianceProbeResult {
    double noise_var = 0.0;
    double signal_var = 0.0;
    double default_estimate = 0.0;
    std::vector<ProbeObservation> probe_observations;
};

// Consistency constants for second moments over |z|-ranked splits of a
// standard normal sample: `lower` is E[Z^2 | |Z| <= c] with
// P(|Z| <= c) = lower_fraction, `upper` the complementary tail moment.
// They satisfy lower*frac + upper*(1-frac) = 1.
struct SplitConsistency {
    double lower = 1.0;
    double upper = 1.0;
};
SplitConsistency split_consistency(double lower_fraction);

// Mean of n_def noisy evaluations at the default point. n_def >= 2.
double estimate_default(const Objective& f, const std::vector<double>& x_def,
                        int n_def, Rng& rng);

// Full probe: n_def default replicates, then one evaluation per bin with all
// of the bin's dimensions perturbed at once. Differences from the default
// estimate are ranked by magnitude (ties by bin index); the noise variance
// comes from the 2*floor(sqrt(D)) smallest, the signal variance from the
// floor(sqrt(D)) largest. Both are debiased second moments about zero and
// estimate the variance of a full difference z = y(x) - f_hat(x_def),
// including the default-mean noise. Requires D >= 4.
VarianceProbeResult estimate_variances(const Objective& f,
                                       const std::vector<double>& x_def,
                                       int n_def, Rng& rng);

}  // namespace gtbo

#endif  // GTBO_VARIANCE_HPP
