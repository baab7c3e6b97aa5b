// selection.hpp
//
// Information-driven choice of the next test groups: Monte-Carlo entropy of
// the two-component Gaussian outcome mixture, mutual information between a
// group's outcome and the activity vector, greedy forward-backward group
// construction from multiple seeds, and batched selection with exclusions.

#ifndef GTBO_SELECTION_HPP
#define GTBO_SELECTION_HPP

#include <memory>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include "gtbo/gt_model.hpp"

namespace gtbo {

struct SelectionConfig {
    int n_seed_groups = 3;
    int max_group_size = 0;  // 0 = ceil(D / 2)
    int mc_samples = 512;          // entropy samples during the greedy search
    int mc_samples_final = 4096;   // entropy samples for the final ranking
    int batch_size = 5;
    double near_optimal_fraction = 0.9;

    int resolved_max_group_size(int dim) const {
        return max_group_size > 0 ? max_group_size : (dim + 1) / 2;
    }
};

struct MiEstimate {
    double value = 0.0;  // nats, clamped at 0
    int mc_samples = 0;
};

using GroupSet = std::set<std::vector<std::uint8_t>>;

struct SelectionFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Monte-Carlo estimate of the differential entropy of the outcome mixture
/// p_active * N(0, signal_var) + (1 - p_active) * N(0, noise_var).
double mixture_entropy_mc(double p_active, const NoiseModel& nm, int n,
                          Rng& rng);

/// I(xi, Z) for the group: mixture entropy at p_hat minus the expected
/// conditional Gaussian entropy. Clamped at 0 (small negatives are Monte
/// Carlo error).
MiEstimate mutual_information(const ActivityEnsemble& ens, const Group& g,
                              const NoiseModel& nm, int n, Rng& rng);

// One selection round's common random numbers: a fixed Monte-Carlo sample
// set reused for every candidate group, so that MI comparisons during the
// greedy search are rank-stable. MI values are memoized per (p, n).
class MiContext {
public:
    MiContext(const NoiseModel& nm, int n_max, Rng& rng);

    double entropy(double p, int n) const;
    double mi(double p, int n) const;  // memoized; raw (can be negative)
    int max_samples() const { return n_max_; }
    const NoiseModel& noise_model() const { return nm_; }

private:
    NoiseModel nm_;
    int n_max_;
    std::vector<double> u_;
    // per-sample mixture-component densities at the two branch values
    std::vector<double> da_s_, da_n_, db_s_, db_n_;
    double h_cond_s_, h_cond_n_;
    mutable std::unordered_map<std::uint64_t, double> memo_;
};

/// One greedy climb from an explicit start group: alternate a forward phase
/// (add the dimension with the greatest MI gain) and a backward phase
/// (remove the dimension whose removal gains the most) until neither moves.
/// Groups in `excluded` are never returned and never passed through. The
/// noise model is the context's.
Group forward_backward_from(const ActivityEnsemble& ens,
                            const SelectionConfig& cfg,
                            const GroupSet& excluded, const Group& start,
                            const MiContext& ctx);

/// Multi-start search: seeds drawn from the prior, a posterior particle, and
/// the thresholded marginals (further seeds from the marginals); climbs each
/// and returns the highest-MI non-excluded result. Throws SelectionFailure
/// when every climb ends excluded.
Group forward_backward(const ActivityEnsemble& ens, const NoiseModel& nm,
                       const SelectionConfig& cfg, const GroupSet& excluded,
                       Rng& rng);
Group forward_backward(const ActivityEnsemble& ens,
                       const SelectionConfig& cfg, const GroupSet& excluded,
                       Rng& rng, const MiContext& ctx);

/// Up to batch_size pairwise-distinct groups, re-running the search with an
/// accumulated exclusion set; stops early once a group's MI drops below
/// near_optimal_fraction of the first group's. Propagates SelectionFailure
/// only from the first search.
std::vector<Group> select_batch(const ActivityEnsemble& ens,
                                const NoiseModel& nm,
                                const SelectionConfig& cfg, Rng& rng);

}  // namespace gtbo

#endif  // GTBO_SELECTION_HPP
