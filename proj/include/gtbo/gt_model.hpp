// gt_model.hpp
//
// Core types of the group-testing posterior: binary activity particles,
// groups of perturbed dimensions, the two-Gaussian outcome model, weight
// updates, and an exact enumeration oracle for small dimension counts.

#ifndef GTBO_GT_MODEL_HPP
#define GTBO_GT_MODEL_HPP

#include <cstdint>
#include <vector>

#include "gtbo/common.hpp"

namespace gtbo {

using ActivityVector = std::vector<std::uint8_t>;

struct Group {
    std::vector<std::uint8_t> bits;  // length D, entries in {0,1}

    int dim() const { return static_cast<int>(bits.size()); }
    bool any() const {
        for (auto b : bits)
            if (b) return true;
        return false;
    }
    int count() const {
        int c = 0;
        for (auto b : bits) c += b;
        return c;
    }
    std::vector<int> members() const {
        std::vector<int> out;
        for (int i = 0; i < dim(); ++i)
            if (bits[i]) out.push_back(i);
        return out;
    }
    friend bool operator==(const Group& a, const Group& b) {
        return a.bits == b.bits;
    }
};

Group group_from_indices(int dim, const std::vector<int>& indices);

// Two-Gaussian outcome model: a test difference follows N(0, noise_var) when
// the group holds no active dimension and N(0, signal_var) otherwise.
struct NoiseModel {
    double noise_var = 0.0;   // sigma_n^2
    double signal_var = 0.0;  // sigma^2

    bool valid() const {
        return noise_var > 0.0 && signal_var >= noise_var;
    }
};

struct GtObservation {
    Group group;
    double z = 0.0;  // observed difference y(x_t) - f_hat(x_def)
    std::vector<double> point;
};

// Weighted particle approximation of the activity posterior. Particle bits
// are stored row-major in one flat array (particle k, dimension i at
// k * dim + i).
struct ActivityEnsemble {
    int dim = 0;
    int count = 0;  // M
    std::vector<std::uint8_t> bits;
    std::vector<double> weights;
    std::vector<double> prior_q;  // per-dimension prior activity probability

    std::uint8_t bit(int k, int i) const {
        return bits[static_cast<std::size_t>(k) * dim + i];
    }
    void set_bit(int k, int i, std::uint8_t v) {
        bits[static_cast<std::size_t>(k) * dim + i] = v;
    }
    const std::uint8_t* particle(int k) const {
        return bits.data() + static_cast<std::size_t>(k) * dim;
    }
    std::uint8_t* particle(int k) {
        return bits.data() + static_cast<std::size_t>(k) * dim;
    }
};

/// Deterministic core of point creation: x_def plus the given offsets on the
/// set bits (in dimension order), clamped to [0,1]. offsets.size() must
/// equal the number of set bits; an all-zero group returns x_def.
std::vector<double> perturb_with_offsets(const Group& g,
                                         const std::vector<double>& x_def,
                                         const std::vector<double>& offsets);

/// x_def plus a Uniform(-0.5, 0.5) offset on each group dimension, clamped
/// to [0,1]. Offsets are drawn in dimension order for the set bits only.
/// Throws on an empty group.
std::vector<double> make_perturbed_point(const Group& g,
                                         const std::vector<double>& x_def,
                                         Rng& rng);

/// Posterior probability that the group holds at least one active dimension:
/// sum of weights of particles overlapping g.
double group_active_prob(const ActivityEnsemble& ens, const Group& g);

/// log N(z; 0, signal_var) if contains_active else log N(z; 0, noise_var).
double outcome_loglik(double z, bool contains_active, const NoiseModel& nm);

/// Bayes update in place: each weight is multiplied by the outcome
/// likelihood of its particle's group indicator, then renormalized.
/// Accumulation happens in log space. Throws if every weight vanishes.
void update_weights(ActivityEnsemble& ens, const GtObservation& obs,
                    const NoiseModel& nm);

/// M particles drawn i.i.d. from the product-Bernoulli prior q, uniform
/// weights.
ActivityEnsemble init_ensemble(int dim, int count,
                               const std::vector<double>& q, Rng& rng);

/// Per-dimension posterior activity probabilities of the ensemble.
std::vector<double> marginals(const ActivityEnsemble& ens);

// Full posterior over all 2^D activity states; the SMC correctness oracle.
struct ExactPosterior {
    std::vector<double> probs;      // indexed by bitmask, dim 0 = lowest bit
    std::vector<double> marginals;  // length D
};

/// Exact enumeration of the posterior for D <= 20 (capacity guard).
ExactPosterior exact_posterior(int dim, const std::vector<double>& q,
                               const std::vector<GtObservation>& history,
                               const NoiseModel& nm);

}  // namespace gtbo

#endif  // GTBO_GT_MODEL_HPP
