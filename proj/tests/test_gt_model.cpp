#include "doctest.h"
#include "gtbo/gt_model.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

using namespace gtbo;

namespace {

ActivityEnsemble two_particle_ensemble(int dim, const std::vector<int>& on1,
                                       const std::vector<int>& on2, double w1,
                                       double w2) {
    ActivityEnsemble ens;
    ens.dim = dim;
    ens.count = 2;
    ens.bits.assign(2 * dim, 0);
    ens.weights = {w1, w2};
    ens.prior_q.assign(dim, 0.5);
    for (int i : on1) ens.set_bit(0, i, 1);
    for (int i : on2) ens.set_bit(1, i, 1);
    return ens;
}

}  // namespace

TEST_SUITE_BEGIN("gt_model");

TEST_CASE("perturbation with explicit offsets") {
    std::vector<double> x_def(4, 0.5);

    Group zeros = group_from_indices(4, {});
    CHECK(perturb_with_offsets(zeros, x_def, {}) == x_def);

    Group e1 = group_from_indices(4, {0});
    auto p = perturb_with_offsets(e1, x_def, {0.3});
    CHECK(p[0] == doctest::Approx(0.8));
    CHECK(p[1] == 0.5);
    CHECK(p[2] == 0.5);
    CHECK(p[3] == 0.5);

    // clamping keeps the point in the box
    auto q = perturb_with_offsets(e1, {0.9, 0.5, 0.5, 0.5}, {0.4});
    CHECK(q[0] == 1.0);
}

TEST_CASE("sampled perturbation stays in range and only moves group dims") {
    std::vector<double> x_def(10, 0.5);
    Group all = group_from_indices(10, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
    Rng rng(3);
    for (int rep = 0; rep < 50; ++rep) {
        auto p = make_perturbed_point(all, x_def, rng);
        for (double v : p) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
            CHECK(std::abs(v - 0.5) < 0.5);
        }
    }
    Group sub = group_from_indices(10, {2, 7});
    auto p = make_perturbed_point(sub, x_def, rng);
    for (int i = 0; i < 10; ++i)
        if (i != 2 && i != 7) CHECK(p[i] == 0.5);

    Group empty = group_from_indices(10, {});
    CHECK_THROWS_AS(make_perturbed_point(empty, x_def, rng),
                    std::invalid_argument);
}

TEST_CASE("group_active_prob basics") {
    SUBCASE("all particles all-zero") {
        auto ens = two_particle_ensemble(5, {}, {}, 0.5, 0.5);
        CHECK(group_active_prob(ens, group_from_indices(5, {0, 1, 2})) == 0.0);
    }
    SUBCASE("weighted sum over overlapping particles") {
        auto ens = two_particle_ensemble(5, {1}, {}, 0.4, 0.6);
        CHECK(group_active_prob(ens, group_from_indices(5, {1, 3})) ==
              doctest::Approx(0.4));
    }
    SUBCASE("random ensemble matches a brute-force recount") {
        Rng rng(17);
        auto ens = init_ensemble(8, 64, std::vector<double>(8, 0.3), rng);
        std::uniform_real_distribution<double> unif(0.1, 1.0);
        double total = 0.0;
        for (auto& w : ens.weights) {
            w = unif(rng);
            total += w;
        }
        for (auto& w : ens.weights) w /= total;
        Group g = group_from_indices(8, {0, 4, 5});
        double expect = 0.0;
        for (int k = 0; k < ens.count; ++k) {
            bool hit = ens.bit(k, 0) || ens.bit(k, 4) || ens.bit(k, 5);
            if (hit) expect += ens.weights[k];
        }
        CHECK(group_active_prob(ens, g) == doctest::Approx(expect).epsilon(1e-14));
    }
    SUBCASE("invariant under joint permutation of particles and weights") {
        Rng rng(23);
        auto ens = init_ensemble(6, 32, std::vector<double>(6, 0.4), rng);
        std::uniform_real_distribution<double> unif(0.1, 1.0);
        double total = 0.0;
        for (auto& w : ens.weights) {
            w = unif(rng);
            total += w;
        }
        for (auto& w : ens.weights) w /= total;
        Group g = group_from_indices(6, {1, 2});
        double before = group_active_prob(ens, g);

        ActivityEnsemble rev = ens;
        for (int k = 0; k < ens.count; ++k) {
            rev.weights[k] = ens.weights[ens.count - 1 - k];
            for (int i = 0; i < 6; ++i)
                rev.set_bit(k, i, ens.bit(ens.count - 1 - k, i));
        }
        CHECK(group_active_prob(rev, g) == doctest::Approx(before).epsilon(1e-14));
    }
}

TEST_CASE("outcome log-likelihoods") {
    NoiseModel nm{1.0, 4.0};  // noise std 1, signal std 2
    CHECK(outcome_loglik(0.0, false, nm) ==
          doctest::Approx(-0.9189385332046727).epsilon(1e-12));
    // density ratio inactive/active at z=0 equals sigma/sigma_n = 2
    double ratio = std::exp(outcome_loglik(0.0, false, nm) -
                            outcome_loglik(0.0, true, nm));
    CHECK(ratio == doctest::Approx(2.0).epsilon(1e-12));
    // tail dominance of the wider component
    CHECK(outcome_loglik(8.0, true, nm) > outcome_loglik(8.0, false, nm));
}

TEST_CASE("weight update") {
    NoiseModel nm{1.0, 4.0};
    SUBCASE("two-particle posterior at z=0") {
        auto ens = two_particle_ensemble(3, {}, {1}, 0.5, 0.5);
        GtObservation obs{group_from_indices(3, {1}), 0.0, {}};
        update_weights(ens, obs, nm);
        CHECK(ens.weights[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
        CHECK(ens.weights[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
        CHECK(ens.weights[0] + ens.weights[1] == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("identical variances leave weights unchanged") {
        NoiseModel flat{1.0, 1.0};
        auto ens = two_particle_ensemble(3, {}, {1}, 0.7, 0.3);
        GtObservation obs{group_from_indices(3, {1}), 1.3, {}};
        update_weights(ens, obs, flat);
        CHECK(ens.weights[0] == doctest::Approx(0.7).epsilon(1e-12));
        CHECK(ens.weights[1] == doctest::Approx(0.3).epsilon(1e-12));
    }
    SUBCASE("constant group indicator leaves weights unchanged") {
        auto ens = two_particle_ensemble(3, {0}, {0, 2}, 0.2, 0.8);
        GtObservation obs{group_from_indices(3, {0}), 2.5, {}};
        update_weights(ens, obs, nm);
        CHECK(ens.weights[0] == doctest::Approx(0.2).epsilon(1e-12));
        CHECK(ens.weights[1] == doctest::Approx(0.8).epsilon(1e-12));
    }
    SUBCASE("particle bits unchanged, simplex preserved") {
        Rng rng(5);
        auto ens = init_ensemble(6, 100, std::vector<double>(6, 0.2), rng);
        auto bits_before = ens.bits;
        GtObservation obs{group_from_indices(6, {0, 3}), 1.7, {}};
        update_weights(ens, obs, nm);
        CHECK(ens.bits == bits_before);
        double sum = std::accumulate(ens.weights.begin(), ens.weights.end(), 0.0);
        CHECK(std::abs(sum - 1.0) < 1e-12);
        for (double w : ens.weights) CHECK(w >= 0.0);
    }
    SUBCASE("fully degenerate weights are rejected") {
        auto ens = two_particle_ensemble(3, {}, {1}, 0.0, 0.0);
        GtObservation obs{group_from_indices(3, {1}), 0.0, {}};
        CHECK_THROWS_AS(update_weights(ens, obs, nm), std::runtime_error);
    }
}

TEST_CASE("ensemble initialization") {
    SUBCASE("near-zero prior gives all-zero particles") {
        Rng rng(1);
        auto ens = init_ensemble(20, 200, std::vector<double>(20, 1e-12), rng);
        int total = 0;
        for (auto b : ens.bits) total += b;
        CHECK(total == 0);
    }
    SUBCASE("mean bit count matches the prior") {
        Rng rng(2);
        auto ens = init_ensemble(100, 10000, std::vector<double>(100, 0.05), rng);
        double total = 0;
        for (auto b : ens.bits) total += b;
        double mean_bits = total / ens.count;
        // 3 sigma of the mean of Binomial(100, 0.05) over 10000 draws
        CHECK(std::abs(mean_bits - 5.0) < 3.0 * std::sqrt(100 * 0.05 * 0.95 / 10000.0));
    }
    SUBCASE("uniform weights") {
        Rng rng(3);
        auto ens = init_ensemble(5, 64, std::vector<double>(5, 0.3), rng);
        for (double w : ens.weights) CHECK(w == doctest::Approx(1.0 / 64).epsilon(1e-15));
    }
    SUBCASE("invalid priors rejected") {
        Rng rng(4);
        CHECK_THROWS_AS(init_ensemble(3, 10, {0.5, 0.0, 0.5}, rng),
                        std::invalid_argument);
        CHECK_THROWS_AS(init_ensemble(3, 0, std::vector<double>(3, 0.5), rng),
                        std::invalid_argument);
    }
}

TEST_CASE("exact posterior enumeration") {
    NoiseModel nm{0.01, 1.0};  // noise std 0.1, signal std 1
    SUBCASE("empty history returns the prior") {
        std::vector<double> q = {0.1, 0.4, 0.7};
        auto post = exact_posterior(3, q, {}, nm);
        for (int i = 0; i < 3; ++i)
            CHECK(post.marginals[i] == doctest::Approx(q[i]).epsilon(1e-12));
    }
    SUBCASE("single informative test moves only the tested dim") {
        GtObservation obs{group_from_indices(2, {0}), 2.0, {}};
        auto post = exact_posterior(2, {0.5, 0.5}, {obs}, nm);
        CHECK(post.marginals[0] > 0.5);
        CHECK(post.marginals[1] == doctest::Approx(0.5).epsilon(1e-14));
    }
    SUBCASE("single-dimension case matches the two-state Bayes rule") {
        double q = 0.3, z = 1.2;
        NoiseModel m{0.25, 4.0};
        GtObservation obs{group_from_indices(1, {0}), z, {}};
        auto post = exact_posterior(1, {q}, {obs}, m);
        double la = std::exp(gaussian_logpdf0(z, m.signal_var));
        double ln = std::exp(gaussian_logpdf0(z, m.noise_var));
        double expect = q * la / (q * la + (1 - q) * ln);
        CHECK(post.marginals[0] == doctest::Approx(expect).epsilon(1e-12));
    }
    SUBCASE("union-event probability is monotone in z^2") {
        Group g = group_from_indices(4, {0, 1});
        std::vector<double> q(4, 0.3);
        NoiseModel mild{0.25, 1.0};
        double prev = -1.0;
        for (double z : {0.0, 0.5, 1.0, 1.5, 2.0}) {
            GtObservation obs{g, z, {}};
            auto post = exact_posterior(4, q, {obs}, mild);
            double p_union = 0.0;
            for (std::size_t s = 0; s < post.probs.size(); ++s)
                if (s & 0b0011) p_union += post.probs[s];
            CHECK(p_union > prev);
            prev = p_union;
            for (double m : post.marginals) {
                CHECK(m >= 0.0);
                CHECK(m <= 1.0);
            }
        }
    }
    SUBCASE("capacity guard") {
        NoiseModel m{1.0, 2.0};
        CHECK_THROWS_AS(exact_posterior(21, std::vector<double>(21, 0.5), {}, m),
                        std::invalid_argument);
    }
}

TEST_CASE("ensemble marginals") {
    SUBCASE("fresh ensemble is near the prior") {
        Rng rng(9);
        auto ens = init_ensemble(10, 20000, std::vector<double>(10, 0.2), rng);
        for (double m : marginals(ens))
            CHECK(m == doctest::Approx(0.2).epsilon(0.1));
    }
    SUBCASE("identical particles give their bits exactly") {
        auto ens = two_particle_ensemble(4, {1, 3}, {1, 3}, 0.25, 0.75);
        auto m = marginals(ens);
        CHECK(m == std::vector<double>{0.0, 1.0, 0.0, 1.0});
    }
}

TEST_SUITE_END();
