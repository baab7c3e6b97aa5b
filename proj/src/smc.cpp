// smc.cpp

#include "gtbo/smc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace gtbo {

double effective_sample_size(const ActivityEnsemble& ens) {
    double s2 = 0.0;
    for (double w : ens.weights) s2 += w * w;
    return 1.0 / s2;
}

void systematic_resample(ActivityEnsemble& ens, Rng& rng, int target_count) {
    const int m_in = ens.count;
    const int m_out = target_count > 0 ? target_count : m_in;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double u = unif(rng);

    std::vector<std::uint8_t> out(static_cast<std::size_t>(m_out) * ens.dim);
    double cum = 0.0;
    int k = 0;  // next stratified position (k + u) / m_out
    for (int j = 0; j < m_in; ++j) {
        cum += ens.weights[j];
        while (k < m_out && (k + u) < cum * m_out) {
            std::copy_n(ens.particle(j), ens.dim,
                        out.begin() + static_cast<std::size_t>(k) * ens.dim);
            ++k;
        }
    }
    // round-off guard: assign any leftover positions to the last particle
    while (k < m_out) {
        std::copy_n(ens.particle(m_in - 1), ens.dim,
                    out.begin() + static_cast<std::size_t>(k) * ens.dim);
        ++k;
    }
    ens.bits = std::move(out);
    ens.count = m_out;
    ens.weights.assign(m_out, 1.0 / m_out);
}

double conditional_logit(const std::uint8_t* particle, int dim, int i,
                         double q_i,
                         const std::vector<GtObservation>& history,
                         const NoiseModel& nm) {
    double logit = std::log(q_i) - std::log1p(-q_i);
    for (const auto& obs : history) {
        if (!obs.group.bits[i]) continue;
        int others = 0;
        for (int j = 0; j < dim; ++j)
            if (j != i && obs.group.bits[j] && particle[j]) ++others;
        // with another active member the indicator is 1 either way
        if (others == 0)
            logit += outcome_loglik(obs.z, true, nm) -
                     outcome_loglik(obs.z, false, nm);
    }
    return logit;
}

void gibbs_move(ActivityEnsemble& ens,
                const std::vector<GtObservation>& history,
                const NoiseModel& nm, const SmcConfig& cfg, Rng& rng) {
    const int dim = ens.dim;
    const int n_tests = static_cast<int>(history.size());

    std::vector<std::vector<int>> test_members(n_tests);
    std::vector<std::vector<int>> dim_tests(dim);
    std::vector<double> ll_diff(n_tests);
    for (int t = 0; t < n_tests; ++t) {
        test_members[t] = history[t].group.members();
        for (int i : test_members[t]) dim_tests[i].push_back(t);
        ll_diff[t] = outcome_loglik(history[t].z, true, nm) -
                     outcome_loglik(history[t].z, false, nm);
    }
    std::vector<double> prior_logit(dim);
    for (int i = 0; i < dim; ++i)
        prior_logit[i] =
            std::log(ens.prior_q[i]) - std::log1p(-ens.prior_q[i]);

    const int sweeps = std::max(1, cfg.gibbs_sweeps);
    const int move_dims =
        cfg.move_dims_per_sweep > 0 && cfg.move_dims_per_sweep < dim
            ? cfg.move_dims_per_sweep
            : dim;
    const std::uint64_t base = rng();

    parallel_for(ens.count, [&](std::size_t lo, std::size_t hi) {
        std::vector<int> cnt(n_tests);
        std::vector<int> order(dim);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        for (std::size_t k = lo; k < hi; ++k) {
            Rng prng = make_substream(base, k);
            std::uint8_t* row = ens.particle(static_cast<int>(k));

            std::fill(cnt.begin(), cnt.end(), 0);
            for (int t = 0; t < n_tests; ++t)
                for (int i : test_members[t]) cnt[t] += row[i];

            for (int s = 0; s < sweeps; ++s) {
                std::iota(order.begin(), order.end(), 0);
                std::shuffle(order.begin(), order.end(), prng);
                for (int oi = 0; oi < move_dims; ++oi) {
                    const int i = order[oi];
                    const int cur = row[i];
                    double logit = prior_logit[i];
                    for (int t : dim_tests[i])
                        if (cnt[t] - cur == 0) logit += ll_diff[t];
                    const double p1 = 1.0 / (1.0 + std::exp(-logit));
                    const std::uint8_t nb = unif(prng) < p1 ? 1 : 0;
                    if (nb != cur) {
                        row[i] = nb;
                        const int d = nb ? 1 : -1;
                        for (int t : dim_tests[i]) cnt[t] += d;
                    }
                }
            }
        }
    });
}

bool maybe_resample_move(ActivityEnsemble& ens,
                         const std::vector<GtObservation>& history,
                         const NoiseModel& nm, const SmcConfig& cfg,
                         Rng& rng) {
    // tiny relative slack so a threshold of exactly 1 fires at uniform
    // weights despite summation round-off
    if (effective_sample_size(ens) >
        cfg.ess_threshold_fraction * ens.count * (1.0 + 1e-12))
        return false;
    systematic_resample(ens, rng);
    gibbs_move(ens, history, nm, cfg, rng);
    return true;
}

}  // namespace gtbo
