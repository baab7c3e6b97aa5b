// gt_model.cpp

#include "gtbo/gt_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace gtbo {

Group group_from_indices(int dim, const std::vector<int>& indices) {
    Group g;
    g.bits.assign(dim, 0);
    for (int i : indices) {
        if (i < 0 || i >= dim)
            throw std::invalid_argument("group index out of range");
        g.bits[i] = 1;
    }
    return g;
}

std::vector<double> perturb_with_offsets(const Group& g,
                                         const std::vector<double>& x_def,
                                         const std::vector<double>& offsets) {
    if (static_cast<int>(x_def.size()) != g.dim())
        throw std::invalid_argument("perturb: dimension mismatch");
    std::vector<double> x = x_def;
    std::size_t j = 0;
    for (int i = 0; i < g.dim(); ++i)
        if (g.bits[i]) {
            if (j >= offsets.size())
                throw std::invalid_argument("perturb: offset count mismatch");
            x[i] = clamp01(x[i] + offsets[j++]);
        }
    if (j != offsets.size())
        throw std::invalid_argument("perturb: offset count mismatch");
    return x;
}

std::vector<double> make_perturbed_point(const Group& g,
                                         const std::vector<double>& x_def,
                                         Rng& rng) {
    if (!g.any()) throw std::invalid_argument("perturb: empty group");
    std::uniform_real_distribution<double> offset(-0.5, 0.5);
    std::vector<double> offs(g.count());
    for (auto& o : offs) o = offset(rng);
    return perturb_with_offsets(g, x_def, offs);
}

double group_active_prob(const ActivityEnsemble& ens, const Group& g) {
    auto idx = g.members();
    double p = 0.0;
    for (int k = 0; k < ens.count; ++k) {
        const std::uint8_t* row = ens.particle(k);
        for (int i : idx) {
            if (row[i]) {
                p += ens.weights[k];
                break;
            }
        }
    }
    return p;
}

double outcome_loglik(double z, bool contains_active, const NoiseModel& nm) {
    return gaussian_logpdf0(z, contains_active ? nm.signal_var : nm.noise_var);
}

void update_weights(ActivityEnsemble& ens, const GtObservation& obs,
                    const NoiseModel& nm) {
    auto idx = obs.group.members();
    const double ll_act = outcome_loglik(obs.z, true, nm);
    const double ll_inact = outcome_loglik(obs.z, false, nm);

    std::vector<double> logw(ens.count);
    double lmax = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < ens.count; ++k) {
        bool hit = false;
        const std::uint8_t* row = ens.particle(k);
        for (int i : idx) {
            if (row[i]) {
                hit = true;
                break;
            }
        }
        double lw = std::log(ens.weights[k]) + (hit ? ll_act : ll_inact);
        logw[k] = lw;
        lmax = std::max(lmax, lw);
    }
    if (!std::isfinite(lmax))
        throw std::runtime_error("update_weights: all weights degenerate");

    double total = 0.0;
    for (int k = 0; k < ens.count; ++k) {
        double w = std::exp(logw[k] - lmax);
        ens.weights[k] = w;
        total += w;
    }
    for (auto& w : ens.weights) w /= total;
}

ActivityEnsemble init_ensemble(int dim, int count,
                               const std::vector<double>& q, Rng& rng) {
    if (count < 1) throw std::invalid_argument("init_ensemble: count < 1");
    if (static_cast<int>(q.size()) != dim)
        throw std::invalid_argument("init_ensemble: prior size mismatch");
    for (double qi : q)
        if (!(qi > 0.0 && qi < 1.0))
            throw std::invalid_argument("init_ensemble: prior must be in (0,1)");

    ActivityEnsemble ens;
    ens.dim = dim;
    ens.count = count;
    ens.prior_q = q;
    ens.bits.resize(static_cast<std::size_t>(dim) * count);
    ens.weights.assign(count, 1.0 / count);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int k = 0; k < count; ++k) {
        std::uint8_t* row = ens.particle(k);
        for (int i = 0; i < dim; ++i) row[i] = unif(rng) < q[i] ? 1 : 0;
    }
    return ens;
}

std::vector<double> marginals(const ActivityEnsemble& ens) {
    std::vector<double> m(ens.dim, 0.0);
    for (int k = 0; k < ens.count; ++k) {
        const std::uint8_t* row = ens.particle(k);
        double w = ens.weights[k];
        for (int i = 0; i < ens.dim; ++i)
            if (row[i]) m[i] += w;
    }
    // weight round-off can push a unanimous bit past 1
    for (double& v : m) v = clamp01(v);
    return m;
}

ExactPosterior exact_posterior(int dim, const std::vector<double>& q,
                               const std::vector<GtObservation>& history,
                               const NoiseModel& nm) {
    if (dim > 20)
        throw std::invalid_argument("exact_posterior: dimension above capacity");
    if (static_cast<int>(q.size()) != dim)
        throw std::invalid_argument("exact_posterior: prior size mismatch");

    const std::size_t n_states = std::size_t{1} << dim;
    std::vector<std::uint32_t> group_masks;
    group_masks.reserve(history.size());
    for (const auto& obs : history) {
        std::uint32_t m = 0;
        for (int i = 0; i < dim; ++i)
            if (obs.group.bits[i]) m |= std::uint32_t{1} << i;
        group_masks.push_back(m);
    }

    std::vector<double> logp(n_states);
    double lmax = -std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < n_states; ++s) {
        double lp = 0.0;
        for (int i = 0; i < dim; ++i)
            lp += (s >> i) & 1 ? std::log(q[i]) : std::log1p(-q[i]);
        for (std::size_t t = 0; t < history.size(); ++t)
            lp += outcome_loglik(history[t].z, (s & group_masks[t]) != 0, nm);
        logp[s] = lp;
        lmax = std::max(lmax, lp);
    }

    ExactPosterior out;
    out.probs.resize(n_states);
    double total = 0.0;
    for (std::size_t s = 0; s < n_states; ++s) {
        out.probs[s] = std::exp(logp[s] - lmax);
        total += out.probs[s];
    }
    for (auto& p : out.probs) p /= total;

    out.marginals.assign(dim, 0.0);
    for (std::size_t s = 0; s < n_states; ++s)
        for (int i = 0; i < dim; ++i)
            if ((s >> i) & 1) out.marginals[i] += out.probs[s];
    return out;
}

}  // namespace gtbo
