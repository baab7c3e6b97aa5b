// selection.cpp

#include "gtbo/selection.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

namespace gtbo {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct MixtureSamples {
    std::vector<double> u, v;
};

// u first, then v, so the draw order is independent of how the normal
// distribution consumes uniforms internally
MixtureSamples draw_mixture_samples(int n, Rng& rng) {
    MixtureSamples s;
    s.u.resize(n);
    s.v.resize(n);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (auto& x : s.u) x = unif(rng);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (auto& x : s.v) x = normal(rng);
    return s;
}

double entropy_from_samples(const MixtureSamples& s, int n, double p,
                            const NoiseModel& nm) {
    const double sd_s = std::sqrt(nm.signal_var);
    const double sd_n = std::sqrt(nm.noise_var);
    double acc = 0.0;
    for (int j = 0; j < n; ++j) {
        const double z = s.v[j] * (s.u[j] < p ? sd_s : sd_n);
        const double mix = p * std::exp(gaussian_logpdf0(z, nm.signal_var)) +
                           (1.0 - p) * std::exp(gaussian_logpdf0(z, nm.noise_var));
        acc += std::log(mix);
    }
    return -acc / n;
}

}  // namespace

double mixture_entropy_mc(double p_active, const NoiseModel& nm, int n,
                          Rng& rng) {
    if (n < 1) throw std::invalid_argument("mixture_entropy_mc: n < 1");
    auto s = draw_mixture_samples(n, rng);
    return entropy_from_samples(s, n, p_active, nm);
}

MiEstimate mutual_information(const ActivityEnsemble& ens, const Group& g,
                              const NoiseModel& nm, int n, Rng& rng) {
    if (!g.any()) throw std::invalid_argument("mutual_information: empty group");
    const double p = group_active_prob(ens, g);
    const double h = mixture_entropy_mc(p, nm, n, rng);
    const double h_cond = (1.0 - p) * gaussian_entropy(nm.noise_var) +
                          p * gaussian_entropy(nm.signal_var);
    return {std::max(0.0, h - h_cond), n};
}

MiContext::MiContext(const NoiseModel& nm, int n_max, Rng& rng)
    : nm_(nm), n_max_(n_max) {
    auto s = draw_mixture_samples(n_max, rng);
    u_ = std::move(s.u);
    da_s_.resize(n_max);
    da_n_.resize(n_max);
    db_s_.resize(n_max);
    db_n_.resize(n_max);
    const double sd_s = std::sqrt(nm.signal_var);
    const double sd_n = std::sqrt(nm.noise_var);
    for (int j = 0; j < n_max; ++j) {
        const double za = s.v[j] * sd_s;
        const double zb = s.v[j] * sd_n;
        da_s_[j] = std::exp(gaussian_logpdf0(za, nm.signal_var));
        da_n_[j] = std::exp(gaussian_logpdf0(za, nm.noise_var));
        db_s_[j] = std::exp(gaussian_logpdf0(zb, nm.signal_var));
        db_n_[j] = std::exp(gaussian_logpdf0(zb, nm.noise_var));
    }
    h_cond_s_ = gaussian_entropy(nm.signal_var);
    h_cond_n_ = gaussian_entropy(nm.noise_var);
}

double MiContext::entropy(double p, int n) const {
    if (n < 1 || n > n_max_)
        throw std::invalid_argument("MiContext: bad sample count");
    const double q = 1.0 - p;
    double acc = 0.0;
    for (int j = 0; j < n; ++j) {
        const double mix = u_[j] < p ? p * da_s_[j] + q * da_n_[j]
                                     : p * db_s_[j] + q * db_n_[j];
        acc += std::log(mix);
    }
    return -acc / n;
}

double MiContext::mi(double p, int n) const {
    std::uint64_t key = std::bit_cast<std::uint64_t>(p) ^
                        (static_cast<std::uint64_t>(n) * 0x9e3779b97f4a7c15ULL);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    const double value =
        entropy(p, n) - ((1.0 - p) * h_cond_n_ + p * h_cond_s_);
    memo_.emplace(key, value);
    return value;
}

namespace {

// Incrementally maintained per-particle overlap counts for one evolving
// group, giving O(M) probability lookups for all single add/remove moves.
class GroupProbEngine {
public:
    explicit GroupProbEngine(const ActivityEnsemble& ens)
        : ens_(ens), cnt_(ens.count, 0), in_group_(ens.dim, 0) {}

    void reset(const Group& g) {
        in_group_ = g.bits;
        members_ = g.members();
        p_hat_ = 0.0;
        for (int k = 0; k < ens_.count; ++k) {
            const std::uint8_t* row = ens_.particle(k);
            int c = 0;
            for (int i : members_) c += row[i];
            cnt_[k] = c;
            if (c > 0) p_hat_ += ens_.weights[k];
        }
        rebuild_lists();
    }

    double prob() const { return p_hat_; }
    const std::vector<std::uint8_t>& bits() const { return in_group_; }
    int size() const { return static_cast<int>(members_.size()); }

    void add(int i) {
        in_group_[i] = 1;
        members_.insert(
            std::lower_bound(members_.begin(), members_.end(), i), i);
        for (int k = 0; k < ens_.count; ++k) {
            if (!ens_.particle(k)[i]) continue;
            if (cnt_[k] == 0) p_hat_ += ens_.weights[k];
            ++cnt_[k];
        }
        rebuild_lists();
    }

    void remove(int i) {
        in_group_[i] = 0;
        members_.erase(
            std::lower_bound(members_.begin(), members_.end(), i));
        for (int k = 0; k < ens_.count; ++k) {
            if (!ens_.particle(k)[i]) continue;
            --cnt_[k];
            if (cnt_[k] == 0) p_hat_ -= ens_.weights[k];
        }
        rebuild_lists();
    }

    // out[i] = group probability with dimension i added; equals prob() for
    // dimensions already in the group
    void probs_if_add(std::vector<double>& out) const {
        out.assign(ens_.dim, p_hat_);
        for (int k : zeros_) {
            const std::uint8_t* row = ens_.particle(k);
            const double w = ens_.weights[k];
            for (int i = 0; i < ens_.dim; ++i)
                if (row[i]) out[i] += w;
        }
    }

    // out[i] = group probability with member i removed (only meaningful for
    // members)
    void probs_if_remove(std::vector<double>& out) const {
        out.assign(ens_.dim, p_hat_);
        for (int k : ones_) {
            const std::uint8_t* row = ens_.particle(k);
            for (int i : members_)
                if (row[i]) {
                    out[i] -= ens_.weights[k];
                    break;  // cnt == 1: exactly one member is set
                }
        }
    }

private:
    void rebuild_lists() {
        zeros_.clear();
        ones_.clear();
        for (int k = 0; k < ens_.count; ++k) {
            if (cnt_[k] == 0)
                zeros_.push_back(k);
            else if (cnt_[k] == 1)
                ones_.push_back(k);
        }
    }

    const ActivityEnsemble& ens_;
    std::vector<int> cnt_;
    std::vector<std::uint8_t> in_group_;
    std::vector<int> members_;
    std::vector<int> zeros_, ones_;
    double p_hat_ = 0.0;
};

struct ClimbResult {
    Group group;
    double prob = 0.0;
    double mi = kNegInf;  // -inf when the final state is excluded
};

ClimbResult climb(const ActivityEnsemble& ens, const SelectionConfig& cfg,
                  const GroupSet& excluded, const Group& start,
                  const MiContext& ctx) {
    const int dim = ens.dim;
    const int max_size = cfg.resolved_max_group_size(dim);
    const int n = std::min(cfg.mc_samples, ctx.max_samples());

    GroupProbEngine engine(ens);
    engine.reset(start);
    std::vector<std::uint8_t> g = start.bits;
    int size = start.count();

    auto is_excluded = [&excluded](const std::vector<std::uint8_t>& bits) {
        return excluded.count(bits) > 0;
    };
    double cur = is_excluded(g) ? kNegInf : ctx.mi(engine.prob(), n);

    std::vector<double> probs;
    // a candidate one-bit move lands in an excluded group iff that group
    // differs from the current one in exactly that bit
    std::vector<std::uint8_t> banned(dim);
    auto mark_banned = [&](bool adding) {
        std::fill(banned.begin(), banned.end(), 0);
        for (const auto& e : excluded) {
            int delta = -1;
            bool one_diff = true;
            for (int i = 0; i < dim && one_diff; ++i) {
                if (e[i] == g[i]) continue;
                if (delta >= 0) one_diff = false;
                else if (e[i] == (adding ? 1 : 0)) delta = i;
                else one_diff = false;
            }
            if (one_diff && delta >= 0) banned[delta] = 1;
        }
    };

    bool changed = true;
    while (changed) {
        changed = false;
        // forward: add while the best addition strictly improves
        while (size < max_size) {
            engine.probs_if_add(probs);
            mark_banned(true);
            int best_i = -1;
            double best = cur;
            for (int i = 0; i < dim; ++i) {
                if (g[i] || banned[i]) continue;
                const double m = ctx.mi(probs[i], n);
                if (m > best) {
                    best = m;
                    best_i = i;
                }
            }
            if (best_i < 0) break;
            engine.add(best_i);
            g[best_i] = 1;
            ++size;
            cur = best;
            changed = true;
        }
        // backward: remove while the best removal strictly improves
        while (size > 1) {
            engine.probs_if_remove(probs);
            mark_banned(false);
            int best_i = -1;
            double best = cur;
            for (int i = 0; i < dim; ++i) {
                if (!g[i] || banned[i]) continue;
                const double m = ctx.mi(probs[i], n);
                if (m > best) {
                    best = m;
                    best_i = i;
                }
            }
            if (best_i < 0) break;
            engine.remove(best_i);
            g[best_i] = 0;
            --size;
            cur = best;
            changed = true;
        }
    }

    ClimbResult res;
    res.group.bits = std::move(g);
    res.prob = engine.prob();
    res.mi = is_excluded(res.group.bits) ? kNegInf : cur;
    return res;
}

// truncate to the size cap, keeping the bits with the largest marginals
void cap_group(std::vector<std::uint8_t>& bits,
               const std::vector<double>& marg, int max_size) {
    int size = 0;
    for (auto b : bits) size += b;
    if (size <= max_size) return;
    std::vector<int> set_bits;
    for (int i = 0; i < static_cast<int>(bits.size()); ++i)
        if (bits[i]) set_bits.push_back(i);
    std::stable_sort(set_bits.begin(), set_bits.end(),
                     [&marg](int a, int b) { return marg[a] > marg[b]; });
    std::fill(bits.begin(), bits.end(), 0);
    for (int j = 0; j < max_size; ++j) bits[set_bits[j]] = 1;
}

std::vector<Group> build_seeds(const ActivityEnsemble& ens,
                               const SelectionConfig& cfg, Rng& rng) {
    const int dim = ens.dim;
    const int max_size = cfg.resolved_max_group_size(dim);
    const auto marg = marginals(ens);
    // empty draws fall back to the most uncertain single dimension; a
    // near-certain one would sit on a flat stretch of the MI surface
    int fallback = 0;
    for (int i = 1; i < dim; ++i)
        if (std::abs(marg[i] - 0.5) < std::abs(marg[fallback] - 0.5))
            fallback = i;
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    std::vector<Group> seeds;
    for (int s = 0; s < cfg.n_seed_groups; ++s) {
        std::vector<std::uint8_t> bits(dim, 0);
        if (s == 0) {
            for (int i = 0; i < dim; ++i)
                bits[i] = unif(rng) < ens.prior_q[i] ? 1 : 0;
        } else if (s == 1) {
            double target = unif(rng);
            double cum = 0.0;
            int k = ens.count - 1;
            for (int j = 0; j < ens.count; ++j) {
                cum += ens.weights[j];
                if (target <= cum) {
                    k = j;
                    break;
                }
            }
            std::copy_n(ens.particle(k), dim, bits.begin());
        } else if (s == 2) {
            for (int i = 0; i < dim; ++i) bits[i] = marg[i] >= 0.5 ? 1 : 0;
        } else {
            for (int i = 0; i < dim; ++i)
                bits[i] = unif(rng) < marg[i] ? 1 : 0;
        }
        cap_group(bits, marg, max_size);
        bool any = std::any_of(bits.begin(), bits.end(),
                               [](std::uint8_t b) { return b != 0; });
        if (!any) bits[fallback] = 1;
        seeds.push_back({std::move(bits)});
    }
    return seeds;
}

}  // namespace

Group forward_backward(const ActivityEnsemble& ens,
                       const SelectionConfig& cfg, const GroupSet& excluded,
                       Rng& rng, const MiContext& ctx) {
    const auto seeds = build_seeds(ens, cfg, rng);
    const int n_final = std::min(cfg.mc_samples_final, ctx.max_samples());

    int best = -1;
    double best_mi = kNegInf;
    std::vector<ClimbResult> results;
    results.reserve(seeds.size());
    for (const auto& seed : seeds)
        results.push_back(climb(ens, cfg, excluded, seed, ctx));
    for (std::size_t s = 0; s < results.size(); ++s) {
        if (results[s].mi == kNegInf) continue;
        const double m = ctx.mi(results[s].prob, n_final);
        if (best < 0 || m > best_mi) {
            best = static_cast<int>(s);
            best_mi = m;
        }
    }
    if (best < 0)
        throw SelectionFailure("forward_backward: all climbs ended excluded");
    return results[best].group;
}

Group forward_backward(const ActivityEnsemble& ens, const NoiseModel& nm,
                       const SelectionConfig& cfg, const GroupSet& excluded,
                       Rng& rng) {
    MiContext ctx(nm, std::max(cfg.mc_samples, cfg.mc_samples_final), rng);
    return forward_backward(ens, cfg, excluded, rng, ctx);
}

Group forward_backward_from(const ActivityEnsemble& ens,
                            const SelectionConfig& cfg,
                            const GroupSet& excluded, const Group& start,
                            const MiContext& ctx) {
    return climb(ens, cfg, excluded, start, ctx).group;
}

std::vector<Group> select_batch(const ActivityEnsemble& ens,
                                const NoiseModel& nm,
                                const SelectionConfig& cfg, Rng& rng) {
    MiContext ctx(nm, std::max(cfg.mc_samples, cfg.mc_samples_final), rng);
    const int n_final = std::min(cfg.mc_samples_final, ctx.max_samples());

    std::vector<Group> batch;
    GroupSet excluded;

    Group first = forward_backward(ens, cfg, excluded, rng, ctx);
    const double mi_first =
        std::max(0.0, ctx.mi(group_active_prob(ens, first), n_final));
    excluded.insert(first.bits);
    batch.push_back(std::move(first));

    while (static_cast<int>(batch.size()) < cfg.batch_size) {
        Group g;
        try {
            g = forward_backward(ens, cfg, excluded, rng, ctx);
        } catch (const SelectionFailure&) {
            break;
        }
        const double m =
            std::max(0.0, ctx.mi(group_active_prob(ens, g), n_final));
        if (m < cfg.near_optimal_fraction * mi_first) break;
        excluded.insert(g.bits);
        batch.push_back(std::move(g));
    }
    return batch;
}

}  // namespace gtbo
