// variance.cpp

#include "gtbo/variance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "gtbo/gt_model.hpp"

namespace gtbo {

namespace {

double norm_pdf(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
}

double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Phi^-1 by bisection; called once per probe, precision beats speed
double probit(double p) {
    double lo = -10.0, hi = 10.0;
    for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        (norm_cdf(mid) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

SplitConsistency split_consistency(double lower_fraction) {
    if (!(lower_fraction > 0.0) || !(lower_fraction < 1.0))
        throw std::invalid_argument("split_consistency: fraction outside (0,1)");
    const double c = probit(0.5 * (1.0 + lower_fraction));
    const double mass = 2.0 * norm_cdf(c) - 1.0;
    SplitConsistency sc;
    sc.lower = 1.0 - 2.0 * c * norm_pdf(c) / mass;
    sc.upper = (1.0 - lower_fraction * sc.lower) / (1.0 - lower_fraction);
    return sc;
}

double estimate_default(const Objective& f, const std::vector<double>& x_def,
                        int n_def, Rng& rng) {
    (void)rng;
    if (n_def < 2) throw std::invalid_argument("estimate_default: n_def < 2");
    double acc = 0.0;
    for (int i = 0; i < n_def; ++i) acc += f(x_def).y;
    return acc / n_def;
}

VarianceProbeResult estimate_variances(const Objective& f,
                                       const std::vector<double>& x_def,
                                       int n_def, Rng& rng) {
    const int dim = static_cast<int>(x_def.size());
    if (dim < 4) throw std::invalid_argument("estimate_variances: D < 4");
    if (n_def < 2) throw std::invalid_argument("estimate_variances: n_def < 2");

    const int root = static_cast<int>(std::floor(std::sqrt(double(dim))));
    const int n_bins = 3 * root;
    const int k_noise = 2 * root;
    const int k_signal = n_bins - k_noise;

    VarianceProbeResult res;
    res.probe_observations.reserve(n_def + n_bins);

    double acc = 0.0;
    for (int i = 0; i < n_def; ++i) {
        const double y = f(x_def).y;
        acc += y;
        res.probe_observations.push_back({-1, x_def, y});
    }
    res.default_estimate = acc / n_def;

    // contiguous near-equal bins: the first dim % n_bins bins get one extra
    std::vector<double> diffs(n_bins);
    int next_dim = 0;
    for (int j = 0; j < n_bins; ++j) {
        const int size = dim / n_bins + (j < dim % n_bins ? 1 : 0);
        std::vector<int> members(size);
        std::iota(members.begin(), members.end(), next_dim);
        next_dim += size;
        const Group bin = group_from_indices(dim, members);
        const std::vector<double> x = make_perturbed_point(bin, x_def, rng);
        const double y = f(x).y;
        diffs[j] = y - res.default_estimate;
        res.probe_observations.push_back({j, std::move(x), y});
    }

    std::vector<int> order(n_bins);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&diffs](int a, int b) {
        return std::abs(diffs[a]) < std::abs(diffs[b]);
    });

    const SplitConsistency sc =
        split_consistency(double(k_noise) / double(n_bins));
    double m_lo = 0.0, m_hi = 0.0;
    for (int r = 0; r < k_noise; ++r) m_lo += diffs[order[r]] * diffs[order[r]];
    for (int r = k_noise; r < n_bins; ++r)
        m_hi += diffs[order[r]] * diffs[order[r]];
    double nv = m_lo / k_noise / sc.lower;
    double sv = m_hi / k_signal / sc.upper;

    // degenerate-likelihood guard, then enforce the structural ordering
    nv = std::max(nv, std::max(1e-12, 1e-6 * sv));
    if (nv > sv) std::swap(nv, sv);
    nv = std::max(nv, 1e-12);
    sv = std::max(sv, nv);

    res.noise_var = nv;
    res.signal_var = sv;
    return res;
}

}  // namespace gtbo
