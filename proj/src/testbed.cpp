// testbed.cpp

#include "gtbo/testbed.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace gtbo {

namespace {

double branin(double x1, double x2) {
    const double a = 1.0;
    const double b = 5.1 / (4.0 * M_PI * M_PI);
    const double c = 5.0 / M_PI;
    const double r = 6.0;
    const double s = 10.0;
    const double t = 1.0 / (8.0 * M_PI);
    double u = x2 - b * x1 * x1 + c * x1 - r;
    return a * u * u + s * (1.0 - t) * std::cos(x1) + s;
}

double levy(const std::vector<double>& x) {
    const int d = static_cast<int>(x.size());
    auto w = [&](int i) { return 1.0 + (x[i] - 1.0) / 4.0; };
    double s1 = std::sin(M_PI * w(0));
    double sum = s1 * s1;
    for (int i = 0; i + 1 < d; ++i) {
        double wi = w(i);
        double sw = std::sin(M_PI * wi + 1.0);
        sum += (wi - 1.0) * (wi - 1.0) * (1.0 + 10.0 * sw * sw);
    }
    double wd = w(d - 1);
    double s2 = std::sin(2.0 * M_PI * wd);
    sum += (wd - 1.0) * (wd - 1.0) * (1.0 + s2 * s2);
    return sum;
}

double hartmann6(const std::vector<double>& x) {
    static const double alpha[4] = {1.0, 1.2, 3.0, 3.2};
    static const double A[4][6] = {{10, 3, 17, 3.5, 1.7, 8},
                                   {0.05, 10, 17, 0.1, 8, 14},
                                   {3, 3.5, 1.7, 10, 17, 8},
                                   {17, 8, 0.05, 10, 0.1, 14}};
    static const double P[4][6] = {
        {0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886},
        {0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991},
        {0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650},
        {0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381}};
    double sum = 0.0;
    for (int i = 0; i < 4; ++i) {
        double inner = 0.0;
        for (int j = 0; j < 6; ++j) {
            double d = x[j] - P[i][j];
            inner += A[i][j] * d * d;
        }
        sum += alpha[i] * std::exp(-inner);
    }
    return -sum;
}

double griewank(const std::vector<double>& x) {
    double sum = 0.0;
    double prod = 1.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sum += x[i] * x[i] / 4000.0;
        prod *= std::cos(x[i] / std::sqrt(static_cast<double>(i + 1)));
    }
    return sum - prod + 1.0;
}

// Affine map from [0,1] to the function's standard domain, per coordinate.
void rescale(BenchmarkName name, std::vector<double>& z) {
    switch (name) {
        case BenchmarkName::branin2:
            z[0] = -5.0 + 15.0 * z[0];
            z[1] = 15.0 * z[1];
            break;
        case BenchmarkName::levy4:
        case BenchmarkName::levy:
            for (auto& v : z) v = -10.0 + 20.0 * v;
            break;
        case BenchmarkName::hartmann6:
            break;  // native domain is the unit cube
        case BenchmarkName::griewank8:
            for (auto& v : z) v = -600.0 + 1200.0 * v;
            break;
    }
}

double default_noise_std(BenchmarkName name) {
    switch (name) {
        case BenchmarkName::branin2: return 0.5;
        case BenchmarkName::levy4: return 0.1;
        case BenchmarkName::levy: return 0.1;
        case BenchmarkName::hartmann6: return 0.01;
        case BenchmarkName::griewank8: return 0.5;
    }
    return 0.0;
}

}  // namespace

BenchmarkName benchmark_name_from_string(const std::string& s) {
    if (s == "branin2") return BenchmarkName::branin2;
    if (s == "levy4") return BenchmarkName::levy4;
    if (s == "hartmann6") return BenchmarkName::hartmann6;
    if (s == "griewank8") return BenchmarkName::griewank8;
    if (s == "levy") return BenchmarkName::levy;
    throw std::invalid_argument("unknown benchmark name: " + s);
}

std::string to_string(BenchmarkName name) {
    switch (name) {
        case BenchmarkName::branin2: return "branin2";
        case BenchmarkName::levy4: return "levy4";
        case BenchmarkName::hartmann6: return "hartmann6";
        case BenchmarkName::griewank8: return "griewank8";
        case BenchmarkName::levy: return "levy";
    }
    return "?";
}

int intrinsic_dim(BenchmarkName name) {
    switch (name) {
        case BenchmarkName::branin2: return 2;
        case BenchmarkName::levy4: return 4;
        case BenchmarkName::hartmann6: return 6;
        case BenchmarkName::griewank8: return 8;
        case BenchmarkName::levy: return 0;  // caller-provided
    }
    return 0;
}

namespace {

BenchmarkSpec assemble(BenchmarkName name, int ambient_dim, double noise_std,
                       std::vector<int> active, int levy_active_count) {
    int d_e = (name == BenchmarkName::levy) ? levy_active_count
                                            : intrinsic_dim(name);
    if (d_e < 1) throw std::invalid_argument("benchmark: active count must be >= 1");
    if (ambient_dim < d_e)
        throw std::invalid_argument("benchmark: ambient_dim below intrinsic dimension");
    if (active.empty()) {
        active.resize(d_e);
        std::iota(active.begin(), active.end(), 0);
    }
    if (static_cast<int>(active.size()) != d_e)
        throw std::invalid_argument("benchmark: active_dims size mismatch");
    std::vector<int> sorted = active;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw std::invalid_argument("benchmark: duplicate active dimension");
    if (sorted.front() < 0 || sorted.back() >= ambient_dim)
        throw std::invalid_argument("benchmark: active dimension out of range");

    BenchmarkSpec spec;
    spec.name = name;
    spec.ambient_dim = ambient_dim;
    spec.active_dims = std::move(active);
    spec.noise_std = noise_std < 0.0 ? default_noise_std(name) : noise_std;
    spec.default_point.assign(ambient_dim, 0.5);
    if (name == BenchmarkName::griewank8)
        for (int i : spec.active_dims) spec.default_point[i] = 0.75;
    return spec;
}

}  // namespace

BenchmarkSpec make_benchmark(BenchmarkName name, int ambient_dim,
                             double noise_std,
                             const std::vector<int>& active_dims,
                             int levy_active_count) {
    return assemble(name, ambient_dim, noise_std, active_dims,
                    levy_active_count);
}

BenchmarkSpec make_benchmark_randomized(BenchmarkName name, int ambient_dim,
                                        Rng& rng, double noise_std,
                                        int levy_active_count) {
    int d_e = (name == BenchmarkName::levy) ? levy_active_count
                                            : intrinsic_dim(name);
    if (d_e < 1) throw std::invalid_argument("benchmark: active count must be >= 1");
    if (ambient_dim < d_e)
        throw std::invalid_argument("benchmark: ambient_dim below intrinsic dimension");
    std::vector<int> all(ambient_dim);
    std::iota(all.begin(), all.end(), 0);
    // partial Fisher-Yates for the first d_e slots
    for (int i = 0; i < d_e; ++i) {
        std::uniform_int_distribution<int> pick(i, ambient_dim - 1);
        std::swap(all[i], all[pick(rng)]);
    }
    all.resize(d_e);
    return assemble(name, ambient_dim, noise_std, all, levy_active_count);
}

double true_value(const BenchmarkSpec& spec, const std::vector<double>& x) {
    if (static_cast<int>(x.size()) != spec.ambient_dim)
        throw std::invalid_argument("evaluate: point dimension mismatch");
    for (double v : x)
        if (!(v >= 0.0 && v <= 1.0))
            throw std::domain_error("evaluate: coordinate outside [0,1]");

    std::vector<double> z(spec.active_dims.size());
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = x[spec.active_dims[i]];
    rescale(spec.name, z);
    switch (spec.name) {
        case BenchmarkName::branin2: return branin(z[0], z[1]);
        case BenchmarkName::levy4:
        case BenchmarkName::levy: return levy(z);
        case BenchmarkName::hartmann6: return hartmann6(z);
        case BenchmarkName::griewank8: return griewank(z);
    }
    throw std::logic_error("unreachable");
}

Observation evaluate(const BenchmarkSpec& spec, const std::vector<double>& x,
                     Rng& rng) {
    Observation obs;
    obs.point = x;
    obs.true_value = true_value(spec, x);
    double eps = 0.0;
    if (spec.noise_std > 0.0) {
        std::normal_distribution<double> noise(0.0, spec.noise_std);
        eps = noise(rng);
    }
    obs.noisy_value = obs.true_value + eps;
    return obs;
}

double global_minimum(const BenchmarkSpec& spec) {
    switch (spec.name) {
        case BenchmarkName::branin2: return 0.39788735772973816;
        case BenchmarkName::levy4:
        case BenchmarkName::levy: return 0.0;
        case BenchmarkName::hartmann6: return -3.322368011415515;
        case BenchmarkName::griewank8: return 0.0;
    }
    throw std::logic_error("unreachable");
}

}  // namespace gtbo
