// common.hpp
//
// Shared primitives: RNG type and substream derivation, the thread-pool-free
// parallel_for used by the particle sweeps, and a few numeric helpers.

#ifndef GTBO_COMMON_HPP
#define GTBO_COMMON_HPP

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace gtbo {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive independent substreams from a base
// seed so that parallel sections produce identical results for any worker
// count.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t index) {
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline Rng make_substream(std::uint64_t base, std::uint64_t index) {
    return Rng(mix_seed(base, index));
}

// Worker cap from GTBO_THREADS; 0/unset falls back to 1 (results are
// identical for any value, the cap only affects wallclock).
inline unsigned worker_count() {
    if (const char* env = std::getenv("GTBO_THREADS")) {
        long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    return 1;
}

// Static block partition of [0, n); fn(begin, end) per block. Each block's
// work must be independent and write only to its own slots.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    unsigned workers = worker_count();
    if (workers <= 1 || n < 2 * workers) {
        fn(std::size_t{0}, n);
        return;
    }
    std::vector<std::thread> threads;
    threads.reserve(workers);
    std::size_t chunk = (n + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        std::size_t lo = std::min(n, w * chunk);
        std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        threads.emplace_back([&fn, lo, hi] { fn(lo, hi); });
    }
    for (auto& t : threads) t.join();
}

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112353;

// log N(z; 0, var)
inline double gaussian_logpdf0(double z, double var) {
    return -0.5 * (kLog2Pi + std::log(var) + z * z / var);
}

// differential entropy of N(0, var): 0.5 * log(2*pi*e*var)
inline double gaussian_entropy(double var) {
    return 0.5 * (kLog2Pi + 1.0 + std::log(var));
}

inline double clamp01(double x) { return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x); }

}  // namespace gtbo

#endif  // GTBO_COMMON_HPP
