#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace hsdisp {

// Input that violates a precondition of the mathematical model
// (empty phase, reversed contrast, radius overflow, ...).
struct degenerate_input : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Ball list that cannot be a torus packing (overlap or volume excess).
struct infeasible_radii : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Numerical routine failed to reach its stated tolerance.
struct numerical_failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Volume of the unit ball in R^N.
inline double unit_ball_volume(int dim) {
    if (dim < 1) throw degenerate_input("unit_ball_volume: dim must be >= 1");
    return std::pow(M_PI, 0.5 * dim) / std::tgamma(0.5 * dim + 1.0);
}

// Compensated (Kahan) accumulator; the tail sums in minimizer and
// dispersion mix magnitudes across many orders.
class kahan_sum {
  public:
    void add(double x) {
        double y = x - c_;
        double t = s_ + y;
        c_ = (t - s_) - y;
        s_ = t;
    }
    double value() const { return s_; }

  private:
    double s_ = 0.0;
    double c_ = 0.0;
};

// splitmix64; used to derive independent per-chunk streams from one seed so
// results do not depend on the thread count.
inline std::uint64_t split_seed(std::uint64_t seed, std::uint64_t chunk) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (chunk + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// xoshiro256++, explicit implementation so streams are identical on every
// platform (std distributions are not).
class rng256 {
  public:
    explicit rng256(std::uint64_t seed) {
        for (int i = 0; i < 4; ++i) s_[i] = split_seed(seed, 0xabcd + i);
    }
    std::uint64_t next_u64() {
        auto rotl = [](std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); };
        std::uint64_t r = rotl(s_[0] + s_[3], 23) + s_[0];
        std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return r;
    }
    // uniform in [0,1)
    double next_double() { return (next_u64() >> 11) * 0x1.0p-53; }
    // standard normal via Box-Muller (no cached spare: keeps the stream
    // position independent of call parity)
    double next_normal() {
        double u1 = 0.0;
        while (u1 == 0.0) u1 = next_double();
        double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

  private:
    std::uint64_t s_[4];
};

// "%.17g" formatting: decimal serialization that round-trips doubles exactly.
inline std::string format_double17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// Runs work(0..n_chunks-1) on up to `threads` workers.  Chunks own disjoint
// output slots, so the result is independent of the thread count; callers
// combine slots in chunk order afterwards.
inline void parallel_chunks(int n_chunks, int threads, const std::function<void(int)>& work) {
    threads = std::max(1, std::min(threads, n_chunks));
    if (threads == 1) {
        for (int c = 0; c < n_chunks; ++c) work(c);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (int c = next.fetch_add(1); c < n_chunks; c = next.fetch_add(1)) work(c);
        });
    for (auto& th : pool) th.join();
}

}  // namespace hsdisp
