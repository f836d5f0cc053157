#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <vector>

namespace finadapt {

// Deterministic, platform-independent RNG. std::mt19937 is portable but the
// standard distributions are not (libstdc++/libc++ disagree), so uniform,
// bernoulli and gaussian draws are implemented by hand on top of xoshiro256**.
class Rng {
public:
    explicit Rng(uint64_t seed) {
        uint64_t x = seed;
        for (auto& word : state_) word = splitmix64(x);
    }

    // Derives an independent stream from a composite key, e.g.
    // Rng::from_key({seed, duplicate_index, record_index}).
    static Rng from_key(std::initializer_list<uint64_t> key) {
        uint64_t h = 0x6a09e667f3bcc909ULL;
        for (uint64_t k : key) {
            uint64_t x = k;
            h ^= splitmix64(x) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        }
        return Rng(h);
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1), 53-bit resolution.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform in [0, n), unbiased (rejection sampling). n must be > 0.
    uint64_t below(uint64_t n) {
        const uint64_t threshold = (0 - n) % n;
        for (;;) {
            uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    // Uniform integer in [lo, hi], inclusive.
    int64_t uniform_int(int64_t lo, int64_t hi) {
        return lo + static_cast<int64_t>(below(static_cast<uint64_t>(hi - lo) + 1));
    }

    bool bernoulli(double p) { return next_double() < p; }

    // Standard normal via Box-Muller. The second deviate is discarded so a
    // call consumes a fixed number of engine steps.
    double gaussian() {
        double u1 = next_double();
        double u2 = next_double();
        while (u1 <= 0.0) u1 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    static uint64_t splitmix64(uint64_t& x) {
        uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::array<uint64_t, 4> state_;
};

} // namespace finadapt
