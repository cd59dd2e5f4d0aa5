#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "harpbd/common.hpp"

namespace harpbd {

// Deterministic random streams built on splitmix64. Standard-library
// distributions are not bit-reproducible across implementations, so all
// randomness in the project goes through this header. Streams are derived
// from a root seed plus a string label; the same (seed, label) pair always
// yields the same sequence, and distinct labels yield independent streams.

namespace detail {

inline uint64_t splitmix64(uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline uint64_t fnv1a(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace detail

/// One independent random stream.
class RngStream {
  public:
    explicit RngStream(uint64_t key) : state_(key), have_spare_(false), spare_(0.0) {}

    uint64_t next_u64() { return detail::splitmix64(state_); }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; the paired draw is cached.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double sigma) { return mean + sigma * normal(); }

    /// Uniform integer in [0, n), unbiased by rejection.
    uint64_t below(uint64_t n) {
        require(n > 0, "RngStream::below: n must be positive");
        uint64_t threshold = (~n + 1) % n;  // 2^64 mod n
        for (;;) {
            uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    /// Uniform integer in [lo, hi] inclusive.
    int64_t uniform_int(int64_t lo, int64_t hi) {
        require(lo <= hi, "RngStream::uniform_int: empty range");
        return lo + static_cast<int64_t>(below(static_cast<uint64_t>(hi - lo) + 1));
    }

    bool bernoulli(double p) { return uniform() < p; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

  private:
    uint64_t state_;
    bool have_spare_;
    double spare_;
};

/// Root generator: hands out labeled substreams of a run seed.
class RootRng {
  public:
    explicit RootRng(uint64_t seed) : seed_(seed) {}

    uint64_t seed() const { return seed_; }

    RngStream stream(std::string_view label) const {
        uint64_t s = seed_ ^ 0x6a09e667f3bcc908ULL;
        uint64_t mixed = detail::splitmix64(s);
        uint64_t key = mixed ^ detail::fnv1a(label);
        // one extra mix so near-identical labels decorrelate
        return RngStream(detail::splitmix64(key));
    }

  private:
    uint64_t seed_;
};

}  // namespace harpbd
