// Deterministic random number generation. All randomness flows through
// splitmix64 so that streams are reproducible across platforms and
// independent of std library distribution implementations.
#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace afb {

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Derives an independent child seed from (seed, tag). Used to give each
// task / trial / restart its own stream so results are schedule-invariant.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
    std::uint64_t s = seed ^ (0x9E3779B97F4A7C15ull + (tag << 1));
    std::uint64_t a = splitmix64_next(s);
    std::uint64_t b = splitmix64_next(s);
    return a ^ (b >> 1);
}

// FNV-1a over a byte string, for turning stable names into stream tags.
inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() { return splitmix64_next(state_); }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Integer in [0, n). n must be > 0. Rejection-free modulo is fine here:
    // n is always tiny relative to 2^64 so the bias is negligible, but we
    // use rejection anyway to keep the stream exactly uniform.
    std::uint64_t uniform_index(std::uint64_t n) {
        const std::uint64_t limit = ~0ull - (~0ull % n);
        std::uint64_t v;
        do {
            v = next_u64();
        } while (v >= limit);
        return v % n;
    }

    // Standard normal via Box-Muller. Consumes two uniforms per pair.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    std::vector<double> normals(std::size_t n, double mean = 0.0, double sd = 1.0) {
        std::vector<double> out(n);
        for (auto& v : out) v = normal(mean, sd);
        return out;
    }

    // Fisher-Yates shuffle of indices 0..n-1.
    std::vector<std::size_t> permutation(std::size_t n) {
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        for (std::size_t i = n; i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_index(i));
            std::swap(idx[i - 1], idx[j]);
        }
        return idx;
    }

  private:
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace afb
