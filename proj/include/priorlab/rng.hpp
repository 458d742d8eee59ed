#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "priorlab/errors.hpp"

namespace priorlab {

// Counter-based pseudo-random source.
//
// The generator is a splitmix64-style counter construction and is fully
// specified by integer arithmetic, so identical (seed, stream_id) pairs
// reproduce the same sequence on every platform and compiler:
//
//   base     = fin(fin(seed ^ GAMMA) + stream_id)
//   out_i    = fin(base + (i + 1) * GAMMA)          i = 0, 1, 2, ...
//
// where GAMMA = 0x9E3779B97F4A7C15 and fin() is the splitmix64 finalizer.
// The only mutable state is the draw counter (plus a one-value cache for
// the second Box-Muller output). Distinct stream_ids give statistically
// independent streams; use stream() to derive children for parallel work.
//
// A RandomSource is single-owner: pass it by reference, never share one
// instance across threads.
class RandomSource {
public:
    explicit RandomSource(std::uint64_t seed, std::uint64_t stream_id = 0)
        : seed_(seed), stream_id_(stream_id) {
        base_ = finalize(finalize(seed ^ kGamma) + stream_id);
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    // Child source with the same seed and a different stream id.
    RandomSource stream(std::uint64_t stream_id) const {
        return RandomSource(seed_, stream_id);
    }

    std::uint64_t next_u64() {
        counter_ += 1;
        return finalize(base_ + counter_ * kGamma);
    }

    // Uniform on [0, 1), 53 random mantissa bits.
    double next_uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller. Each transform consumes exactly two
    // uniforms and yields two normals; the second is cached and returned by
    // the next call, so the draw sequence is a pure function of the counter.
    double next_gaussian() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        // Offset keeps u1 in (0, 1) so log(u1) is finite.
        double u1 = (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
        double u2 = next_uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * std::numbers::pi * u2;
        cached_ = r * std::sin(a);
        has_cached_ = true;
        return r * std::cos(a);
    }

private:
    static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;

    static std::uint64_t finalize(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_ = 0;
    std::uint64_t stream_id_ = 0;
    std::uint64_t base_ = 0;
    std::uint64_t counter_ = 0;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

using Vector = std::vector<double>;

// n i.i.d. draws from N(0, sigma^2). sigma = 0 still consumes the same
// number of draws, so swapping sigma does not shift downstream sequences.
inline Vector gaussian_vector(RandomSource& rng, std::size_t n, double sigma) {
    if (n == 0) {
        throw InvalidDimension("gaussian_vector: n must be >= 1");
    }
    if (sigma < 0.0 || !std::isfinite(sigma)) {
        throw InvalidValue("gaussian_vector: sigma must be finite and >= 0");
    }
    Vector v(n);
    for (std::size_t i = 0; i < n; ++i) {
        v[i] = sigma * rng.next_gaussian();
    }
    return v;
}

}  // namespace priorlab
