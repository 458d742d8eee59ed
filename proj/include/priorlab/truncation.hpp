#pragma once

#include <cmath>
#include <cstddef>

#include "priorlab/errors.hpp"
#include "priorlab/rng.hpp"

namespace priorlab {

// Keep the first k coordinates, zero the rest. Linear, idempotent,
// length-preserving.
inline Vector truncate(const Vector& z, std::size_t k) {
    if (k < 1 || k > z.size()) {
        throw InvalidIndex("truncate: k out of range");
    }
    Vector out = z;
    for (std::size_t i = k; i < out.size(); ++i) out[i] = 0.0;
    return out;
}

inline void truncate_in_place(Vector& z, std::size_t k) {
    if (k < 1 || k > z.size()) {
        throw InvalidIndex("truncate: k out of range");
    }
    for (std::size_t i = k; i < z.size(); ++i) z[i] = 0.0;
}

// Truncated geometric law on {1..d}: P(k) = p (1-p)^(k-1) / (1 - (1-p)^d).
struct TruncationLaw {
    std::size_t d = 1;
    double p = 1.0;

    TruncationLaw(std::size_t d_, double p_) : d(d_), p(p_) {
        if (d == 0) throw InvalidArgument("TruncationLaw: d must be >= 1");
        if (!(p > 0.0) || p > 1.0) throw InvalidArgument("TruncationLaw: p must be in (0, 1]");
    }

    double pmf(std::size_t k) const {
        if (k < 1 || k > d) return 0.0;
        if (p == 1.0) return k == 1 ? 1.0 : 0.0;
        double q = 1.0 - p;
        return p * std::pow(q, static_cast<double>(k - 1)) /
               (1.0 - std::pow(q, static_cast<double>(d)));
    }

    double mean() const {
        double acc = 0.0;
        for (std::size_t k = 1; k <= d; ++k) acc += static_cast<double>(k) * pmf(k);
        return acc;
    }
};

// Inverse-CDF draw: one uniform per sample, so sequences replay exactly.
inline std::size_t sample_k(const TruncationLaw& law, RandomSource& rng) {
    double u = rng.next_uniform();
    if (law.p == 1.0 || law.d == 1) return 1;
    double q = 1.0 - law.p;
    double z = 1.0 - std::pow(q, static_cast<double>(law.d));
    // Smallest k with CDF(k) >= u, i.e. (1-p)^k <= 1 - u z.
    double k = std::ceil(std::log(1.0 - u * z) / std::log(q));
    if (k < 1.0) k = 1.0;
    std::size_t ki = static_cast<std::size_t>(k);
    return ki > law.d ? law.d : ki;
}

}  // namespace priorlab
