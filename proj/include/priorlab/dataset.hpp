#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "priorlab/errors.hpp"
#include "priorlab/linear_theory.hpp"
#include "priorlab/rng.hpp"
#include "priorlab/tensor.hpp"

namespace priorlab {

// Random orthogonal matrix: Gram-Schmidt (two passes) on a seeded Gaussian
// matrix. Deterministic given the rng state.
inline Matrix random_orthogonal(std::size_t n, RandomSource& rng) {
    if (n == 0) throw InvalidDimension("random_orthogonal: n must be >= 1");
    Matrix q = gaussian_matrix(rng, n, n, 1.0);
    for (std::size_t j = 0; j < n; ++j) {
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t c = 0; c < j; ++c) {
                double proj = 0.0;
                for (std::size_t i = 0; i < n; ++i) proj += q(i, j) * q(i, c);
                for (std::size_t i = 0; i < n; ++i) q(i, j) -= proj * q(i, c);
            }
        }
        double nrm = 0.0;
        for (std::size_t i = 0; i < n; ++i) nrm += q(i, j) * q(i, j);
        nrm = std::sqrt(nrm);
        if (nrm < 1e-8) {
            // Astronomically unlikely; restart the column from a basis vector.
            for (std::size_t i = 0; i < n; ++i) q(i, j) = (i == j) ? 1.0 : 0.0;
            --j;
            continue;
        }
        for (std::size_t i = 0; i < n; ++i) q(i, j) /= nrm;
    }
    return q;
}

// Family with the given spectrum and seeded random orthogonal factors.
inline GeneratorFamily synth_family(std::size_t n, const Vector& spectrum, std::uint64_t seed) {
    if (spectrum.size() != n) throw InvalidDimension("synth_family: spectrum length != n");
    RandomSource rng(seed, /*stream_id=*/11);
    Matrix u = random_orthogonal(n, rng);
    Matrix v = random_orthogonal(n, rng);
    return family_from_svd(std::move(u), spectrum, std::move(v));
}

// count samples of x = U diag(s) V^T z, z ~ N(0, I), with fixed seeded
// factors. The sample stream is independent of the factor stream so the
// same (U, V) pair serves any count.
inline std::vector<Vector> synth_lowrank_dataset(std::size_t n, const Vector& spectrum,
                                                 std::size_t count, std::uint64_t seed) {
    if (count == 0) throw InvalidArgument("synth_lowrank_dataset: count must be >= 1");
    for (std::size_t i = 0; i < spectrum.size(); ++i) {
        if (!(spectrum[i] > 0.0)) {
            throw InvalidValue("synth_lowrank_dataset: spectrum must be strictly positive");
        }
        if (i > 0 && spectrum[i] > spectrum[i - 1]) {
            throw InvalidValue("synth_lowrank_dataset: spectrum must be non-increasing");
        }
    }
    GeneratorFamily f = synth_family(n, spectrum, seed);
    RandomSource rng(seed, /*stream_id=*/12);
    std::vector<Vector> data;
    data.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        Vector z = gaussian_vector(rng, n, 1.0);
        data.push_back(apply_generator(f, z));
    }
    return data;
}

// Geometric spectrum s_i = base * ratio^i, i = 1..n (the shape used by the
// synthetic sweeps).
inline Vector geometric_spectrum(std::size_t n, double base, double ratio) {
    Vector s(n);
    double v = base;
    for (std::size_t i = 0; i < n; ++i) {
        v *= ratio;
        s[i] = v;
    }
    return s;
}

}  // namespace priorlab
