#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "priorlab/errors.hpp"
#include "priorlab/rng.hpp"
#include "priorlab/svd.hpp"
#include "priorlab/tensor.hpp"

namespace priorlab {

// SVD-backed family of truncated linear generators. The full generator is
// g = u diag(s) v^T; rank-k members zero the trailing singular values.
struct GeneratorFamily {
    Matrix u;  // n x n orthogonal
    Vector s;  // strictly positive, non-increasing
    Matrix v;  // n x n orthogonal

    std::size_t dim() const { return s.size(); }
};

namespace detail {

inline void check_orthogonal(const Matrix& q, const char* what) {
    const std::size_t n = q.rows();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t r = 0; r < n; ++r) acc += q(r, i) * q(r, j);
            double target = (i == j) ? 1.0 : 0.0;
            if (std::abs(acc - target) > 1e-10) {
                throw InvalidValue(std::string(what) + ": factor is not orthogonal");
            }
        }
    }
}

}  // namespace detail

// Family from an explicit SVD triple; used for synthetic spectra where u, v
// are drawn separately.
inline GeneratorFamily family_from_svd(Matrix u, Vector s, Matrix v) {
    if (u.rows() != u.cols() || v.rows() != v.cols() || u.rows() != s.size() ||
        v.rows() != s.size()) {
        throw InvalidDimension("family_from_svd: inconsistent dimensions");
    }
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!(s[i] > 0.0) || !std::isfinite(s[i])) {
            throw InvalidValue("family_from_svd: singular values must be positive");
        }
        if (i > 0 && s[i] > s[i - 1]) {
            throw InvalidValue("family_from_svd: singular values must be non-increasing");
        }
    }
    detail::check_orthogonal(u, "family_from_svd(u)");
    detail::check_orthogonal(v, "family_from_svd(v)");
    return GeneratorFamily{std::move(u), std::move(s), std::move(v)};
}

inline GeneratorFamily make_family(const Matrix& g) {
    if (g.rows() != g.cols()) {
        throw InvalidDimension("make_family: generator must be square");
    }
    SvdResult r = svd(g);
    double s_max = r.s.empty() ? 0.0 : r.s.front();
    double s_min = r.s.empty() ? 0.0 : r.s.back();
    if (!(s_min > 1e-12 * s_max) || s_max == 0.0) {
        throw SingularGenerator("make_family: generator is numerically rank-deficient");
    }
    return GeneratorFamily{std::move(r.u), std::move(r.s), std::move(r.v)};
}

// g_k = u diag(s_1..s_k, 0..) v^T, the rank-k member of the family.
inline Matrix generator_at(const GeneratorFamily& f, std::size_t k) {
    const std::size_t n = f.dim();
    if (k < 1 || k > n) {
        throw InvalidIndex("generator_at: k out of range");
    }
    Matrix us(n, n);
    for (std::size_t j = 0; j < k; ++j) {
        for (std::size_t i = 0; i < n; ++i) us(i, j) = f.u(i, j) * f.s[j];
    }
    return matmul(us, transpose(f.v));
}

inline Vector apply_generator(const GeneratorFamily& f, const Vector& z) {
    Vector w = matvec_transposed(f.v, z);  // v^T z
    for (std::size_t i = 0; i < w.size(); ++i) w[i] *= f.s[i];
    return matvec(f.u, w);
}

// Additive-noise recovery instance y = x0 + eta with prior strength gamma.
// gamma = 0 is the maximum-likelihood setting, gamma = sigma^2 the exact
// posterior mode.
struct DenoiseProblem {
    GeneratorFamily family;
    double sigma;
    double gamma;

    DenoiseProblem(GeneratorFamily f, double sigma_, double gamma_)
        : family(std::move(f)), sigma(sigma_), gamma(gamma_) {
        if (!(sigma > 0.0) || !std::isfinite(sigma)) {
            throw InvalidValue("DenoiseProblem: sigma must be positive");
        }
        if (gamma < 0.0 || !std::isfinite(gamma)) {
            throw InvalidValue("DenoiseProblem: gamma must be >= 0");
        }
    }

    static DenoiseProblem mle(GeneratorFamily f, double sigma_) {
        return DenoiseProblem(std::move(f), sigma_, 0.0);
    }
    static DenoiseProblem map(GeneratorFamily f, double sigma_) {
        return DenoiseProblem(std::move(f), sigma_, sigma_ * sigma_);
    }
};

// Exact expected squared error of the rank-k latent estimate:
//   sum_{i<=k} s_i^2 (s_i^2 sigma^2 + gamma^2) / (s_i^2 + gamma)^2
//   + sum_{j>k} s_j^2
inline double closed_form_mse(const DenoiseProblem& p, std::size_t k) {
    const std::size_t n = p.family.dim();
    if (k < 1 || k > n) {
        throw InvalidIndex("closed_form_mse: k out of range");
    }
    const double sig2 = p.sigma * p.sigma;
    const double g = p.gamma;
    double acc = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        double s2 = p.family.s[i] * p.family.s[i];
        double denom = (s2 + g) * (s2 + g);
        acc += s2 * (s2 * sig2 + g * g) / denom;
    }
    for (std::size_t j = k; j < n; ++j) {
        acc += p.family.s[j] * p.family.s[j];
    }
    return acc;
}

struct OptimalKInfo {
    std::size_t k = 0;
    bool threshold_rule = false;  // true when max{k : s_k >= sqrt(sigma^2 - 2 gamma)} applied
    bool empty_candidate_set = false;  // threshold exceeded s_1; fell back to exhaustive argmin
};

namespace detail {

inline std::size_t exhaustive_argmin_k(const DenoiseProblem& p) {
    const std::size_t n = p.family.dim();
    std::size_t best = 1;
    double best_e = closed_form_mse(p, 1);
    for (std::size_t k = 2; k <= n; ++k) {
        double e = closed_form_mse(p, k);
        if (e < best_e) {  // strict: smallest k wins ties
            best_e = e;
            best = k;
        }
    }
    return best;
}

}  // namespace detail

// Risk-minimizing complexity. Under gamma <= sigma^2/2 this is the
// threshold rule max{k : s_k >= sqrt(sigma^2 - 2 gamma)}; outside that
// hypothesis, or when no singular value qualifies, it falls back to the
// exhaustive argmin of closed_form_mse. Ties break toward smaller k.
inline OptimalKInfo optimal_k_info(const DenoiseProblem& p) {
    const std::size_t n = p.family.dim();
    const double sig2 = p.sigma * p.sigma;
    OptimalKInfo info;

    if (p.gamma > sig2 / 2.0) {
        info.k = detail::exhaustive_argmin_k(p);
        return info;
    }

    const double threshold = std::sqrt(sig2 - 2.0 * p.gamma);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (p.family.s[i] >= threshold) k = i + 1;
    }
    if (k == 0) {
        info.k = detail::exhaustive_argmin_k(p);
        info.empty_candidate_set = true;
        return info;
    }
    // An exact tie E(k-1) == E(k) happens only when s_k sits exactly on the
    // threshold; prefer the smaller k in that case.
    while (k > 1 && closed_form_mse(p, k - 1) == closed_form_mse(p, k)) --k;
    info.k = k;
    info.threshold_rule = true;
    return info;
}

inline std::size_t optimal_k(const DenoiseProblem& p) { return optimal_k_info(p).k; }

// Rank-k latent estimate in rotated coordinates: with w = u^T y,
// zhat_i = s_i w_i / (s_i^2 + gamma) for i <= k, and xhat = u diag_k(s) zhat.
// This is the minimizer of 1/2 ||y - G_k pad(z)||^2 + gamma/2 ||z||^2 from
// the diagonalized problem, applied without forming G_k.
inline Vector linear_map_estimate(const DenoiseProblem& p, std::size_t k, const Vector& y) {
    const std::size_t n = p.family.dim();
    if (k < 1 || k > n) {
        throw InvalidIndex("linear_map_estimate: k out of range");
    }
    if (y.size() != n) {
        throw InvalidDimension("linear_map_estimate: y length does not match family dimension");
    }
    Vector w = matvec_transposed(p.family.u, y);
    Vector rotated(n, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        double s = p.family.s[i];
        double zi = s * w[i] / (s * s + p.gamma);
        rotated[i] = s * zi;
    }
    return matvec(p.family.u, rotated);
}

// Latent coefficients of the same estimate (length k), for callers that
// want zhat itself rather than the reconstruction.
inline Vector linear_map_latent(const DenoiseProblem& p, std::size_t k, const Vector& y) {
    const std::size_t n = p.family.dim();
    if (k < 1 || k > n) throw InvalidIndex("linear_map_latent: k out of range");
    if (y.size() != n) throw InvalidDimension("linear_map_latent: y length mismatch");
    Vector w = matvec_transposed(p.family.u, y);
    Vector z(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        double s = p.family.s[i];
        z[i] = s * w[i] / (s * s + p.gamma);
    }
    return z;
}

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
};

// Monte-Carlo risk of the rank-k estimator: draws z0 ~ N(0, I),
// x0 = G z0, y = x0 + eta, and averages ||xhat - x0||^2. Validates
// closed_form_mse independently of its derivation.
inline McEstimate mc_mse_oracle(const DenoiseProblem& p, std::size_t k, RandomSource& rng,
                                std::size_t trials) {
    if (trials < 2) {
        throw InvalidArgument("mc_mse_oracle: trials must be >= 2");
    }
    const std::size_t n = p.family.dim();
    if (k < 1 || k > n) {
        throw InvalidIndex("mc_mse_oracle: k out of range");
    }
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
        Vector z0 = gaussian_vector(rng, n, 1.0);
        Vector x0 = apply_generator(p.family, z0);
        Vector y = x0;
        for (std::size_t i = 0; i < n; ++i) y[i] += p.sigma * rng.next_gaussian();
        Vector xhat = linear_map_estimate(p, k, y);
        double err = squared_norm(sub(xhat, x0));
        sum += err;
        sum_sq += err * err;
    }
    double mean = sum / static_cast<double>(trials);
    double var = (sum_sq - sum * sum / static_cast<double>(trials)) /
                 static_cast<double>(trials - 1);
    var = std::max(var, 0.0);
    return McEstimate{mean, std::sqrt(var / static_cast<double>(trials))};
}

}  // namespace priorlab
