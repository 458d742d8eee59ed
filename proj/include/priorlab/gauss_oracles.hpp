#pragma once

#include <cmath>

#include "priorlab/errors.hpp"
#include "priorlab/rng.hpp"
#include "priorlab/svd.hpp"
#include "priorlab/tensor.hpp"

namespace priorlab {

// Monte-Carlo estimate of E ||M x||^2 over x ~ N(0, I). Converges to the
// squared Frobenius norm of M.
inline double mc_frobenius_oracle(const Matrix& m, RandomSource& rng, std::size_t samples) {
    if (samples == 0) {
        throw InvalidArgument("mc_frobenius_oracle: samples must be >= 1");
    }
    double acc = 0.0;
    for (std::size_t it = 0; it < samples; ++it) {
        Vector x = gaussian_vector(rng, m.cols(), 1.0);
        acc += squared_norm(matvec(m, x));
    }
    return acc / static_cast<double>(samples);
}

namespace detail {

// Factor f with f f^T = cov, via the SVD of the (symmetrized) input.
// Rejects inputs that are visibly asymmetric or not positive semi-definite.
inline Matrix psd_factor(const Matrix& cov) {
    if (cov.rows() != cov.cols()) {
        throw InvalidValue("psd_factor: covariance must be square");
    }
    double scale = max_abs(cov);
    for (std::size_t i = 0; i < cov.rows(); ++i) {
        for (std::size_t j = i + 1; j < cov.cols(); ++j) {
            if (std::abs(cov(i, j) - cov(j, i)) > 1e-10 * (scale + 1.0)) {
                throw InvalidValue("psd_factor: covariance is not symmetric");
            }
        }
    }
    SvdResult r = svd(cov);
    Matrix f = r.u;
    for (std::size_t j = 0; j < r.s.size(); ++j) {
        double root = std::sqrt(r.s[j]);
        for (std::size_t i = 0; i < f.rows(); ++i) f(i, j) *= root;
    }
    // For symmetric PSD input, u diag(s) u^T reproduces cov; a negative
    // eigenvalue shows up here as a large residual because the SVD folds
    // its sign into v.
    Matrix check = matmul(f, transpose(f));
    double err = 0.0;
    for (std::size_t i = 0; i < check.size(); ++i) {
        err = std::max(err, std::abs(check.data()[i] - cov.data()[i]));
    }
    if (err > 1e-8 * (scale + 1.0)) {
        throw InvalidValue("psd_factor: covariance is not positive semi-definite");
    }
    return f;
}

}  // namespace detail

// Monte-Carlo estimate of E ||M x||^2 over x ~ N(0, cov). Converges to
// Tr(M cov M^T).
inline double mc_covariance_oracle(const Matrix& m, const Matrix& cov, RandomSource& rng,
                                   std::size_t samples) {
    if (samples == 0) {
        throw InvalidArgument("mc_covariance_oracle: samples must be >= 1");
    }
    if (m.cols() != cov.rows()) {
        throw InvalidDimension("mc_covariance_oracle: dimensions not conformable");
    }
    Matrix f = detail::psd_factor(cov);
    double acc = 0.0;
    for (std::size_t it = 0; it < samples; ++it) {
        Vector g = gaussian_vector(rng, f.cols(), 1.0);
        Vector x = matvec(f, g);
        acc += squared_norm(matvec(m, x));
    }
    return acc / static_cast<double>(samples);
}

// Exact targets of the two oracles, used by tests and the theory table.
inline double frobenius_target(const Matrix& m) { return squared_frobenius_norm(m); }

inline double covariance_target(const Matrix& m, const Matrix& cov) {
    return trace(matmul(matmul(m, cov), transpose(m)));
}

// Analytic variance of the quadratic form ||M x||^2 = x^T (M^T M) x for
// x ~ N(0, cov): Var = 2 Tr((M^T M cov)^2). Tests use it to form standard
// errors without touching the estimator under test.
inline double quadratic_form_variance(const Matrix& m, const Matrix& cov) {
    Matrix q = matmul(transpose(m), m);
    Matrix qc = matmul(q, cov);
    Matrix sq = matmul(qc, qc);
    return 2.0 * trace(sq);
}

}  // namespace priorlab
