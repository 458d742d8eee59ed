#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>

#include "priorlab/errors.hpp"
#include "priorlab/tensor.hpp"

namespace priorlab {

struct SvdResult {
    Matrix u;  // rows x min(rows, cols), orthonormal columns
    Vector s;  // min(rows, cols), non-increasing, nonnegative
    Matrix v;  // cols x min(rows, cols), orthonormal columns
};

namespace detail {

// Orthonormalize column j of u against columns [0, j) and the canonical
// basis, used to replace directions lost to (numerically) zero singular
// values. Two Gram-Schmidt passes keep the result orthogonal to working
// precision.
inline void complete_column(Matrix& u, std::size_t j) {
    const std::size_t m = u.rows();
    for (std::size_t cand = 0; cand < m; ++cand) {
        Vector w(m, 0.0);
        w[cand] = 1.0;
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t c = 0; c < j; ++c) {
                double proj = 0.0;
                for (std::size_t i = 0; i < m; ++i) proj += w[i] * u(i, c);
                for (std::size_t i = 0; i < m; ++i) w[i] -= proj * u(i, c);
            }
        }
        double nw = norm(w);
        if (nw > 0.5) {
            for (std::size_t i = 0; i < m; ++i) u(i, j) = w[i] / nw;
            return;
        }
    }
    throw InvalidValue("svd: failed to complete orthonormal basis");
}

// One-sided Jacobi on the columns of w, accumulating the right rotations
// into v. Terminates when every column pair is orthogonal to within tol
// relative to the column norms.
inline void jacobi_sweeps(Matrix& w, Matrix& v) {
    const std::size_t n = w.cols();
    const std::size_t m = w.rows();
    const double tol = 1e-15;
    const int max_sweeps = 64;

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double max_rel = 0.0;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double alpha = 0.0, beta = 0.0, gamma = 0.0;
                for (std::size_t i = 0; i < m; ++i) {
                    double wp = w(i, p), wq = w(i, q);
                    alpha += wp * wp;
                    beta += wq * wq;
                    gamma += wp * wq;
                }
                if (alpha == 0.0 || beta == 0.0) continue;
                double rel = std::abs(gamma) / std::sqrt(alpha * beta);
                max_rel = std::max(max_rel, rel);
                if (rel <= tol) continue;

                double zeta = (beta - alpha) / (2.0 * gamma);
                double t = ((zeta >= 0.0) ? 1.0 : -1.0) /
                           (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                double c = 1.0 / std::sqrt(1.0 + t * t);
                double s = c * t;

                for (std::size_t i = 0; i < m; ++i) {
                    double wp = w(i, p), wq = w(i, q);
                    w(i, p) = c * wp - s * wq;
                    w(i, q) = s * wp + c * wq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    double vp = v(i, p), vq = v(i, q);
                    v(i, p) = c * vp - s * vq;
                    v(i, q) = s * vp + c * vq;
                }
            }
        }
        if (max_rel <= tol) break;
    }
}

inline SvdResult svd_tall(const Matrix& a) {
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();  // m >= n here

    Matrix w = a;
    Matrix v = Matrix::identity(n);
    jacobi_sweeps(w, v);

    Vector s(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < m; ++i) acc += w(i, j) * w(i, j);
        s[j] = std::sqrt(acc);
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return s[i] > s[j]; });

    SvdResult r;
    r.u = Matrix(m, n);
    r.v = Matrix(n, n);
    r.s = Vector(n, 0.0);

    double s_max = s.empty() ? 0.0 : s[order[0]];
    double drop_tol = s_max * 1e-14;

    for (std::size_t j = 0; j < n; ++j) {
        std::size_t src = order[j];
        r.s[j] = s[src];
        for (std::size_t i = 0; i < n; ++i) r.v(i, j) = v(i, src);
        if (s[src] > drop_tol && s[src] > 0.0) {
            for (std::size_t i = 0; i < m; ++i) r.u(i, j) = w(i, src) / s[src];
        } else {
            // Direction is numerical noise; rebuild it orthonormally.
            complete_column(r.u, j);
        }
    }
    return r;
}

}  // namespace detail

// Thin SVD a = u * diag(s) * v^T via one-sided Jacobi. Accuracy is ample
// for the desk-scale sizes this library targets (n <= 256).
inline SvdResult svd(const Matrix& a) {
    if (a.rows() == 0 || a.cols() == 0) {
        throw InvalidDimension("svd: matrix must be non-empty");
    }
    if (!all_finite(a)) {
        throw InvalidValue("svd: input has non-finite entries");
    }
    if (a.rows() >= a.cols()) {
        return detail::svd_tall(a);
    }
    SvdResult r = detail::svd_tall(transpose(a));
    std::swap(r.u, r.v);
    return r;
}

// u * diag(s) * v^T
inline Matrix svd_reconstruct(const SvdResult& r) {
    Matrix us = r.u;
    for (std::size_t j = 0; j < r.s.size(); ++j) {
        for (std::size_t i = 0; i < us.rows(); ++i) us(i, j) *= r.s[j];
    }
    return matmul(us, transpose(r.v));
}

}  // namespace priorlab
