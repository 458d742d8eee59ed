#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "priorlab/errors.hpp"
#include "priorlab/rng.hpp"

namespace priorlab {

// Dense row-major matrix of doubles. Deliberately minimal: the whole
// library runs at desk scale (n <= a few hundred), so plain loops beat any
// dependency here.
class Matrix {
public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    static Matrix diagonal(const Vector& d) {
        Matrix m(d.size(), d.size());
        for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::size_t size() const { return data_.size(); }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline bool all_finite(const Vector& v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

inline bool all_finite(const Matrix& m) {
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (!std::isfinite(m.data()[i])) return false;
    }
    return true;
}

inline Vector matvec(const Matrix& a, const Vector& x) {
    if (x.size() != a.cols()) {
        throw InvalidDimension("matvec: vector length does not match matrix columns");
    }
    Vector y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) acc += a(i, j) * x[j];
        y[i] = acc;
    }
    return y;
}

// y = A^T x without forming the transpose.
inline Vector matvec_transposed(const Matrix& a, const Vector& x) {
    if (x.size() != a.rows()) {
        throw InvalidDimension("matvec_transposed: vector length does not match matrix rows");
    }
    Vector y(a.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) y[j] += a(i, j) * x[i];
    }
    return y;
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw InvalidDimension("matmul: inner dimensions do not match");
    }
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    }
    return c;
}

inline Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    }
    return t;
}

inline double dot(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) {
        throw InvalidDimension("dot: length mismatch");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

inline double squared_norm(const Vector& v) { return dot(v, v); }

inline double norm(const Vector& v) { return std::sqrt(squared_norm(v)); }

inline Vector add(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw InvalidDimension("add: length mismatch");
    Vector c(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] + b[i];
    return c;
}

inline Vector sub(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw InvalidDimension("sub: length mismatch");
    Vector c(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] - b[i];
    return c;
}

inline Vector scale(const Vector& a, double s) {
    Vector c(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) c[i] = s * a[i];
    return c;
}

// a += s * b
inline void axpy(Vector& a, double s, const Vector& b) {
    if (a.size() != b.size()) throw InvalidDimension("axpy: length mismatch");
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += s * b[i];
}

inline double frobenius_norm(const Matrix& m) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) acc += m.data()[i] * m.data()[i];
    return std::sqrt(acc);
}

inline double squared_frobenius_norm(const Matrix& m) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) acc += m.data()[i] * m.data()[i];
    return acc;
}

inline double max_abs(const Matrix& m) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) acc = std::max(acc, std::abs(m.data()[i]));
    return acc;
}

inline double max_abs(const Vector& v) {
    double acc = 0.0;
    for (double x : v) acc = std::max(acc, std::abs(x));
    return acc;
}

inline double trace(const Matrix& m) {
    std::size_t n = std::min(m.rows(), m.cols());
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += m(i, i);
    return acc;
}

inline Matrix gaussian_matrix(RandomSource& rng, std::size_t rows, std::size_t cols,
                              double sigma) {
    if (rows == 0 || cols == 0) {
        throw InvalidDimension("gaussian_matrix: dimensions must be >= 1");
    }
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = sigma * rng.next_gaussian();
    return m;
}

}  // namespace priorlab
