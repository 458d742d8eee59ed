#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "priorlab/errors.hpp"
#include "priorlab/rng.hpp"
#include "priorlab/tensor.hpp"

namespace priorlab {

enum class OperatorKind {
    dense_gaussian,
    inpaint_mask,
    identity,
    phaseless_gaussian,
    circular_blur,
    // Rademacher sign flip, circular blur, keep-first-m subsampling, then
    // magnitude. Reuses the blur machinery with a signed diagonal in front.
    rademacher_phaseless,
};

inline const char* operator_kind_name(OperatorKind k) {
    switch (k) {
        case OperatorKind::dense_gaussian: return "dense_gaussian";
        case OperatorKind::inpaint_mask: return "inpaint_mask";
        case OperatorKind::identity: return "identity";
        case OperatorKind::phaseless_gaussian: return "phaseless_gaussian";
        case OperatorKind::circular_blur: return "circular_blur";
        case OperatorKind::rademacher_phaseless: return "rademacher_phaseless";
    }
    return "unknown";
}

// Tagged measurement map A : R^n -> R^m. Immutable after construction;
// apply() and residual_gradient() are reentrant.
struct ForwardOperator {
    OperatorKind kind = OperatorKind::identity;
    std::size_t m = 0;
    std::size_t n = 0;

    Matrix a;                       // dense_gaussian / phaseless_gaussian
    std::vector<std::size_t> keep;  // inpaint_mask: kept coordinate indices, ascending
    Vector kernel;                  // blur kinds: ksize x ksize taps, row-major
    std::size_t side = 0;           // blur kinds: image is side x side, row-major
    std::size_t ksize = 0;
    Vector sign_flip;               // rademacher_phaseless: +-1 per coordinate

    // Defined below; member functions keep the call sites unambiguous when
    // <tuple> (std::apply) is in scope.
    Vector apply(const Vector& x) const;
    Vector residual_gradient(const Vector& x, const Vector& y) const;
};

inline ForwardOperator make_identity(std::size_t n) {
    ForwardOperator op;
    op.kind = OperatorKind::identity;
    op.m = op.n = n;
    return op;
}

// Entries i.i.d. N(0, 1/m) so that E ||A x||^2 = ||x||^2.
inline ForwardOperator make_dense_gaussian(std::size_t m, std::size_t n, RandomSource& rng) {
    if (m == 0 || n == 0) throw InvalidDimension("make_dense_gaussian: m, n must be >= 1");
    ForwardOperator op;
    op.kind = OperatorKind::dense_gaussian;
    op.m = m;
    op.n = n;
    op.a = gaussian_matrix(rng, m, n, 1.0 / std::sqrt(static_cast<double>(m)));
    return op;
}

inline ForwardOperator make_phaseless_gaussian(std::size_t m, std::size_t n, RandomSource& rng) {
    ForwardOperator op = make_dense_gaussian(m, n, rng);
    op.kind = OperatorKind::phaseless_gaussian;
    return op;
}

inline ForwardOperator make_inpaint_from_mask(const std::vector<bool>& keep_mask) {
    ForwardOperator op;
    op.kind = OperatorKind::inpaint_mask;
    op.n = keep_mask.size();
    for (std::size_t i = 0; i < keep_mask.size(); ++i) {
        if (keep_mask[i]) op.keep.push_back(i);
    }
    if (op.keep.empty()) throw InvalidArgument("make_inpaint_from_mask: mask keeps nothing");
    op.m = op.keep.size();
    return op;
}

// i.i.d. Bernoulli(keep_prob) mask. Coordinate 0 is forced on if the draw
// would otherwise keep nothing, so m >= 1 always holds.
inline ForwardOperator make_inpaint(std::size_t n, double keep_prob, RandomSource& rng) {
    if (n == 0) throw InvalidDimension("make_inpaint: n must be >= 1");
    if (!(keep_prob > 0.0) || keep_prob > 1.0) {
        throw InvalidArgument("make_inpaint: keep_prob must be in (0, 1]");
    }
    std::vector<bool> mask(n, false);
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
        mask[i] = rng.next_uniform() < keep_prob;
        any = any || mask[i];
    }
    if (!any) mask[0] = true;
    return make_inpaint_from_mask(mask);
}

namespace detail {

inline Vector gaussian_kernel_2d(std::size_t ksize, double std_dev) {
    Vector k(ksize * ksize, 0.0);
    const double h = static_cast<double>(ksize / 2);
    double sum = 0.0;
    for (std::size_t a = 0; a < ksize; ++a) {
        for (std::size_t b = 0; b < ksize; ++b) {
            double da = static_cast<double>(a) - h;
            double db = static_cast<double>(b) - h;
            double v = std::exp(-(da * da + db * db) / (2.0 * std_dev * std_dev));
            k[a * ksize + b] = v;
            sum += v;
        }
    }
    for (double& v : k) v /= sum;
    return k;
}

// Circular 2-D convolution of a side x side image (row-major) with a
// ksize x ksize kernel: out(i,j) = sum_{a,b} K(a,b) x(i-a+h, j-b+h) with
// wrap-around indexing and h = ksize/2. The adjoint is the same operation
// with the kernel flipped in both axes.
inline Vector circular_conv2d(const Vector& x, const Vector& kernel, std::size_t side,
                              std::size_t ksize) {
    Vector out(side * side, 0.0);
    const long h = static_cast<long>(ksize / 2);
    const long s = static_cast<long>(side);
    for (long i = 0; i < s; ++i) {
        for (long j = 0; j < s; ++j) {
            double acc = 0.0;
            for (long a = 0; a < static_cast<long>(ksize); ++a) {
                long ii = (i - a + h) % s;
                if (ii < 0) ii += s;
                for (long b = 0; b < static_cast<long>(ksize); ++b) {
                    long jj = (j - b + h) % s;
                    if (jj < 0) jj += s;
                    acc += kernel[static_cast<std::size_t>(a) * ksize +
                                  static_cast<std::size_t>(b)] *
                           x[static_cast<std::size_t>(ii) * side + static_cast<std::size_t>(jj)];
                }
            }
            out[static_cast<std::size_t>(i) * side + static_cast<std::size_t>(j)] = acc;
        }
    }
    return out;
}

inline Vector flip_kernel(const Vector& kernel, std::size_t ksize) {
    Vector f(kernel.size());
    for (std::size_t a = 0; a < ksize; ++a) {
        for (std::size_t b = 0; b < ksize; ++b) {
            f[a * ksize + b] = kernel[(ksize - 1 - a) * ksize + (ksize - 1 - b)];
        }
    }
    return f;
}

}  // namespace detail

// Circular Gaussian blur over an n x n image flattened row-major. ksize
// must be odd; ksize = 1 reduces to the identity.
inline ForwardOperator build_blur(std::size_t n_side, std::size_t ksize, double std_dev) {
    if (ksize % 2 == 0) throw InvalidArgument("build_blur: ksize must be odd");
    if (ksize == 0 || ksize > n_side) throw InvalidArgument("build_blur: need 1 <= ksize <= side");
    if (!(std_dev > 0.0)) throw InvalidArgument("build_blur: std must be positive");
    ForwardOperator op;
    op.kind = OperatorKind::circular_blur;
    op.side = n_side;
    op.ksize = ksize;
    op.n = op.m = n_side * n_side;
    op.kernel = detail::gaussian_kernel_2d(ksize, std_dev);
    return op;
}

// Phase retrieval variant: |subsample_m(kernel * (sign .* x))| with random
// unit-normalized Gaussian taps and Rademacher signs.
inline ForwardOperator make_rademacher_phaseless(std::size_t n_side, std::size_t ksize,
                                                 std::size_t m, RandomSource& rng) {
    if (ksize % 2 == 0) throw InvalidArgument("make_rademacher_phaseless: ksize must be odd");
    if (ksize == 0 || ksize > n_side) {
        throw InvalidArgument("make_rademacher_phaseless: need 1 <= ksize <= side");
    }
    const std::size_t n = n_side * n_side;
    if (m == 0 || m > n) throw InvalidArgument("make_rademacher_phaseless: need 1 <= m <= n");
    ForwardOperator op;
    op.kind = OperatorKind::rademacher_phaseless;
    op.side = n_side;
    op.ksize = ksize;
    op.n = n;
    op.m = m;
    op.kernel = Vector(ksize * ksize);
    double nrm = 0.0;
    for (double& t : op.kernel) {
        t = rng.next_gaussian();
        nrm += t * t;
    }
    nrm = std::sqrt(nrm);
    for (double& t : op.kernel) t /= nrm;
    op.sign_flip = Vector(n);
    for (double& s : op.sign_flip) s = rng.next_uniform() < 0.5 ? -1.0 : 1.0;
    return op;
}

inline Vector ForwardOperator::apply(const Vector& x) const {
    if (x.size() != n) {
        throw InvalidDimension("apply: input length does not match operator");
    }
    switch (kind) {
        case OperatorKind::identity:
            return x;
        case OperatorKind::dense_gaussian:
            return matvec(a, x);
        case OperatorKind::phaseless_gaussian: {
            Vector y = matvec(a, x);
            for (double& v : y) v = std::abs(v);
            return y;
        }
        case OperatorKind::inpaint_mask: {
            Vector y(m);
            for (std::size_t i = 0; i < m; ++i) y[i] = x[keep[i]];
            return y;
        }
        case OperatorKind::circular_blur:
            return detail::circular_conv2d(x, kernel, side, ksize);
        case OperatorKind::rademacher_phaseless: {
            Vector u(n);
            for (std::size_t i = 0; i < n; ++i) u[i] = sign_flip[i] * x[i];
            Vector v = detail::circular_conv2d(u, kernel, side, ksize);
            Vector y(m);
            for (std::size_t i = 0; i < m; ++i) y[i] = std::abs(v[i]);
            return y;
        }
    }
    throw InvalidArgument("apply: unknown operator kind");
}

struct Measurement {
    Vector y;
    double sigma = 0.0;
    const ForwardOperator* op = nullptr;
};

// y = A(x) + eta, eta ~ N(0, sigma^2 I_m).
inline Measurement measure(const ForwardOperator& op, const Vector& x, double sigma,
                           RandomSource& rng) {
    if (sigma < 0.0 || !std::isfinite(sigma)) {
        throw InvalidValue("measure: sigma must be finite and >= 0");
    }
    Vector y = op.apply(x);
    for (double& v : y) v += sigma * rng.next_gaussian();
    return Measurement{std::move(y), sigma, &op};
}

namespace detail {

inline double sign0(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace detail

// grad_x ||y - A(x)||^2. For the magnitude kinds this is the subgradient
// with sign(0) = 0 at the kinks.
inline Vector ForwardOperator::residual_gradient(const Vector& x, const Vector& y) const {
    if (x.size() != n || y.size() != m) {
        throw InvalidDimension("residual_gradient: dimension mismatch");
    }
    switch (kind) {
        case OperatorKind::identity: {
            Vector g(n);
            for (std::size_t i = 0; i < n; ++i) g[i] = 2.0 * (x[i] - y[i]);
            return g;
        }
        case OperatorKind::dense_gaussian: {
            Vector r = matvec(a, x);
            for (std::size_t i = 0; i < m; ++i) r[i] = 2.0 * (r[i] - y[i]);
            return matvec_transposed(a, r);
        }
        case OperatorKind::phaseless_gaussian: {
            Vector ax = matvec(a, x);
            Vector r(m);
            for (std::size_t i = 0; i < m; ++i) {
                r[i] = 2.0 * (std::abs(ax[i]) - y[i]) * detail::sign0(ax[i]);
            }
            return matvec_transposed(a, r);
        }
        case OperatorKind::inpaint_mask: {
            Vector g(n, 0.0);
            for (std::size_t i = 0; i < m; ++i) {
                g[keep[i]] = 2.0 * (x[keep[i]] - y[i]);
            }
            return g;
        }
        case OperatorKind::circular_blur: {
            Vector r = detail::circular_conv2d(x, kernel, side, ksize);
            for (std::size_t i = 0; i < m; ++i) r[i] = 2.0 * (r[i] - y[i]);
            return detail::circular_conv2d(r, detail::flip_kernel(kernel, ksize), side,
                                           ksize);
        }
        case OperatorKind::rademacher_phaseless: {
            Vector u(n);
            for (std::size_t i = 0; i < n; ++i) u[i] = sign_flip[i] * x[i];
            Vector v = detail::circular_conv2d(u, kernel, side, ksize);
            Vector r(n, 0.0);
            for (std::size_t i = 0; i < m; ++i) {
                r[i] = 2.0 * (std::abs(v[i]) - y[i]) * detail::sign0(v[i]);
            }
            Vector g = detail::circular_conv2d(r, detail::flip_kernel(kernel, ksize),
                                               side, ksize);
            for (std::size_t i = 0; i < n; ++i) g[i] *= sign_flip[i];
            return g;
        }
    }
    throw InvalidArgument("residual_gradient: unknown operator kind");
}

// ||y - A(x)||^2, the data-consistency objective all solvers share.
inline double residual_value(const ForwardOperator& op, const Vector& x, const Vector& y) {
    return squared_norm(sub(y, op.apply(x)));
}

}  // namespace priorlab
