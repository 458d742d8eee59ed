#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "priorlab/errors.hpp"
#include "priorlab/rng.hpp"
#include "priorlab/tensor.hpp"
#include "priorlab/truncation.hpp"

namespace priorlab {

// Small tanh MLP variational autoencoder trained with a nested-dropout
// reconstruction term. Encoder: x -> tanh affine -> (mean, logvar) heads.
// Decoder mirrors it: z -> tanh affine -> affine. All gradients are
// hand-written; see vae_forward_backward.
struct TunableVae {
    std::size_t n = 0;       // signal dim
    std::size_t d = 0;       // latent dim
    std::size_t hidden = 0;  // trunk width

    Matrix w1;  // hidden x n
    Vector b1;
    Matrix wm;  // d x hidden, mean head
    Vector bm;
    Matrix wv;  // d x hidden, logvar head
    Vector bv;
    Matrix w2;  // hidden x d
    Vector b2;
    Matrix w3;  // n x hidden
    Vector b3;

    double lambda_reg = 1e-3;
    double lambda_drop = 0.1;

    std::uint64_t seed = 0;
    std::size_t steps_trained = 0;
    double step_size = 0.0;
};

// Logvar head is clamped so exp() stays sane during early training.
inline constexpr double kLogVarMin = -10.0;
inline constexpr double kLogVarMax = 10.0;

namespace detail {

// Weights i.i.d. N(0, 1/fan_in), biases zero.
inline Matrix init_weights(RandomSource& rng, std::size_t out_dim, std::size_t in_dim) {
    return gaussian_matrix(rng, out_dim, in_dim,
                           1.0 / std::sqrt(static_cast<double>(in_dim)));
}

inline Vector affine(const Matrix& w, const Vector& b, const Vector& x) {
    Vector y = matvec(w, x);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += b[i];
    return y;
}

inline Vector tanh_vec(const Vector& x) {
    Vector y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::tanh(x[i]);
    return y;
}

// m += u v^T
inline void add_outer(Matrix& m, const Vector& u, const Vector& v) {
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (u[i] == 0.0) continue;
        for (std::size_t j = 0; j < v.size(); ++j) m(i, j) += u[i] * v[j];
    }
}

}  // namespace detail

inline TunableVae make_vae(std::size_t n, std::size_t d, std::size_t hidden,
                           double lambda_reg, double lambda_drop, std::uint64_t seed) {
    if (n == 0 || d == 0 || hidden == 0) {
        throw InvalidDimension("make_vae: dimensions must be >= 1");
    }
    TunableVae m;
    m.n = n;
    m.d = d;
    m.hidden = hidden;
    m.lambda_reg = lambda_reg;
    m.lambda_drop = lambda_drop;
    m.seed = seed;
    RandomSource rng(seed, /*stream_id=*/1);
    m.w1 = detail::init_weights(rng, hidden, n);
    m.b1 = Vector(hidden, 0.0);
    m.wm = detail::init_weights(rng, d, hidden);
    m.bm = Vector(d, 0.0);
    m.wv = detail::init_weights(rng, d, hidden);
    m.bv = Vector(d, 0.0);
    m.w2 = detail::init_weights(rng, hidden, d);
    m.b2 = Vector(hidden, 0.0);
    m.w3 = detail::init_weights(rng, n, hidden);
    m.b3 = Vector(n, 0.0);
    return m;
}

struct VaeEncoding {
    Vector mu;
    Vector logvar;  // clamped
};

inline VaeEncoding vae_encode(const TunableVae& m, const Vector& x) {
    if (x.size() != m.n) throw InvalidDimension("vae_encode: input length mismatch");
    Vector h1 = detail::tanh_vec(detail::affine(m.w1, m.b1, x));
    Vector mu = detail::affine(m.wm, m.bm, h1);
    Vector lv = detail::affine(m.wv, m.bv, h1);
    for (double& v : lv) v = std::clamp(v, kLogVarMin, kLogVarMax);
    return VaeEncoding{std::move(mu), std::move(lv)};
}

inline Vector vae_decode(const TunableVae& m, const Vector& z) {
    if (z.size() != m.d) throw InvalidDimension("vae_decode: latent length mismatch");
    Vector h2 = detail::tanh_vec(detail::affine(m.w2, m.b2, z));
    return detail::affine(m.w3, m.b3, h2);
}

// D(z_{down k})
inline Vector vae_decode_truncated(const TunableVae& m, const Vector& z, std::size_t k) {
    return vae_decode(m, truncate(z, k));
}

struct VaeLossParts {
    double total = 0.0;
    double rec = 0.0;
    double reg = 0.0;
    double drop = 0.0;
};

struct VaeGrads {
    Matrix w1, wm, wv, w2, w3;
    Vector b1, bm, bv, b2, b3;
};

inline VaeGrads zero_vae_grads(const TunableVae& m) {
    VaeGrads g;
    g.w1 = Matrix(m.hidden, m.n);
    g.b1 = Vector(m.hidden, 0.0);
    g.wm = Matrix(m.d, m.hidden);
    g.bm = Vector(m.d, 0.0);
    g.wv = Matrix(m.d, m.hidden);
    g.bv = Vector(m.d, 0.0);
    g.w2 = Matrix(m.hidden, m.d);
    g.b2 = Vector(m.hidden, 0.0);
    g.w3 = Matrix(m.n, m.hidden);
    g.b3 = Vector(m.n, 0.0);
    return g;
}

// Loss and (optionally) gradients for one example with the latent noise eps
// pinned by the caller. Both reconstruction terms reuse the same latent
// sample; only the dropout branch sees the truncation.
//
//   rec  = ||x - D(z)||^2,     z = mu + exp(logvar/2) .* eps
//   reg  = KL(N(mu, diag(e^logvar)) || N(0, I))
//   drop = ||x - D(z_{down k})||^2
//   total = rec + lambda_reg * reg + lambda_drop * drop
inline VaeLossParts vae_forward_backward(const TunableVae& m, const Vector& x, std::size_t k,
                                         const Vector& eps, VaeGrads* grads) {
    if (x.size() != m.n) throw InvalidDimension("vae_loss: input length mismatch");
    if (eps.size() != m.d) throw InvalidDimension("vae_loss: noise length mismatch");
    if (k < 1 || k > m.d) throw InvalidIndex("vae_loss: k out of range");

    // Encoder forward.
    Vector h1p = detail::affine(m.w1, m.b1, x);
    Vector h1 = detail::tanh_vec(h1p);
    Vector mu = detail::affine(m.wm, m.bm, h1);
    Vector lv_pre = detail::affine(m.wv, m.bv, h1);
    Vector lv(lv_pre.size());
    for (std::size_t i = 0; i < lv.size(); ++i) lv[i] = std::clamp(lv_pre[i], kLogVarMin, kLogVarMax);

    Vector std_dev(m.d);
    Vector z(m.d);
    for (std::size_t i = 0; i < m.d; ++i) {
        std_dev[i] = std::exp(0.5 * lv[i]);
        z[i] = mu[i] + std_dev[i] * eps[i];
    }
    Vector zt = truncate(z, k);

    // Decoder forward, both branches.
    Vector h2p_a = detail::affine(m.w2, m.b2, z);
    Vector h2_a = detail::tanh_vec(h2p_a);
    Vector xr_a = detail::affine(m.w3, m.b3, h2_a);

    Vector h2p_b = detail::affine(m.w2, m.b2, zt);
    Vector h2_b = detail::tanh_vec(h2p_b);
    Vector xr_b = detail::affine(m.w3, m.b3, h2_b);

    VaeLossParts parts;
    parts.rec = squared_norm(sub(x, xr_a));
    parts.drop = squared_norm(sub(x, xr_b));
    for (std::size_t i = 0; i < m.d; ++i) {
        parts.reg += 0.5 * (std::exp(lv[i]) + mu[i] * mu[i] - 1.0 - lv[i]);
    }
    parts.total = parts.rec + m.lambda_reg * parts.reg + m.lambda_drop * parts.drop;
    if (!grads) return parts;

    VaeGrads& g = *grads;
    Vector dz(m.d, 0.0);

    // Decoder backward for one branch; accumulates weight grads and returns
    // the gradient at the branch's latent input.
    auto decoder_backward = [&](const Vector& zin, const Vector& h2p, const Vector& h2,
                                const Vector& xr, double weight) {
        Vector dxr(m.n);
        for (std::size_t i = 0; i < m.n; ++i) dxr[i] = weight * 2.0 * (xr[i] - x[i]);
        detail::add_outer(g.w3, dxr, h2);
        for (std::size_t i = 0; i < m.n; ++i) g.b3[i] += dxr[i];
        Vector dh2 = matvec_transposed(m.w3, dxr);
        for (std::size_t i = 0; i < m.hidden; ++i) dh2[i] *= 1.0 - h2[i] * h2[i];
        detail::add_outer(g.w2, dh2, zin);
        for (std::size_t i = 0; i < m.hidden; ++i) g.b2[i] += dh2[i];
        (void)h2p;
        return matvec_transposed(m.w2, dh2);
    };

    Vector dz_rec = decoder_backward(z, h2p_a, h2_a, xr_a, 1.0);
    Vector dz_drop = decoder_backward(zt, h2p_b, h2_b, xr_b, m.lambda_drop);
    for (std::size_t i = 0; i < m.d; ++i) {
        dz[i] += dz_rec[i];
        if (i < k) dz[i] += dz_drop[i];  // truncation zeroes the tail gradient
    }

    Vector dmu(m.d), dlv(m.d);
    for (std::size_t i = 0; i < m.d; ++i) {
        dmu[i] = dz[i] + m.lambda_reg * mu[i];
        double dlv_kl = m.lambda_reg * 0.5 * (std::exp(lv[i]) - 1.0);
        double dlv_z = dz[i] * eps[i] * std_dev[i] * 0.5;
        dlv[i] = dlv_kl + dlv_z;
        // Clamp: no gradient outside the active range.
        if (lv_pre[i] <= kLogVarMin || lv_pre[i] >= kLogVarMax) dlv[i] = 0.0;
    }

    detail::add_outer(g.wm, dmu, h1);
    for (std::size_t i = 0; i < m.d; ++i) g.bm[i] += dmu[i];
    detail::add_outer(g.wv, dlv, h1);
    for (std::size_t i = 0; i < m.d; ++i) g.bv[i] += dlv[i];

    Vector dh1 = matvec_transposed(m.wm, dmu);
    Vector dh1v = matvec_transposed(m.wv, dlv);
    for (std::size_t i = 0; i < m.hidden; ++i) {
        dh1[i] = (dh1[i] + dh1v[i]) * (1.0 - h1[i] * h1[i]);
    }
    detail::add_outer(g.w1, dh1, x);
    for (std::size_t i = 0; i < m.hidden; ++i) g.b1[i] += dh1[i];

    return parts;
}

// Spec-facing loss: draws the reparameterization noise from rng.
inline VaeLossParts vae_loss(const TunableVae& m, const Vector& x, std::size_t k,
                             RandomSource& rng) {
    Vector eps = gaussian_vector(rng, m.d, 1.0);
    return vae_forward_backward(m, x, k, eps, nullptr);
}

struct VaeTrainConfig {
    std::size_t n = 0;
    std::size_t d = 0;
    std::size_t hidden = 32;
    std::size_t epochs = 1;
    double step_size = 1e-3;
    double momentum = 0.0;
    double lambda_reg = 1e-3;
    double lambda_drop = 0.1;
    double law_p = 0.1;  // truncated-geometric success parameter over {1..d}
    std::uint64_t seed = 0;
};

struct VaeTrainResult {
    TunableVae model;
    Vector loss_trace;  // one total-loss value per SGD step
};

namespace detail {

inline void sgd_update(Matrix& w, Matrix& vel, const Matrix& g, double lr, double mom) {
    for (std::size_t i = 0; i < w.size(); ++i) {
        vel.data()[i] = mom * vel.data()[i] + g.data()[i];
        w.data()[i] -= lr * vel.data()[i];
    }
}

inline void sgd_update(Vector& w, Vector& vel, const Vector& g, double lr, double mom) {
    for (std::size_t i = 0; i < w.size(); ++i) {
        vel[i] = mom * vel[i] + g[i];
        w[i] -= lr * vel[i];
    }
}

}  // namespace detail

// Per-example SGD on vae_loss with k resampled per example per step.
// Deterministic: iteration order, draws, and updates are all functions of
// the config seed.
inline VaeTrainResult vae_train(const std::vector<Vector>& data, const VaeTrainConfig& cfg) {
    if (data.empty()) throw InvalidArgument("vae_train: data must be nonempty");
    for (const Vector& x : data) {
        if (x.size() != cfg.n) throw InvalidDimension("vae_train: example length mismatch");
    }
    TunableVae m = make_vae(cfg.n, cfg.d, cfg.hidden, cfg.lambda_reg, cfg.lambda_drop, cfg.seed);
    m.step_size = cfg.step_size;
    TruncationLaw law(cfg.d, cfg.law_p);
    RandomSource rng(cfg.seed, /*stream_id=*/2);

    VaeGrads vel = zero_vae_grads(m);
    Vector trace;
    trace.reserve(cfg.epochs * data.size());

    std::size_t step = 0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (const Vector& x : data) {
            std::size_t k = sample_k(law, rng);
            Vector eps = gaussian_vector(rng, cfg.d, 1.0);
            VaeGrads g = zero_vae_grads(m);
            VaeLossParts parts = vae_forward_backward(m, x, k, eps, &g);
            if (!std::isfinite(parts.total)) {
                throw TrainingDiverged(step, "vae_train: loss is non-finite");
            }
            detail::sgd_update(m.w1, vel.w1, g.w1, cfg.step_size, cfg.momentum);
            detail::sgd_update(m.b1, vel.b1, g.b1, cfg.step_size, cfg.momentum);
            detail::sgd_update(m.wm, vel.wm, g.wm, cfg.step_size, cfg.momentum);
            detail::sgd_update(m.bm, vel.bm, g.bm, cfg.step_size, cfg.momentum);
            detail::sgd_update(m.wv, vel.wv, g.wv, cfg.step_size, cfg.momentum);
            detail::sgd_update(m.bv, vel.bv, g.bv, cfg.step_size, cfg.momentum);
            detail::sgd_update(m.w2, vel.w2, g.w2, cfg.step_size, cfg.momentum);
            detail::sgd_update(m.b2, vel.b2, g.b2, cfg.step_size, cfg.momentum);
            detail::sgd_update(m.w3, vel.w3, g.w3, cfg.step_size, cfg.momentum);
            detail::sgd_update(m.b3, vel.b3, g.b3, cfg.step_size, cfg.momentum);
            trace.push_back(parts.total);
            ++step;
        }
    }
    m.steps_trained = step;
    return VaeTrainResult{std::move(m), std::move(trace)};
}

// Mean ||x - D(truncate(E_mu(x), k))||^2 over a set; deterministic
// (uses the mean head, no sampling).
inline double vae_eval_truncated_error(const TunableVae& m, const std::vector<Vector>& data,
                                       std::size_t k) {
    if (data.empty()) throw InvalidArgument("vae_eval_truncated_error: empty data");
    double acc = 0.0;
    for (const Vector& x : data) {
        VaeEncoding e = vae_encode(m, x);
        Vector xr = vae_decode_truncated(m, e.mu, k);
        acc += squared_norm(sub(x, xr));
    }
    return acc / static_cast<double>(data.size());
}

}  // namespace priorlab
