#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <vector>

#include "priorlab/errors.hpp"
#include "priorlab/rng.hpp"
#include "priorlab/tensor.hpp"
#include "priorlab/truncation.hpp"

namespace priorlab {

// Variance schedule tables for T steps, 1-based t throughout the API.
// alpha_bar(0) = 1 by convention, which makes ddpm_sigma(1) = 0.
struct NoiseSchedule {
    std::size_t T = 0;
    Vector beta;        // beta_t,        index t-1
    Vector alpha;       // 1 - beta_t
    Vector alpha_bar;   // prod_{j<=t} alpha_j, strictly decreasing
    Vector ddpm_sigma;  // sqrt((1-abar_{t-1})/(1-abar_t) * beta_t)

    double alpha_bar_at(std::size_t t) const {  // accepts t = 0
        if (t == 0) return 1.0;
        return alpha_bar[t - 1];
    }
};

inline NoiseSchedule make_schedule(std::size_t T, double beta_start, double beta_end) {
    if (T == 0) throw InvalidArgument("make_schedule: T must be >= 1");
    if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0)) {
        throw InvalidArgument("make_schedule: need 0 < beta_start <= beta_end < 1");
    }
    NoiseSchedule s;
    s.T = T;
    s.beta.resize(T);
    s.alpha.resize(T);
    s.alpha_bar.resize(T);
    s.ddpm_sigma.resize(T);
    double abar = 1.0;
    for (std::size_t t = 1; t <= T; ++t) {
        double frac = (T == 1) ? 0.0 : static_cast<double>(t - 1) / static_cast<double>(T - 1);
        double b = beta_start + (beta_end - beta_start) * frac;
        double abar_prev = abar;
        abar *= 1.0 - b;
        s.beta[t - 1] = b;
        s.alpha[t - 1] = 1.0 - b;
        s.alpha_bar[t - 1] = abar;
        s.ddpm_sigma[t - 1] = std::sqrt((1.0 - abar_prev) / (1.0 - abar) * b);
    }
    return s;
}

// z_t = sqrt(abar_t) z0 + sqrt(1 - abar_t) eps, returning eps for training.
struct ForwardMarginal {
    Vector zt;
    Vector eps;
};

inline ForwardMarginal forward_marginal(const NoiseSchedule& s, const Vector& z0, std::size_t t,
                                        RandomSource& rng) {
    if (t < 1 || t > s.T) throw InvalidIndex("forward_marginal: t out of range");
    Vector eps = gaussian_vector(rng, z0.size(), 1.0);
    double abar = s.alpha_bar[t - 1];
    double c0 = std::sqrt(abar);
    double c1 = std::sqrt(1.0 - abar);
    Vector zt(z0.size());
    for (std::size_t i = 0; i < z0.size(); ++i) zt[i] = c0 * z0[i] + c1 * eps[i];
    return ForwardMarginal{std::move(zt), std::move(eps)};
}

// Inverse of the forward marginal given the (predicted) noise:
// z0_hat = (z_t - sqrt(1 - abar_t) eps_hat) / sqrt(abar_t).
inline Vector predict_z0(const NoiseSchedule& s, const Vector& zt, const Vector& eps_hat,
                         std::size_t t) {
    if (t < 1 || t > s.T) throw InvalidIndex("predict_z0: t out of range");
    if (zt.size() != eps_hat.size()) throw InvalidDimension("predict_z0: length mismatch");
    double abar = s.alpha_bar[t - 1];
    double c = std::sqrt(1.0 - abar);
    double inv = 1.0 / std::sqrt(abar);
    Vector z0(zt.size());
    for (std::size_t i = 0; i < zt.size(); ++i) z0[i] = (zt[i] - c * eps_hat[i]) * inv;
    return z0;
}

// Sinusoidal time-embedding table plus a two-hidden-layer tanh MLP that
// predicts the injected noise from (z_t, t).
inline constexpr std::size_t kTimeEmbedFrequencies = 8;

struct DenoiserNet {
    std::size_t d = 0;
    std::size_t hidden = 0;
    std::size_t T = 0;

    Matrix a1;  // hidden x (d + 2F)
    Vector c1;
    Matrix a2;  // hidden x hidden
    Vector c2;
    Matrix a3;  // d x hidden
    Vector c3;
    Matrix time_embed;  // T x 2F, row t-1 = [sin(2^j pi t/T), cos(2^j pi t/T)]_j

    std::size_t input_dim() const { return d + 2 * kTimeEmbedFrequencies; }
};

inline Matrix make_time_embedding(std::size_t T) {
    Matrix e(T, 2 * kTimeEmbedFrequencies);
    for (std::size_t t = 1; t <= T; ++t) {
        double tau = static_cast<double>(t) / static_cast<double>(T);
        for (std::size_t j = 0; j < kTimeEmbedFrequencies; ++j) {
            double w = std::pow(2.0, static_cast<double>(j)) * std::numbers::pi * tau;
            e(t - 1, 2 * j) = std::sin(w);
            e(t - 1, 2 * j + 1) = std::cos(w);
        }
    }
    return e;
}

inline DenoiserNet make_denoiser(std::size_t d, std::size_t hidden, std::size_t T,
                                 std::uint64_t seed) {
    if (d == 0 || hidden == 0 || T == 0) {
        throw InvalidDimension("make_denoiser: dimensions must be >= 1");
    }
    DenoiserNet net;
    net.d = d;
    net.hidden = hidden;
    net.T = T;
    RandomSource rng(seed, /*stream_id=*/1);
    const std::size_t in_dim = net.input_dim();
    net.a1 = gaussian_matrix(rng, hidden, in_dim, 1.0 / std::sqrt(static_cast<double>(in_dim)));
    net.c1 = Vector(hidden, 0.0);
    net.a2 = gaussian_matrix(rng, hidden, hidden, 1.0 / std::sqrt(static_cast<double>(hidden)));
    net.c2 = Vector(hidden, 0.0);
    net.a3 = gaussian_matrix(rng, d, hidden, 1.0 / std::sqrt(static_cast<double>(hidden)));
    net.c3 = Vector(d, 0.0);
    net.time_embed = make_time_embedding(T);
    return net;
}

struct NetActivations {
    Vector in;   // [z; embed(t)]
    Vector h1;   // post-tanh
    Vector h2;   // post-tanh
    Vector out;  // eps_hat
};

inline NetActivations net_forward_cached(const DenoiserNet& net, const Vector& z, std::size_t t) {
    if (z.size() != net.d) throw InvalidDimension("denoiser: latent length mismatch");
    if (t < 1 || t > net.T) throw InvalidIndex("denoiser: t out of range");
    NetActivations acts;
    acts.in.resize(net.input_dim());
    for (std::size_t i = 0; i < net.d; ++i) acts.in[i] = z[i];
    for (std::size_t i = 0; i < 2 * kTimeEmbedFrequencies; ++i) {
        acts.in[net.d + i] = net.time_embed(t - 1, i);
    }
    acts.h1 = matvec(net.a1, acts.in);
    for (std::size_t i = 0; i < net.hidden; ++i) acts.h1[i] = std::tanh(acts.h1[i] + net.c1[i]);
    acts.h2 = matvec(net.a2, acts.h1);
    for (std::size_t i = 0; i < net.hidden; ++i) acts.h2[i] = std::tanh(acts.h2[i] + net.c2[i]);
    acts.out = matvec(net.a3, acts.h2);
    for (std::size_t i = 0; i < net.d; ++i) acts.out[i] += net.c3[i];
    return acts;
}

inline Vector net_forward(const DenoiserNet& net, const Vector& z, std::size_t t) {
    return net_forward_cached(net, z, t).out;
}

struct NetGrads {
    Matrix a1, a2, a3;
    Vector c1, c2, c3;
};

inline NetGrads zero_net_grads(const DenoiserNet& net) {
    NetGrads g;
    g.a1 = Matrix(net.hidden, net.input_dim());
    g.c1 = Vector(net.hidden, 0.0);
    g.a2 = Matrix(net.hidden, net.hidden);
    g.c2 = Vector(net.hidden, 0.0);
    g.a3 = Matrix(net.d, net.hidden);
    g.c3 = Vector(net.d, 0.0);
    return g;
}

// Backward pass: accumulates parameter gradients into *grads (if non-null)
// and returns d(out . dout)/dz, the input VJP restricted to the latent part.
inline Vector net_backward(const DenoiserNet& net, const NetActivations& acts, const Vector& dout,
                           NetGrads* grads) {
    if (dout.size() != net.d) throw InvalidDimension("net_backward: cotangent length mismatch");
    Vector dh2 = matvec_transposed(net.a3, dout);
    for (std::size_t i = 0; i < net.hidden; ++i) dh2[i] *= 1.0 - acts.h2[i] * acts.h2[i];
    Vector dh1 = matvec_transposed(net.a2, dh2);
    for (std::size_t i = 0; i < net.hidden; ++i) dh1[i] *= 1.0 - acts.h1[i] * acts.h1[i];
    if (grads) {
        NetGrads& g = *grads;
        for (std::size_t i = 0; i < net.d; ++i) {
            g.c3[i] += dout[i];
            for (std::size_t j = 0; j < net.hidden; ++j) g.a3(i, j) += dout[i] * acts.h2[j];
        }
        for (std::size_t i = 0; i < net.hidden; ++i) {
            g.c2[i] += dh2[i];
            for (std::size_t j = 0; j < net.hidden; ++j) g.a2(i, j) += dh2[i] * acts.h1[j];
            g.c1[i] += dh1[i];
            for (std::size_t j = 0; j < net.input_dim(); ++j) g.a1(i, j) += dh1[i] * acts.in[j];
        }
    }
    Vector din = matvec_transposed(net.a1, dh1);
    din.resize(net.d);  // embedding part carries no gradient we need
    return din;
}

// One reverse update given a precomputed noise prediction:
//   z_{t-1} = (z_t - (1-alpha_t)/sqrt(1-abar_t) eps_hat) / sqrt(alpha_t)
//             + sigma_t eps'
// sigma_t = 0 is the deterministic DDIM step and consumes no randomness.
inline Vector reverse_step_with_eps(const NoiseSchedule& s, const Vector& zt,
                                    const Vector& eps_hat, std::size_t t, double sigma_t,
                                    RandomSource& rng) {
    if (t < 1 || t > s.T) throw InvalidIndex("reverse_step: t out of range");
    if (zt.size() != eps_hat.size()) throw InvalidDimension("reverse_step: length mismatch");
    double ceiling = s.ddpm_sigma[t - 1];
    if (sigma_t < 0.0 || sigma_t > ceiling + 1e-12) {
        throw InvalidArgument("reverse_step: sigma_t outside [0, ddpm_sigma_t]");
    }
    double coef = (1.0 - s.alpha[t - 1]) / std::sqrt(1.0 - s.alpha_bar[t - 1]);
    double inv = 1.0 / std::sqrt(s.alpha[t - 1]);
    Vector z(zt.size());
    for (std::size_t i = 0; i < zt.size(); ++i) z[i] = (zt[i] - coef * eps_hat[i]) * inv;
    if (sigma_t > 0.0) {
        for (double& v : z) v += sigma_t * rng.next_gaussian();
    }
    return z;
}

inline Vector reverse_step(const NoiseSchedule& s, const DenoiserNet& net, const Vector& zt,
                           std::size_t t, double sigma_t, RandomSource& rng) {
    Vector eps_hat = net_forward(net, zt, t);
    return reverse_step_with_eps(s, zt, eps_hat, t, sigma_t, rng);
}

// Truncated-latent diffusion loss at pinned draws (t, eps, k):
//   (1-lambda) ||eps - net(z_t, t)||^2 + lambda ||eps - net((z_t)_{down k}, t)||^2
// with the same z_t in both branches. Used directly by gradient checks.
inline double ldm_loss_at(const DenoiserNet& net, const NoiseSchedule& s, const Vector& z0,
                          double lambda_mix, std::size_t t, const Vector& eps, std::size_t k,
                          NetGrads* grads) {
    if (lambda_mix < 0.0 || lambda_mix > 1.0) {
        throw InvalidArgument("ldm_loss: lambda_mix must be in [0, 1]");
    }
    double abar = s.alpha_bar[t - 1];
    double c0 = std::sqrt(abar);
    double c1 = std::sqrt(1.0 - abar);
    Vector zt(z0.size());
    for (std::size_t i = 0; i < z0.size(); ++i) zt[i] = c0 * z0[i] + c1 * eps[i];
    Vector ztk = truncate(zt, k);

    NetActivations acts_a = net_forward_cached(net, zt, t);
    NetActivations acts_b = net_forward_cached(net, ztk, t);

    double loss_a = 0.0, loss_b = 0.0;
    Vector dout_a(net.d), dout_b(net.d);
    for (std::size_t i = 0; i < net.d; ++i) {
        double ra = acts_a.out[i] - eps[i];
        double rb = acts_b.out[i] - eps[i];
        loss_a += ra * ra;
        loss_b += rb * rb;
        dout_a[i] = (1.0 - lambda_mix) * 2.0 * ra;
        dout_b[i] = lambda_mix * 2.0 * rb;
    }
    if (grads) {
        net_backward(net, acts_a, dout_a, grads);
        net_backward(net, acts_b, dout_b, grads);
    }
    return (1.0 - lambda_mix) * loss_a + lambda_mix * loss_b;
}

// Spec-facing loss: draws t uniform on {1..T}, eps ~ N(0,I), k ~ law.
inline double ldm_loss(const DenoiserNet& net, const NoiseSchedule& s, const Vector& z0,
                       double lambda_mix, const TruncationLaw& law, RandomSource& rng) {
    if (z0.size() != net.d) throw InvalidDimension("ldm_loss: latent length mismatch");
    std::size_t t = 1 + static_cast<std::size_t>(rng.next_uniform() * static_cast<double>(s.T));
    if (t > s.T) t = s.T;
    Vector eps = gaussian_vector(rng, net.d, 1.0);
    std::size_t k = sample_k(law, rng);
    return ldm_loss_at(net, s, z0, lambda_mix, t, eps, k, nullptr);
}

struct LdmTrainConfig {
    std::size_t T = 200;
    double beta_start = 1e-4;
    double beta_end = 0.05;
    double lambda_mix = 0.1;
    double law_p = 0.1;
    std::size_t hidden = 64;
    std::size_t steps = 1000;
    double step_size = 1e-3;
    double momentum = 0.0;
    std::uint64_t seed = 0;
};

struct LdmTrainResult {
    DenoiserNet net;
    NoiseSchedule schedule;
    Vector loss_trace;
};

// SGD on ldm_loss, cycling the dataset in order. Deterministic under the
// config seed.
inline LdmTrainResult ldm_train(const std::vector<Vector>& latents, const LdmTrainConfig& cfg) {
    if (latents.empty()) throw InvalidArgument("ldm_train: data must be nonempty");
    const std::size_t d = latents.front().size();
    for (const Vector& z : latents) {
        if (z.size() != d) throw InvalidDimension("ldm_train: example length mismatch");
    }
    NoiseSchedule s = make_schedule(cfg.T, cfg.beta_start, cfg.beta_end);
    DenoiserNet net = make_denoiser(d, cfg.hidden, cfg.T, cfg.seed);
    TruncationLaw law(d, cfg.law_p);
    RandomSource rng(cfg.seed, /*stream_id=*/2);

    NetGrads vel = zero_net_grads(net);
    Vector trace;
    trace.reserve(cfg.steps);

    auto update = [&](Matrix& w, Matrix& v, const Matrix& g) {
        for (std::size_t i = 0; i < w.size(); ++i) {
            v.data()[i] = cfg.momentum * v.data()[i] + g.data()[i];
            w.data()[i] -= cfg.step_size * v.data()[i];
        }
    };
    auto update_v = [&](Vector& w, Vector& v, const Vector& g) {
        for (std::size_t i = 0; i < w.size(); ++i) {
            v[i] = cfg.momentum * v[i] + g[i];
            w[i] -= cfg.step_size * v[i];
        }
    };

    for (std::size_t step = 0; step < cfg.steps; ++step) {
        const Vector& z0 = latents[step % latents.size()];
        std::size_t t = 1 + static_cast<std::size_t>(rng.next_uniform() * static_cast<double>(s.T));
        if (t > s.T) t = s.T;
        Vector eps = gaussian_vector(rng, d, 1.0);
        std::size_t k = sample_k(law, rng);
        NetGrads g = zero_net_grads(net);
        double loss = ldm_loss_at(net, s, z0, cfg.lambda_mix, t, eps, k, &g);
        if (!std::isfinite(loss)) {
            throw TrainingDiverged(step, "ldm_train: loss is non-finite");
        }
        update(net.a1, vel.a1, g.a1);
        update_v(net.c1, vel.c1, g.c1);
        update(net.a2, vel.a2, g.a2);
        update_v(net.c2, vel.c2, g.c2);
        update(net.a3, vel.a3, g.a3);
        update_v(net.c3, vel.c3, g.c3);
        trace.push_back(loss);
    }
    return LdmTrainResult{std::move(net), std::move(s), std::move(trace)};
}

// Unconditional ancestral sampling. sigma_values has one entry per step
// (index t-1); zeros give the deterministic DDIM chain. Draw order matches
// the guided samplers so paired-seed comparisons are exact.
inline Vector sample_prior(const DenoiserNet& net, const NoiseSchedule& s,
                           const std::vector<double>& sigma_values, RandomSource& rng) {
    if (sigma_values.size() != s.T) {
        throw InvalidArgument("sample_prior: need one sigma per step");
    }
    Vector z = gaussian_vector(rng, net.d, 1.0);
    for (std::size_t t = s.T; t >= 1; --t) {
        Vector eps_hat = net_forward(net, z, t);
        z = reverse_step_with_eps(s, z, eps_hat, t, sigma_values[t - 1], rng);
    }
    return z;
}

inline std::vector<double> ddpm_sigma_policy(const NoiseSchedule& s) { return s.ddpm_sigma; }

inline std::vector<double> ddim_sigma_policy(const NoiseSchedule& s) {
    return std::vector<double>(s.T, 0.0);
}

}  // namespace priorlab
