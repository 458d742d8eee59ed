#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "priorlab/decoder.hpp"
#include "priorlab/diffusion.hpp"
#include "priorlab/errors.hpp"
#include "priorlab/forward_ops.hpp"
#include "priorlab/linear_theory.hpp"
#include "priorlab/metrics.hpp"
#include "priorlab/rng.hpp"
#include "priorlab/tensor.hpp"
#include "priorlab/truncation.hpp"

namespace priorlab {

enum class GuidanceMode { quadratic_prox, gradient };

struct InversionConfig {
    std::size_t k = 0;  // truncation index, 1..d
    std::size_t T = 0;  // 0 = take from the schedule; otherwise must match it

    // Per-step sigma policy. Explicit values win; otherwise sigma_const is
    // clamped to the DDPM ceiling per step. The prox coupling additionally
    // floors sigma_t so 1/(2 sigma_t^2) stays finite at t = 1 where the
    // ceiling hits zero.
    std::vector<double> sigma_values;
    double sigma_const = 0.1;
    double sigma_floor = 1e-4;

    std::size_t inner_steps = 3;
    double inner_step_size = 0.5;
    GuidanceMode guidance = GuidanceMode::quadratic_prox;
    double guidance_step = 0.1;  // zeta for GuidanceMode::gradient

    std::uint64_t seed = 0;
    bool apply_truncation = true;   // false gives the untruncated reference chain
    bool return_truncated = false;  // decode truncate(z0_hat, k) instead of z0_hat
};

struct MapConfig {
    std::size_t k = 0;
    double gamma = 0.0;
    std::size_t steps = 500;
    double step_size = 0.01;
};

namespace detail {

inline void check_inversion_inputs(const Measurement& meas, const Decoder& dec,
                                   const DenoiserNet& net, const NoiseSchedule& s,
                                   const InversionConfig& cfg) {
    if (!meas.op) throw InvalidArgument("inversion: measurement has no operator");
    if (meas.y.size() != meas.op->m) throw InvalidDimension("inversion: y length mismatch");
    if (dec.signal_dim() != meas.op->n) {
        throw InvalidDimension("inversion: decoder output does not match operator input");
    }
    if (dec.latent_dim() != net.d) {
        throw InvalidDimension("inversion: decoder latent does not match denoiser");
    }
    if (cfg.T != 0 && cfg.T != s.T) {
        throw InvalidArgument("inversion: config T does not match schedule");
    }
    if (cfg.k < 1 || cfg.k > dec.latent_dim()) {
        throw InvalidIndex("inversion: k out of range");
    }
    if (!cfg.sigma_values.empty() && cfg.sigma_values.size() != s.T) {
        throw InvalidArgument("inversion: sigma_values must have one entry per step");
    }
    if (cfg.guidance == GuidanceMode::quadratic_prox && cfg.inner_steps < 1) {
        throw InvalidArgument("inversion: quadratic_prox needs inner_steps >= 1");
    }
}

inline double raw_sigma(const InversionConfig& cfg, std::size_t t) {
    return cfg.sigma_values.empty() ? cfg.sigma_const : cfg.sigma_values[t - 1];
}

// Sigma for the prox-coupled sampler: clamped to the ceiling, then floored.
// An explicit zero is an error rather than silently floored.
inline double prox_sigma(const InversionConfig& cfg, const NoiseSchedule& s, std::size_t t) {
    double v = raw_sigma(cfg, t);
    if (v == 0.0) {
        throw DegenerateVariance("tunable_posterior_sample: sigma_t = 0 makes the "
                                 "quadratic coupling undefined");
    }
    if (v < 0.0) throw InvalidArgument("inversion: sigma_t must be >= 0");
    v = std::min(v, s.ddpm_sigma[t - 1]);
    return std::max(v, cfg.sigma_floor);
}

// Sigma for the reverse-equation update: clamped into [0, ddpm ceiling].
inline double reverse_sigma(const InversionConfig& cfg, const NoiseSchedule& s, std::size_t t) {
    double v = raw_sigma(cfg, t);
    if (v < 0.0) throw InvalidArgument("inversion: sigma_t must be >= 0");
    return std::min(v, s.ddpm_sigma[t - 1]);
}

}  // namespace detail

// Gradient descent on ||y - A(D(z))||^2 + 1/(2 sigma^2) ||z - z_prime||^2
// from the given initializer. The per-step objective values can be captured
// for monotonicity checks.
inline Vector inner_quadratic_solve(const ForwardOperator& op, const Decoder& dec,
                                    const Vector& y, const Vector& z_prime, double sigma_t,
                                    const Vector& init, std::size_t steps, double step_size,
                                    std::vector<double>* objective_trace = nullptr) {
    if (sigma_t <= 0.0) {
        throw DegenerateVariance("inner_quadratic_solve: sigma_t must be positive");
    }
    const double weight = 1.0 / (2.0 * sigma_t * sigma_t);
    Vector z = init;
    auto objective = [&](const Vector& zz) {
        return residual_value(op, dec.decode(zz), y) + weight * squared_norm(sub(zz, z_prime));
    };
    if (objective_trace) objective_trace->push_back(objective(z));
    for (std::size_t i = 0; i < steps; ++i) {
        Vector x = dec.decode(z);
        Vector g = dec.decode_vjp(z, op.residual_gradient(x, y));
        for (std::size_t j = 0; j < z.size(); ++j) {
            g[j] += 2.0 * weight * (z[j] - z_prime[j]);
            z[j] -= step_size * g[j];
        }
        if (objective_trace) objective_trace->push_back(objective(z));
    }
    return z;
}

// Tunable posterior sampling: DDPM convex-combination proposal, quadratic
// data-consistency prox initialized at z0_hat, then latent truncation. The
// decoded z0_hat from the final step is returned.
inline Vector tunable_posterior_sample(const Measurement& meas, const Decoder& dec,
                                       const DenoiserNet& net, const NoiseSchedule& s,
                                       const InversionConfig& cfg, RandomSource& rng,
                                       std::vector<Vector>* trajectory = nullptr) {
    detail::check_inversion_inputs(meas, dec, net, s, cfg);
    const ForwardOperator& op = *meas.op;
    const std::size_t d = net.d;

    Vector z = gaussian_vector(rng, d, 1.0);
    Vector z0_hat;
    for (std::size_t t = s.T; t >= 1; --t) {
        Vector eps_hat = net_forward(net, z, t);
        z0_hat = predict_z0(s, z, eps_hat, t);

        double sigma_t = detail::prox_sigma(cfg, s, t);
        Vector eps = gaussian_vector(rng, d, 1.0);

        double abar = s.alpha_bar[t - 1];
        double abar_prev = s.alpha_bar_at(t - 1);
        double c_zt = std::sqrt(s.alpha[t - 1]) * (1.0 - abar_prev) / (1.0 - abar);
        double c_z0 = std::sqrt(abar_prev) * s.beta[t - 1] / (1.0 - abar);
        Vector z_prime(d);
        for (std::size_t i = 0; i < d; ++i) {
            z_prime[i] = c_zt * z[i] + c_z0 * z0_hat[i] + sigma_t * eps[i];
        }

        // The prox coupling makes the inner curvature scale like 1/sigma_t^2,
        // so the raw step is scaled by 2 sigma_t^2: identical iterates to
        // descending sigma_t^2 ||y - A(D(z))||^2 + 1/2 ||z - z'||^2 with the
        // configured step, and stable across the whole schedule.
        z = inner_quadratic_solve(op, dec, meas.y, z_prime, sigma_t, z0_hat, cfg.inner_steps,
                                  cfg.inner_step_size * 2.0 * sigma_t * sigma_t);
        if (cfg.apply_truncation) truncate_in_place(z, cfg.k);
        if (trajectory) trajectory->push_back(z);
        if (!all_finite(z)) {
            throw NonFiniteObjective("tunable_posterior_sample: iterate is non-finite");
        }
    }
    Vector z_out = cfg.return_truncated ? truncate(z0_hat, cfg.k) : z0_hat;
    return dec.decode(z_out);
}

// LDPS-style variant: reverse update followed by one gradient step on
// ||y - A(D(z0_hat(z_t)))||^2 taken at z_t, differentiated through the
// denoiser, then truncation. guidance_step = 0 reduces exactly to
// unconditional sampling under the same seed.
inline Vector gradient_guided_sample(const Measurement& meas, const Decoder& dec,
                                     const DenoiserNet& net, const NoiseSchedule& s,
                                     const InversionConfig& cfg, RandomSource& rng,
                                     std::vector<Vector>* trajectory = nullptr) {
    detail::check_inversion_inputs(meas, dec, net, s, cfg);
    const ForwardOperator& op = *meas.op;
    const std::size_t d = net.d;
    const double zeta = cfg.guidance_step;

    Vector z = gaussian_vector(rng, d, 1.0);
    Vector z0_hat;
    for (std::size_t t = s.T; t >= 1; --t) {
        NetActivations acts = net_forward_cached(net, z, t);
        z0_hat = predict_z0(s, z, acts.out, t);
        double sigma_t = detail::reverse_sigma(cfg, s, t);
        Vector z_next = reverse_step_with_eps(s, z, acts.out, t, sigma_t, rng);
        if (zeta != 0.0) {
            Vector gx = op.residual_gradient(dec.decode(z0_hat), meas.y);
            Vector gz0 = dec.decode_vjp(z0_hat, gx);
            // Through z0_hat = (z - sqrt(1-abar) eps_hat(z)) / sqrt(abar).
            Vector gz_net = net_backward(net, acts, gz0, nullptr);
            double abar = s.alpha_bar[t - 1];
            double c = std::sqrt(1.0 - abar);
            double inv = 1.0 / std::sqrt(abar);
            for (std::size_t i = 0; i < d; ++i) {
                z_next[i] -= zeta * (gz0[i] - c * gz_net[i]) * inv;
            }
        }
        z = std::move(z_next);
        if (cfg.apply_truncation) truncate_in_place(z, cfg.k);
        if (trajectory) trajectory->push_back(z);
        if (!all_finite(z)) {
            throw NonFiniteObjective("gradient_guided_sample: iterate is non-finite");
        }
    }
    Vector z_out = cfg.return_truncated ? truncate(z0_hat, cfg.k) : z0_hat;
    return dec.decode(z_out);
}

// Gaussian-latent MAP from z = 0 over the first k coordinates:
//   min_z 1/2 ||y - A(D(pad_k(z)))||^2 + gamma/2 ||z||^2
inline Vector latent_map_estimate(const Measurement& meas, const Decoder& dec,
                                  const MapConfig& cfg) {
    if (!meas.op) throw InvalidArgument("latent_map_estimate: measurement has no operator");
    const ForwardOperator& op = *meas.op;
    if (dec.signal_dim() != op.n) {
        throw InvalidDimension("latent_map_estimate: decoder/operator mismatch");
    }
    const std::size_t d = dec.latent_dim();
    if (cfg.k < 1 || cfg.k > d) throw InvalidIndex("latent_map_estimate: k out of range");
    if (cfg.gamma < 0.0) throw InvalidValue("latent_map_estimate: gamma must be >= 0");

    Vector z_pad(d, 0.0);
    for (std::size_t step = 0; step < cfg.steps; ++step) {
        Vector x = dec.decode(z_pad);
        double obj = 0.5 * residual_value(op, x, meas.y);
        for (std::size_t i = 0; i < cfg.k; ++i) obj += 0.5 * cfg.gamma * z_pad[i] * z_pad[i];
        if (!std::isfinite(obj)) {
            throw NonFiniteObjective("latent_map_estimate: objective is non-finite");
        }
        Vector g = dec.decode_vjp(z_pad, op.residual_gradient(x, meas.y));
        for (std::size_t i = 0; i < cfg.k; ++i) {
            z_pad[i] -= cfg.step_size * (0.5 * g[i] + cfg.gamma * z_pad[i]);
        }
        // Coordinates past k stay pinned at zero.
    }
    return dec.decode(z_pad);
}

// Latent coefficients of the same estimate, for tests that compare against
// the closed-form theory path.
inline Vector latent_map_latent(const Measurement& meas, const Decoder& dec,
                                const MapConfig& cfg) {
    if (!meas.op) throw InvalidArgument("latent_map_latent: measurement has no operator");
    const ForwardOperator& op = *meas.op;
    const std::size_t d = dec.latent_dim();
    if (cfg.k < 1 || cfg.k > d) throw InvalidIndex("latent_map_latent: k out of range");
    Vector z_pad(d, 0.0);
    for (std::size_t step = 0; step < cfg.steps; ++step) {
        Vector x = dec.decode(z_pad);
        if (!all_finite(x)) throw NonFiniteObjective("latent_map_latent: non-finite iterate");
        Vector g = dec.decode_vjp(z_pad, op.residual_gradient(x, meas.y));
        for (std::size_t i = 0; i < cfg.k; ++i) {
            z_pad[i] -= cfg.step_size * (0.5 * g[i] + cfg.gamma * z_pad[i]);
        }
    }
    Vector z(cfg.k);
    for (std::size_t i = 0; i < cfg.k; ++i) z[i] = z_pad[i];
    return z;
}

enum class SweepMethod { posterior, gradient_guided, latent_map, linear_closed_form };

inline const char* sweep_method_name(SweepMethod m) {
    switch (m) {
        case SweepMethod::posterior: return "posterior";
        case SweepMethod::gradient_guided: return "gradient_guided";
        case SweepMethod::latent_map: return "latent_map";
        case SweepMethod::linear_closed_form: return "linear_closed_form";
    }
    return "unknown";
}

// Everything one k-sweep needs. Ground truth comes from the generator
// family when present, otherwise from the fixed test signals (cycled by
// trial index).
struct SweepProblem {
    std::string task;
    const ForwardOperator* op = nullptr;
    double sigma = 0.0;
    SweepMethod method = SweepMethod::latent_map;

    const GeneratorFamily* family = nullptr;
    const std::vector<Vector>* test_signals = nullptr;

    const Decoder* decoder = nullptr;
    const DenoiserNet* net = nullptr;
    const NoiseSchedule* schedule = nullptr;

    InversionConfig inv;
    MapConfig map;
    double gamma = 0.0;  // linear_closed_form prior weight
    double peak = 1.0;
    std::uint64_t seed = 0;
};

namespace detail {

// Stream-id layout for sweep runs: the data stream depends only on the
// trial, so every k sees the same (x0, noise) pair; the solver stream is
// keyed by (k, trial).
inline std::uint64_t sweep_data_stream(std::size_t trial) {
    return (1ull << 40) | static_cast<std::uint64_t>(trial);
}

inline std::uint64_t sweep_solver_stream(std::size_t k, std::size_t trial) {
    return (2ull << 40) | (static_cast<std::uint64_t>(k) << 20) |
           static_cast<std::uint64_t>(trial);
}

}  // namespace detail

struct SweepRun {
    ExperimentRecord record;
    Vector x0;
    Vector xhat;
};

// One (k, trial) case: draw ground truth, measure, invert, score.
inline SweepRun run_sweep_case(const SweepProblem& prob, std::size_t k, std::size_t trial) {
    if (!prob.op) throw InvalidArgument("sweep_k: no forward operator");
    if (!prob.family && (!prob.test_signals || prob.test_signals->empty())) {
        throw InvalidArgument("sweep_k: no ground-truth source");
    }
    if (prob.method == SweepMethod::linear_closed_form && !prob.family) {
        throw InvalidArgument("sweep_k: linear_closed_form needs a generator family");
    }

    RandomSource data_rng(prob.seed, detail::sweep_data_stream(trial));
    Vector x0;
    if (prob.family) {
        Vector z0 = gaussian_vector(data_rng, prob.family->dim(), 1.0);
        x0 = apply_generator(*prob.family, z0);
    } else {
        x0 = (*prob.test_signals)[trial % prob.test_signals->size()];
    }
    Measurement meas = measure(*prob.op, x0, prob.sigma, data_rng);

    RandomSource solver_rng(prob.seed, detail::sweep_solver_stream(k, trial));
    auto start = std::chrono::steady_clock::now();
    Vector xhat;
    try {
        bool needs_net = prob.method == SweepMethod::posterior ||
                         prob.method == SweepMethod::gradient_guided;
        if (needs_net && (!prob.net || !prob.schedule)) {
            throw InvalidArgument("method needs a denoiser net and schedule");
        }
        if (prob.method != SweepMethod::linear_closed_form && !prob.decoder) {
            throw InvalidArgument("method needs a decoder");
        }
        switch (prob.method) {
            case SweepMethod::posterior: {
                InversionConfig cfg = prob.inv;
                cfg.k = k;
                xhat = tunable_posterior_sample(meas, *prob.decoder, *prob.net, *prob.schedule,
                                                cfg, solver_rng);
                break;
            }
            case SweepMethod::gradient_guided: {
                InversionConfig cfg = prob.inv;
                cfg.k = k;
                xhat = gradient_guided_sample(meas, *prob.decoder, *prob.net, *prob.schedule,
                                              cfg, solver_rng);
                break;
            }
            case SweepMethod::latent_map: {
                MapConfig cfg = prob.map;
                cfg.k = k;
                xhat = latent_map_estimate(meas, *prob.decoder, cfg);
                break;
            }
            case SweepMethod::linear_closed_form: {
                DenoiseProblem dp(*prob.family, prob.sigma, prob.gamma);
                xhat = linear_map_estimate(dp, k, meas.y);
                break;
            }
        }
    } catch (const Error& e) {
        throw Error("sweep_k: run failed at k=" + std::to_string(k) +
                    " trial=" + std::to_string(trial) + ": " + e.what());
    }
    auto stop = std::chrono::steady_clock::now();

    SweepRun run;
    run.record.task = prob.task;
    run.record.k = k;
    run.record.seed = prob.seed;
    run.record.trial = trial;
    run.record.mse = mean_squared_error(xhat, x0);
    run.record.psnr_db = psnr_from_mse(run.record.mse, prob.peak);
    run.record.residual = std::sqrt(residual_value(*prob.op, xhat, meas.y));
    run.record.wall_ms = std::chrono::duration<double, std::milli>(stop - start).count();
    run.x0 = std::move(x0);
    run.xhat = std::move(xhat);
    return run;
}

// Runs the configured inversion for every (k, trial) pair in deterministic
// order and returns one record per run.
inline std::vector<ExperimentRecord> sweep_k(const SweepProblem& prob,
                                             const std::vector<std::size_t>& k_values,
                                             std::size_t trials) {
    if (k_values.empty()) throw InvalidArgument("sweep_k: k_values must be nonempty");
    if (trials == 0) throw InvalidArgument("sweep_k: trials must be >= 1");
    std::vector<ExperimentRecord> records;
    records.reserve(k_values.size() * trials);
    for (std::size_t k : k_values) {
        for (std::size_t trial = 0; trial < trials; ++trial) {
            records.push_back(run_sweep_case(prob, k, trial).record);
        }
    }
    return records;
}

}  // namespace priorlab
