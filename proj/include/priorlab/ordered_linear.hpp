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

// Tied-weight linear autoencoder trained under nested dropout:
// minimize E_k ||x - W truncate(W^T x, k)||^2. The random-prefix
// reconstruction forces the leading columns toward the top principal
// directions of the data.
struct OrderedLinearAutoencoder {
    Matrix w;  // n x d decoder; encoder is w^T

    std::size_t signal_dim() const { return w.rows(); }
    std::size_t latent_dim() const { return w.cols(); }
};

inline Vector ordered_encode(const OrderedLinearAutoencoder& m, const Vector& x) {
    return matvec_transposed(m.w, x);
}

inline Vector ordered_decode(const OrderedLinearAutoencoder& m, const Vector& z) {
    return matvec(m.w, z);
}

inline Vector ordered_reconstruct(const OrderedLinearAutoencoder& m, const Vector& x,
                                  std::size_t k) {
    return ordered_decode(m, truncate(ordered_encode(m, x), k));
}

// d/dW of ||x - W P_k W^T x||^2 where P_k keeps the first k coordinates:
//   2 [ r v^T + x (P_k W^T r)^T ],  v = P_k W^T x,  r = W v - x.
inline Matrix ordered_linear_gradient(const OrderedLinearAutoencoder& m, const Vector& x,
                                      std::size_t k, double* loss_out = nullptr) {
    const std::size_t n = m.signal_dim();
    const std::size_t d = m.latent_dim();
    if (x.size() != n) throw InvalidDimension("ordered_linear_gradient: length mismatch");
    if (k < 1 || k > d) throw InvalidIndex("ordered_linear_gradient: k out of range");

    Vector v = truncate(matvec_transposed(m.w, x), k);
    Vector r = sub(matvec(m.w, v), x);
    if (loss_out) *loss_out = squared_norm(r);

    Vector wtr = truncate(matvec_transposed(m.w, r), k);
    Matrix g(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            g(i, j) = 2.0 * (r[i] * v[j] + x[i] * wtr[j]);
        }
    }
    return g;
}

struct OrderedTrainConfig {
    std::size_t epochs = 1;
    double step_size = 1e-3;
    double momentum = 0.0;
    std::uint64_t seed = 0;
};

struct OrderedTrainResult {
    OrderedLinearAutoencoder model;
    Vector loss_trace;
};

inline OrderedTrainResult ordered_linear_train(const std::vector<Vector>& data, std::size_t d,
                                               const TruncationLaw& law,
                                               const OrderedTrainConfig& cfg) {
    if (data.empty()) throw InvalidArgument("ordered_linear_train: data must be nonempty");
    const std::size_t n = data.front().size();
    if (n < d) throw InvalidDimension("ordered_linear_train: need data dimension >= d");
    if (law.d != d) throw InvalidArgument("ordered_linear_train: law dimension != d");
    for (const Vector& x : data) {
        if (x.size() != n) throw InvalidDimension("ordered_linear_train: example length mismatch");
    }

    OrderedLinearAutoencoder m;
    RandomSource init_rng(cfg.seed, /*stream_id=*/1);
    m.w = gaussian_matrix(init_rng, n, d, 1.0 / std::sqrt(static_cast<double>(n)));

    RandomSource rng(cfg.seed, /*stream_id=*/2);
    Matrix vel(n, d);
    Vector trace;
    trace.reserve(cfg.epochs * data.size());

    std::size_t step = 0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (const Vector& x : data) {
            std::size_t k = sample_k(law, rng);
            double loss = 0.0;
            Matrix g = ordered_linear_gradient(m, x, k, &loss);
            if (!std::isfinite(loss)) {
                throw TrainingDiverged(step, "ordered_linear_train: loss is non-finite");
            }
            for (std::size_t i = 0; i < g.size(); ++i) {
                vel.data()[i] = cfg.momentum * vel.data()[i] + g.data()[i];
                m.w.data()[i] -= cfg.step_size * vel.data()[i];
            }
            trace.push_back(loss);
            ++step;
        }
    }
    return OrderedTrainResult{std::move(m), std::move(trace)};
}

// Mean truncated reconstruction error over a set.
inline double ordered_eval_error(const OrderedLinearAutoencoder& m,
                                 const std::vector<Vector>& data, std::size_t k) {
    if (data.empty()) throw InvalidArgument("ordered_eval_error: empty data");
    double acc = 0.0;
    for (const Vector& x : data) {
        acc += squared_norm(sub(x, ordered_reconstruct(m, x, k)));
    }
    return acc / static_cast<double>(data.size());
}

}  // namespace priorlab
