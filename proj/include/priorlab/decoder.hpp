#pragma once

#include <cmath>
#include <cstddef>

#include "priorlab/errors.hpp"
#include "priorlab/tensor.hpp"
#include "priorlab/vae.hpp"

namespace priorlab {

// Differentiable map from latent space to signal space. decode_vjp is the
// Jacobian-transpose product J_D(z)^T u, which is all the inversion loops
// need; it must agree with decode to finite-difference accuracy.
class Decoder {
public:
    virtual ~Decoder() = default;
    virtual std::size_t latent_dim() const = 0;
    virtual std::size_t signal_dim() const = 0;
    virtual Vector decode(const Vector& z) const = 0;
    virtual Vector decode_vjp(const Vector& z, const Vector& cotangent) const = 0;
};

class IdentityDecoder final : public Decoder {
public:
    explicit IdentityDecoder(std::size_t dim) : dim_(dim) {}
    std::size_t latent_dim() const override { return dim_; }
    std::size_t signal_dim() const override { return dim_; }
    Vector decode(const Vector& z) const override {
        if (z.size() != dim_) throw InvalidDimension("IdentityDecoder: length mismatch");
        return z;
    }
    Vector decode_vjp(const Vector& z, const Vector& cotangent) const override {
        if (z.size() != dim_ || cotangent.size() != dim_) {
            throw InvalidDimension("IdentityDecoder: length mismatch");
        }
        return cotangent;
    }

private:
    std::size_t dim_;
};

class LinearDecoder final : public Decoder {
public:
    explicit LinearDecoder(Matrix w) : w_(std::move(w)) {}
    std::size_t latent_dim() const override { return w_.cols(); }
    std::size_t signal_dim() const override { return w_.rows(); }
    Vector decode(const Vector& z) const override { return matvec(w_, z); }
    Vector decode_vjp(const Vector&, const Vector& cotangent) const override {
        return matvec_transposed(w_, cotangent);
    }
    const Matrix& weights() const { return w_; }

private:
    Matrix w_;
};

// Decoder half of a trained TunableVae.
class VaeDecoder final : public Decoder {
public:
    explicit VaeDecoder(const TunableVae& m) : m_(&m) {}
    std::size_t latent_dim() const override { return m_->d; }
    std::size_t signal_dim() const override { return m_->n; }
    Vector decode(const Vector& z) const override { return vae_decode(*m_, z); }
    Vector decode_vjp(const Vector& z, const Vector& cotangent) const override {
        if (z.size() != m_->d || cotangent.size() != m_->n) {
            throw InvalidDimension("VaeDecoder: length mismatch");
        }
        Vector h2p = matvec(m_->w2, z);
        for (std::size_t i = 0; i < m_->hidden; ++i) h2p[i] = std::tanh(h2p[i] + m_->b2[i]);
        Vector dh2 = matvec_transposed(m_->w3, cotangent);
        for (std::size_t i = 0; i < m_->hidden; ++i) dh2[i] *= 1.0 - h2p[i] * h2p[i];
        return matvec_transposed(m_->w2, dh2);
    }

private:
    const TunableVae* m_;
};

}  // namespace priorlab
