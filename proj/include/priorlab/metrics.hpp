#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>

#include "priorlab/errors.hpp"
#include "priorlab/tensor.hpp"

namespace priorlab {

// One row of a complexity sweep.
struct ExperimentRecord {
    std::string task;
    std::size_t k = 0;
    std::uint64_t seed = 0;
    std::size_t trial = 0;
    double mse = 0.0;  // per-coordinate mean squared error
    double psnr_db = 0.0;
    double residual = 0.0;  // ||y - A(xhat)||
    double wall_ms = 0.0;
};

inline constexpr double kPsnrCap = 99.0;

// 10 log10(peak^2 len / ||x - ref||^2). Identical inputs yield the capped
// sentinel 99.0 and set *capped.
inline double psnr(const Vector& x, const Vector& ref, double peak, bool* capped = nullptr) {
    if (x.size() != ref.size()) throw InvalidDimension("psnr: length mismatch");
    if (x.empty()) throw InvalidDimension("psnr: empty input");
    if (!(peak > 0.0)) throw InvalidValue("psnr: peak must be positive");
    if (capped) *capped = false;
    double err = squared_norm(sub(x, ref));
    if (err == 0.0) {
        if (capped) *capped = true;
        return kPsnrCap;
    }
    return 10.0 * std::log10(peak * peak * static_cast<double>(x.size()) / err);
}

inline double mean_squared_error(const Vector& x, const Vector& ref) {
    if (x.size() != ref.size()) throw InvalidDimension("mean_squared_error: length mismatch");
    if (x.empty()) throw InvalidDimension("mean_squared_error: empty input");
    return squared_norm(sub(x, ref)) / static_cast<double>(x.size());
}

inline double psnr_from_mse(double mse, double peak) {
    if (mse == 0.0) return kPsnrCap;
    return 10.0 * std::log10(peak * peak / mse);
}

}  // namespace priorlab
