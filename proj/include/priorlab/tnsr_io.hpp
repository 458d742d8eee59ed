#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "priorlab/errors.hpp"
#include "priorlab/tensor.hpp"

namespace priorlab {

// "TNSR" container: magic 'T','N','S','R', then a u32 little-endian rank,
// rank u32 little-endian dims, then row-major f64 little-endian payload.
// All model and operator persistence goes through this one format.

namespace detail {

inline void put_u32_le(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t get_u32_le(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw IoError("tnsr: truncated header");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline void put_f64_le(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 8);
}

inline double get_f64_le(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    if (!is) throw IoError("tnsr: truncated payload");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

}  // namespace detail

inline void save_tnsr(const std::string& path, const std::vector<std::uint32_t>& dims,
                      const double* data, std::size_t count) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("tnsr: cannot open for writing: " + path);
    os.write("TNSR", 4);
    detail::put_u32_le(os, static_cast<std::uint32_t>(dims.size()));
    std::size_t expected = 1;
    for (std::uint32_t d : dims) {
        detail::put_u32_le(os, d);
        expected *= d;
    }
    if (expected != count) throw IoError("tnsr: dims do not match payload size");
    for (std::size_t i = 0; i < count; ++i) detail::put_f64_le(os, data[i]);
    if (!os) throw IoError("tnsr: write failed: " + path);
}

inline void save_tnsr(const std::string& path, const Vector& v) {
    save_tnsr(path, {static_cast<std::uint32_t>(v.size())}, v.data(), v.size());
}

inline void save_tnsr(const std::string& path, const Matrix& m) {
    save_tnsr(path,
              {static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())},
              m.data(), m.size());
}

struct TnsrData {
    std::vector<std::uint32_t> dims;
    std::vector<double> data;
};

inline TnsrData load_tnsr(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("tnsr: cannot open for reading: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "TNSR", 4) != 0) {
        throw IoError("tnsr: bad magic in " + path);
    }
    std::uint32_t rank = detail::get_u32_le(is);
    if (rank > 8) throw IoError("tnsr: implausible rank in " + path);
    TnsrData t;
    std::size_t count = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
        t.dims.push_back(detail::get_u32_le(is));
        count *= t.dims.back();
    }
    t.data.resize(count);
    for (std::size_t i = 0; i < count; ++i) t.data[i] = detail::get_f64_le(is);
    return t;
}

inline Vector load_tnsr_vector(const std::string& path) {
    TnsrData t = load_tnsr(path);
    if (t.dims.size() != 1) throw IoError("tnsr: expected rank-1 tensor in " + path);
    return Vector(t.data.begin(), t.data.end());
}

inline Matrix load_tnsr_matrix(const std::string& path) {
    TnsrData t = load_tnsr(path);
    if (t.dims.size() != 2) throw IoError("tnsr: expected rank-2 tensor in " + path);
    Matrix m(t.dims[0], t.dims[1]);
    for (std::size_t i = 0; i < t.data.size(); ++i) m.data()[i] = t.data[i];
    return m;
}

}  // namespace priorlab
