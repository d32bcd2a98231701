#ifndef MG_BINIO_HPP
#define MG_BINIO_HPP

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "mg/autodiff.hpp"

namespace mg::binio {

/// Raised on short reads; loaders wrap it with file context.
struct StreamError : std::runtime_error {
    explicit StreamError(const std::string& what) : std::runtime_error(what) {}
};

/// Fixed little-endian layout so checkpoints transfer across machines.
inline void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

inline void put_f64(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(os, bits);
}

inline void get_bytes(std::istream& is, void* p, std::size_t n) {
    is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is.gcount()) != n) {
        throw StreamError("truncated stream");
    }
}

inline std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    get_bytes(is, b, 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

inline std::uint64_t get_u64(std::istream& is) {
    unsigned char b[8];
    get_bytes(is, b, 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

inline double get_f64(std::istream& is) {
    const std::uint64_t bits = get_u64(is);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

inline void put_mat(std::ostream& os, const Mat& m) {
    put_u32(os, static_cast<std::uint32_t>(m.rows));
    put_u32(os, static_cast<std::uint32_t>(m.cols));
    for (const double v : m.a) put_f64(os, v);
}

inline Mat get_mat(std::istream& is) {
    const std::size_t r = get_u32(is);
    const std::size_t c = get_u32(is);
    Mat m(r, c);
    for (double& v : m.a) v = get_f64(is);
    return m;
}

}  // namespace mg::binio

#endif  // MG_BINIO_HPP
