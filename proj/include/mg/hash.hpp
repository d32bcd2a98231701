#ifndef MG_HASH_HPP
#define MG_HASH_HPP

#include <cstdint>
#include <string_view>

namespace mg {

/// FNV-1a 64-bit. Used for config fingerprints, not security.
inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (const char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace mg

#endif  // MG_HASH_HPP
