#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>

#include <sodium.h>

namespace lisec {

// SipHash-2-4 keyed PRF (libsodium's crypto_shorthash). Backs the emulated
// PUF mapping and the License keystream.
inline std::uint64_t siphash24(std::span<const std::uint8_t, 16> key,
                               std::span<const std::uint8_t> msg) {
    static_assert(crypto_shorthash_KEYBYTES == 16 && crypto_shorthash_BYTES == 8);
    std::array<unsigned char, crypto_shorthash_BYTES> out{};
    crypto_shorthash(out.data(), msg.data(), msg.size(), key.data());
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | out[static_cast<std::size_t>(i)];
    return v;
}

inline void store_le64(std::uint64_t v, std::uint8_t* out) {
    for (int i = 0; i < 8; ++i) out[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

inline std::uint64_t load_le64(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

// PRF over two 64-bit words, the only shape the callers need.
inline std::uint64_t siphash24_words(std::span<const std::uint8_t, 16> key, std::uint64_t a,
                                     std::uint64_t b) {
    std::array<std::uint8_t, 16> msg{};
    store_le64(a, msg.data());
    store_le64(b, msg.data() + 8);
    return siphash24(key, msg);
}

}  // namespace lisec
