#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace ctxsub {

inline constexpr std::uint64_t kFnvOffset = 14695981039346656037ull;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ull;
inline constexpr std::uint64_t kZeroSeedReplacement = 0x9E3779B97F4A7C15ull;

constexpr std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = kFnvOffset) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

/// FNV-1a-64 of the parts joined with 0x1F separators.
std::uint64_t fnv1a64_joined(std::string_view first, std::span<const std::string> rest);

std::string to_hex16(std::uint64_t v);

/// xorshift64* generator. Zero seeds are remapped so the state never sticks at 0.
class Xorshift64Star {
public:
    explicit constexpr Xorshift64Star(std::uint64_t seed)
        : state_(seed == 0 ? kZeroSeedReplacement : seed) {}

    constexpr std::uint64_t next() {
        state_ ^= state_ >> 12;
        state_ ^= state_ << 25;
        state_ ^= state_ >> 27;
        return state_ * 2685821657736338717ull;
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n) by rejection sampling on full 64-bit outputs.
    std::uint64_t below(std::uint64_t n);

private:
    std::uint64_t state_;
};

/// Stream for one purpose: seed XOR FNV-1a-64(label).
inline Xorshift64Star derive_stream(std::uint64_t seed, std::string_view label) {
    return Xorshift64Star(seed ^ fnv1a64(label));
}

}  // namespace ctxsub
