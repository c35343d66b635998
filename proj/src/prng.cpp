#include "ctxsub/prng.hpp"

#include <cstdio>
#include <limits>

namespace ctxsub {

std::uint64_t fnv1a64_joined(std::string_view first, std::span<const std::string> rest) {
    std::uint64_t h = fnv1a64(first);
    for (const auto& part : rest) {
        h = fnv1a64(std::string_view("\x1f", 1), h);
        h = fnv1a64(part, h);
    }
    return h;
}

std::string to_hex16(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::uint64_t Xorshift64Star::below(std::uint64_t n) {
    if (n <= 1) return 0;
    // Largest multiple of n that fits; draws at or above it are rejected.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x = next();
    while (x >= limit) x = next();
    return x % n;
}

}  // namespace ctxsub
