#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace scra {

// FNV-1a, 64 bit. Used for prompt digests, cache sub-hashes and the
// deterministic stub backends. Not cryptographic and does not need to be.
inline uint64_t fnv1a64(std::string_view data, uint64_t seed = 14695981039346656037ull) {
    uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline uint64_t hash_mix(uint64_t a, uint64_t b) {
    // splitmix64 finalizer over the xor of both words
    uint64_t z = a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline std::string hex_digest(uint64_t h) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<size_t>(i)] = digits[h & 0xf];
        h >>= 4;
    }
    return out;
}

inline std::string fnv1a64_hex(std::string_view data) { return hex_digest(fnv1a64(data)); }

// Maps a hash word to [0, 1). 53 mantissa bits, so the result is exact.
inline double unit_interval(uint64_t h) {
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// Tiny deterministic generator for the stub backends and weighted sampling.
// mt19937_64 seeding plus this explicit float path keeps draws identical
// across standard library implementations.
class DeterministicRng {
public:
    explicit DeterministicRng(uint64_t seed) : state_(seed + 0x9e3779b97f4a7c15ull) {}

    uint64_t next_u64() {
        // splitmix64
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    double next_unit() { return unit_interval(next_u64()); }

    // in [0, n)
    size_t next_index(size_t n) { return static_cast<size_t>(next_u64() % n); }

private:
    uint64_t state_;
};

inline uint64_t hash_strings(const std::vector<std::string>& parts) {
    uint64_t h = 14695981039346656037ull;
    for (const auto& p : parts) {
        h = fnv1a64(p, h);
        h = fnv1a64("\x1f", h); // separator so ("ab","c") != ("a","bc")
    }
    return h;
}

} // namespace scra
