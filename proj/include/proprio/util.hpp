#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

namespace proprio {

// ---------------------------------------------------------------------------
// Counter-based deterministic random numbers.
//
// All randomness that may be evaluated from parallel loops is derived from
// stateless hashes of (seed, stream, counter) so results do not depend on
// scheduling order.
// ---------------------------------------------------------------------------

inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t hash2(std::uint64_t a, std::uint64_t b) {
    return mix64(mix64(a) ^ b);
}

inline std::uint64_t hash3(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return mix64(hash2(a, b) ^ c);
}

/// Uniform double in [0, 1) from a hash value.
inline double uniform01(std::uint64_t h) {
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

/// Standard normal deviate from a single hash value (Box-Muller, one branch).
inline double normal01(std::uint64_t h) {
    // Two 24-bit uniforms from one 64-bit hash; offset keeps u1 > 0.
    const double u1 = (static_cast<double>(h >> 40) + 0.5) * 0x1.0p-24;
    const double u2 = (static_cast<double>((h >> 16) & 0xffffffULL) + 0.5) * 0x1.0p-24;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

// ---------------------------------------------------------------------------
// Content hashing (FNV-1a, 64 bit) for reproducibility checks.
// ---------------------------------------------------------------------------

struct Fnv1a {
    std::uint64_t state = 1469598103934665603ULL;

    void update(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            state ^= p[i];
            state *= 1099511628211ULL;
        }
    }
    void update(std::string_view s) { update(s.data(), s.size()); }
    std::uint64_t digest() const { return state; }
};

std::string to_hex(std::uint64_t v);

// ---------------------------------------------------------------------------
// Text helpers shared by the CSV/model readers and writers.
// ---------------------------------------------------------------------------

/// Shortest exact decimal representation of a double (round-trips bit-exactly).
std::string format_double(double v);

/// Strict double parse; throws std::runtime_error naming `context` on failure.
double parse_double(const std::string& s, const std::string& context);

std::vector<std::string> split(const std::string& line, char sep);
std::string trim(const std::string& s);

/// Deterministic Fisher-Yates permutation of 0..n-1 driven by the seed.
std::vector<int> shuffled_indices(std::size_t n, std::uint64_t seed);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace proprio
