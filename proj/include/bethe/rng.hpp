#pragma once

#include <cmath>
#include <cstdint>

// Counter-based random numbers: every draw is a pure function of
// (seed, stream, c0, c1, c2).  No generator state is ever carried around,
// so any work partitioning (threads, chunked pool sweeps, per-vertex
// sampling) reproduces bit-identical values.

namespace bethe::rng {

// splitmix64 finalizer
inline constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Stream ids keep independent consumers of the same seed decorrelated.
enum class Stream : std::uint64_t {
    field_sample  = 0x01,
    pool_evolve   = 0x02,
    pool_root     = 0x03,
    path_moment   = 0x04,
    pool_boundary = 0x05,
    generic       = 0x06,
};

inline constexpr std::uint64_t u64(std::uint64_t seed, Stream stream,
                                   std::uint64_t c0, std::uint64_t c1 = 0,
                                   std::uint64_t c2 = 0) {
    std::uint64_t h = mix64(seed ^ 0x243f6a8885a308d3ULL);
    h = mix64(h ^ static_cast<std::uint64_t>(stream));
    h = mix64(h ^ c0);
    h = mix64(h ^ c1);
    h = mix64(h ^ c2);
    return h;
}

// uniform double in [0, 1)
inline constexpr double u01(std::uint64_t seed, Stream stream, std::uint64_t c0,
                            std::uint64_t c1 = 0, std::uint64_t c2 = 0) {
    return static_cast<double>(u64(seed, stream, c0, c1, c2) >> 11) * 0x1.0p-53;
}

// standard normal via Box-Muller; consumes counter slots (2*c2, 2*c2+1)
inline double normal(std::uint64_t seed, Stream stream, std::uint64_t c0,
                     std::uint64_t c1 = 0, std::uint64_t c2 = 0) {
    const double u1 = u01(seed, stream, c0, c1, 2 * c2);
    const double u2 = u01(seed, stream, c0, c1, 2 * c2 + 1);
    const double r = std::sqrt(-2.0 * std::log1p(-u1));  // 1-u1 in (0,1]
    return r * std::cos(6.283185307179586476925286766559 * u2);
}

// unbiased-enough index in [0, n): multiply-shift of a full 64-bit draw
inline constexpr std::uint64_t index(std::uint64_t h, std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(h) * n) >> 64);
}

}  // namespace bethe::rng
