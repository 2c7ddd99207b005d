#pragma once

#include <cmath>
#include <cstdint>

namespace hullstereo {

// splitmix64; all procedural randomness in the project goes through these so
// results are identical across platforms and thread counts.
inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline uint64_t hash_combine(uint64_t seed, uint64_t v) {
    uint64_t s = seed ^ (v + 0x9e3779b97f4a7c15ull + (seed << 6) + (seed >> 2));
    return splitmix64(s);
}

// Uniform in [0, 1).
inline double to_unit(uint64_t h) { return (h >> 11) * 0x1.0p-53; }

struct Rng {
    uint64_t state;
    explicit Rng(uint64_t seed) : state(seed) {}
    uint64_t next() { return splitmix64(state); }
    double uniform() { return to_unit(next()); }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    // Uniform integer in [0, n).
    uint64_t below(uint64_t n) { return next() % n; }
};

// Stateless lattice hash used by the value-noise generators.
inline double lattice(uint64_t seed, int64_t ix, int64_t iy, int64_t iz = 0) {
    uint64_t h = seed;
    h = hash_combine(h, static_cast<uint64_t>(ix));
    h = hash_combine(h, static_cast<uint64_t>(iy));
    h = hash_combine(h, static_cast<uint64_t>(iz));
    return to_unit(h);
}

inline double smoothstep01(double t) { return t * t * (3.0 - 2.0 * t); }

// Smoothly interpolated value noise in [0, 1].
inline double value_noise2(uint64_t seed, double x, double y) {
    double fx = std::floor(x), fy = std::floor(y);
    int64_t ix = static_cast<int64_t>(fx), iy = static_cast<int64_t>(fy);
    double tx = smoothstep01(x - fx), ty = smoothstep01(y - fy);
    double v00 = lattice(seed, ix, iy), v10 = lattice(seed, ix + 1, iy);
    double v01 = lattice(seed, ix, iy + 1), v11 = lattice(seed, ix + 1, iy + 1);
    double a = v00 + (v10 - v00) * tx;
    double b = v01 + (v11 - v01) * tx;
    return a + (b - a) * ty;
}

inline double value_noise3(uint64_t seed, double x, double y, double z) {
    double fx = std::floor(x), fy = std::floor(y), fz = std::floor(z);
    int64_t ix = static_cast<int64_t>(fx), iy = static_cast<int64_t>(fy), iz = static_cast<int64_t>(fz);
    double tx = smoothstep01(x - fx), ty = smoothstep01(y - fy), tz = smoothstep01(z - fz);
    auto lerp = [](double a, double b, double t) { return a + (b - a) * t; };
    double v0 = lerp(lerp(lattice(seed, ix, iy, iz), lattice(seed, ix + 1, iy, iz), tx),
                     lerp(lattice(seed, ix, iy + 1, iz), lattice(seed, ix + 1, iy + 1, iz), tx), ty);
    double v1 = lerp(lerp(lattice(seed, ix, iy, iz + 1), lattice(seed, ix + 1, iy, iz + 1), tx),
                     lerp(lattice(seed, ix, iy + 1, iz + 1), lattice(seed, ix + 1, iy + 1, iz + 1), tx), ty);
    return lerp(v0, v1, tz);
}

} // namespace hullstereo
