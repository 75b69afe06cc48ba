#pragma once

#include "aurlab/common.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace aurlab {

// Deterministic RNG used everywhere. mt19937_64 is fully specified by the
// standard; the uniform/normal mappings below are ours, so a given seed
// produces the same stream on every platform and compiler.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1): top 53 bits of the raw draw.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    // Box-Muller, second variate cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        // u1 in (0, 1] so the log is finite.
        double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
        double u2 = uniform01();
        double radius = std::sqrt(-2.0 * std::log(u1));
        double angle = 6.283185307179586476925286766559 * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    Vector normal_vector(int dim) {
        Vector v(dim);
        for (int i = 0; i < dim; ++i) v[i] = normal();
        return v;
    }

    // Integer in [0, bound) without modulo bias (rejection on the top range).
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t limit = bound * ((~std::uint64_t{0}) / bound);
        std::uint64_t draw;
        do {
            draw = next_u64();
        } while (draw >= limit);
        return draw % bound;
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Derives an independent stream seed from a master seed and a textual key
// (FNV-1a over the key, mixed with the master via splitmix64). Used for
// per-cell streams in the experiment harness so results are schedule
// independent.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view key) {
    std::uint64_t hash = 1469598103934665603ull;
    for (unsigned char c : key) {
        hash ^= c;
        hash *= 1099511628211ull;
    }
    std::uint64_t z = master ^ hash;
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

}  // namespace aurlab
