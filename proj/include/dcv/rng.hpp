#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace dcv {

/// SplitMix64 generator. The state advances by the golden-ratio increment
/// 0x9E3779B97F4A7C15 and each output is the state passed through the
/// mix13 finalizer (xor-shift 30, multiply 0xBF58476D1CE4E5B9, xor-shift 27,
/// multiply 0x94D049BB133111EB, xor-shift 31). Uniform doubles take the top
/// 53 bits; normals use the Box-Muller transform, consuming two uniforms per
/// pair and returning the cosine branch first.
///
/// Everything random in the project is derived from one 64-bit seed through
/// this class, so fixtures are reproducible across platforms and languages.
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next()
    {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal draw.
    double normal()
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0)
            u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

  private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Stateless 64-bit hash (one SplitMix64 finalizer round over the key).
inline std::uint64_t hash64(std::uint64_t key)
{
    SplitMix64 g(key);
    return g.next();
}

} // namespace dcv
