#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace gssl {

/// SplitMix64 step; used both as a mixer and for seed derivation.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Counter-based seed derivation: jobs indexed by (stream, index) get
/// independent seeds from one master seed. Documented so that trial
/// subsets can be reproduced without running the full schedule.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                 std::uint64_t index = 0) {
    return splitmix64(master ^ splitmix64(stream ^ splitmix64(index)));
}

/// Standard normal generator with a pinned algorithm (Box-Muller over
/// explicit 53-bit uniforms) so sampled datasets do not depend on the
/// standard library's distribution internals.
class NormalSampler {
public:
    explicit NormalSampler(std::uint64_t seed) : engine_(seed) {}

    double operator()() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        // u1 in (0,1], u2 in [0,1)
        const double u1 = ((engine_() >> 11) + 1) * 0x1.0p-53;
        const double u2 = (engine_() >> 11) * 0x1.0p-53;
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    /// Uniform in [0,1).
    double uniform() { return (engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, bound) by rejection (unbiased).
    std::uint64_t uniform_below(std::uint64_t bound) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % bound;
    }

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace gssl
