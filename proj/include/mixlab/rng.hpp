#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace mixlab {

// SplitMix64 step; used to derive well-separated substream seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Deterministic per-replication random stream. Replication r of a run with
// master seed s draws from an engine keyed by hash(s, r), so results do not
// depend on which worker executes which replication. All samplers are
// hand-rolled on top of raw 64-bit draws: std::normal_distribution is not
// guaranteed to produce identical streams across standard libraries.
class Substream {
public:
    Substream(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t s = seed;
        (void)splitmix64(s);
        s ^= 0xD1B54A32D192ED03ULL * (stream + 1);
        const std::uint64_t key = splitmix64(s);
        engine_.seed(key);
    }

    // uniform on (0,1]
    double uniform() {
        const std::uint64_t v = engine_() >> 11;  // 53 bits
        return static_cast<double>(v + 1) * 0x1.0p-53;
    }

    // standard normal via Box-Muller, pairs cached
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    // +1/-1 with equal probability
    double rademacher() { return (engine_() >> 63) ? 1.0 : -1.0; }

    // centered Bernoulli(p) standardized to unit variance
    double bernoulli_centered(double p) {
        const double x = (uniform() <= p) ? 1.0 : 0.0;
        return (x - p) / std::sqrt(p * (1.0 - p));
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace mixlab
