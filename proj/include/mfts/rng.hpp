#pragma once

#include <cstdint>
#include <cmath>

namespace mfts {

// 64-bit finalizer from SplitMix64. Output of the generator below is a pure
// function of (seed, stream, counter), so identical sequences are produced on
// any platform and any cell of a stream can be recomputed independently.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

class CounterRng {
  public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : base_(mix64(seed) ^ mix64(0xda3e39cb94b95bdbull * (stream + 1))) {}

    // Independent sub-stream; safe to hand to parallel workers.
    CounterRng derive(std::uint64_t stream) const {
        CounterRng child(0);
        child.base_ = mix64(base_ ^ mix64(0x9e3779b97f4a7c15ull * (stream + 1)));
        return child;
    }

    std::uint64_t next_u64() { return mix64(base_ + 0x9e3779b97f4a7c15ull * ++counter_); }

    // Uniform on (0,1), 53-bit resolution, never exactly 0 or 1.
    double next_uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
    }

    // Box-Muller; second deviate cached.
    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = next_uniform();
        const double u2 = next_uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // Deterministic Poisson draw. CDF inversion for small means, rounded
    // Gaussian approximation for large ones (stress-test use only).
    long long next_poisson(double lambda) {
        if (lambda <= 0.0) return 0;
        if (lambda > 30.0) {
            const double draw = lambda + std::sqrt(lambda) * next_gaussian();
            return draw < 0.0 ? 0 : static_cast<long long>(std::llround(draw));
        }
        const double u = next_uniform();
        double p = std::exp(-lambda);
        double cdf = p;
        long long k = 0;
        while (u > cdf && k < 400) {
            ++k;
            p *= lambda / static_cast<double>(k);
            cdf += p;
        }
        return k;
    }

  private:
    std::uint64_t base_;
    std::uint64_t counter_ = 0;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace mfts
