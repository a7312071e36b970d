#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "kinprice/model.hpp"

namespace kinprice {

/// splitmix64 finalizer; used to derive decorrelated seeds for substreams.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Run RNG. Draws are produced from the raw 64-bit engine output so sequences
/// depend only on the seed, not on the standard library's distribution code.
class Rng {
public:
    using engine_type = std::mt19937_64;

    explicit Rng(std::uint64_t seed) : engine_(mix_seed(seed)) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1).
    double uniform_open() {
        double u;
        do {
            u = uniform();
        } while (u == 0.0);
        return u;
    }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        // Marsaglia polar method
        double u, v, r2;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            r2 = u * u + v * v;
        } while (r2 >= 1.0 || r2 == 0.0);
        const double scale = std::sqrt(-2.0 * std::log(r2) / r2);
        spare_ = v * scale;
        has_spare_ = true;
        return u * scale;
    }

    bool bernoulli(double p) { return p >= 1.0 || uniform() < p; }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        // Lemire's nearly-divisionless method
        unsigned __int128 m = static_cast<unsigned __int128>(engine_()) * n;
        auto low = static_cast<std::uint64_t>(m);
        if (low < n) {
            const std::uint64_t threshold = (0 - n) % n;
            while (low < threshold) {
                m = static_cast<unsigned __int128>(engine_()) * n;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    engine_type& engine() { return engine_; }

private:
    engine_type engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Zero-mean noise with a prescribed variance.
class NoiseSampler {
public:
    /// Gaussian draws are truncated at this many raw standard deviations.
    static constexpr double truncation = 3.0;

    NoiseSampler(NoiseLaw law, double variance);

    double operator()(Rng& rng) const {
        if (scale_ == 0.0) return 0.0;
        if (law_ == NoiseLaw::uniform) return scale_ * (2.0 * rng.uniform() - 1.0);
        double z;
        do {
            z = rng.normal();
        } while (std::abs(z) > truncation);
        return scale_ * z;
    }

    double variance() const noexcept { return variance_; }
    /// Largest |eta| the sampler can return.
    double bound() const noexcept;

private:
    NoiseLaw law_;
    double variance_;
    double scale_;
};

inline NoiseSampler::NoiseSampler(NoiseLaw law, double variance)
    : law_(law), variance_(variance), scale_(0.0) {
    if (!(variance >= 0.0)) throw std::invalid_argument("NoiseSampler: negative variance");
    if (law == NoiseLaw::uniform) {
        scale_ = std::sqrt(3.0 * variance);
    } else {
        // variance of a standard normal truncated to [-c, c]
        const double c = truncation;
        const double pdf = std::exp(-0.5 * c * c) / std::sqrt(2.0 * M_PI);
        const double mass = std::erf(c / std::sqrt(2.0));
        const double truncated_var = 1.0 - 2.0 * c * pdf / mass;
        scale_ = std::sqrt(variance / truncated_var);
    }
}

inline double NoiseSampler::bound() const noexcept {
    return law_ == NoiseLaw::uniform ? scale_ : scale_ * truncation;
}

}  // namespace kinprice
