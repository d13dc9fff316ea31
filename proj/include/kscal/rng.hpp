#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "kscal/errors.hpp"

namespace kscal {

namespace detail {

/// SplitMix64 finalizer. Bijective on uint64, good avalanche.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

}  // namespace detail

/// Counter-based pseudo-random stream: output i is mix64(key + i*gamma).
///
/// Streams derived from the same (seed, tags...) are identical no matter
/// which thread draws from them, which is what makes the replication-level
/// parallelism in this library bit-reproducible.
class RngStream {
public:
    explicit RngStream(std::uint64_t key) : state_(key) {}

    std::uint64_t next_u64() {
        state_ += detail::kGamma;
        return detail::mix64(state_);
    }

    /// Uniform double strictly inside (0, 1).
    double next_uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Exp(1) variate.
    double next_exp1() { return -std::log(next_uniform()); }

    /// Standard normal via Box-Muller (one value per two uniforms).
    double next_normal() {
        const double u1 = next_uniform();
        const double u2 = next_uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Gamma(shape, 1) variate.
    ///
    /// shape == 0.5 uses the exact identity G^2/2 with G standard normal.
    /// shape >= 1 uses Marsaglia-Tsang squeeze rejection; shape < 1 boosts
    /// through Gamma(shape+1) * U^(1/shape).
    double next_gamma(double shape) {
        if (!(shape > 0.0)) throw DomainError("gamma shape must be positive");
        if (shape == 0.5) {
            const double g = next_normal();
            return 0.5 * g * g;
        }
        if (shape < 1.0) {
            const double boost = std::pow(next_uniform(), 1.0 / shape);
            return next_gamma(shape + 1.0) * boost;
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x;
            double v;
            do {
                x = next_normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = next_uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

private:
    std::uint64_t state_;
};

/// Purpose tags keeping derived streams for different uses disjoint.
namespace stream_tag {
inline constexpr std::uint64_t target_data = 1;
inline constexpr std::uint64_t contamination = 2;
inline constexpr std::uint64_t sgd_iteration = 3;
inline constexpr std::uint64_t confidence_latents = 4;
inline constexpr std::uint64_t theta_init = 5;
inline constexpr std::uint64_t run = 6;
inline constexpr std::uint64_t theta_star = 7;
inline constexpr std::uint64_t replication = 8;
}  // namespace stream_tag

/// Derive a child key. Order matters; derive(k,a,b) != derive(k,b,a).
constexpr std::uint64_t derive_key(std::uint64_t key, std::uint64_t tag) {
    return detail::mix64(key ^ (tag * 0xD6E8FEB86659FD93ULL + 0xA5A5A5A5A5A5A5A5ULL));
}

constexpr std::uint64_t derive_key(std::uint64_t key, std::uint64_t tag, std::uint64_t index) {
    return derive_key(derive_key(key, tag), index + 1);
}

}  // namespace kscal
