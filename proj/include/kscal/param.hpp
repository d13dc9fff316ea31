#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "kscal/errors.hpp"
#include "kscal/rng.hpp"

namespace kscal {

/// Parameter point in R^P.
template <std::size_t P>
using ParamVec = std::array<double, P>;

/// Axis-aligned box Theta = prod_i [lower[i], upper[i]].
template <std::size_t P>
struct BoxDomain {
    ParamVec<P> lower{};
    ParamVec<P> upper{};

    void validate() const {
        for (std::size_t i = 0; i < P; ++i) {
            if (!(lower[i] < upper[i]))
                throw ConfigError("box domain requires lower < upper in every coordinate");
            if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]))
                throw ConfigError("box domain bounds must be finite");
        }
    }

    bool contains(const ParamVec<P>& theta) const {
        for (std::size_t i = 0; i < P; ++i)
            if (theta[i] < lower[i] || theta[i] > upper[i]) return false;
        return true;
    }

    /// Uniform draw from the box.
    ParamVec<P> sample_uniform(RngStream& rng) const {
        ParamVec<P> out{};
        for (std::size_t i = 0; i < P; ++i)
            out[i] = lower[i] + (upper[i] - lower[i]) * rng.next_uniform();
        return out;
    }
};

/// Clamp each coordinate into the box. Idempotent.
template <std::size_t P>
ParamVec<P> project(const ParamVec<P>& theta, const BoxDomain<P>& domain) {
    ParamVec<P> out{};
    for (std::size_t i = 0; i < P; ++i)
        out[i] = std::clamp(theta[i], domain.lower[i], domain.upper[i]);
    return out;
}

template <std::size_t P>
void check_finite(const ParamVec<P>& theta, const char* what) {
    for (double v : theta)
        if (!std::isfinite(v)) throw DomainError(std::string(what) + " has a non-finite entry");
}

/// Runtime-sized views used at the config/CLI boundary.
template <std::size_t P>
ParamVec<P> to_fixed(std::span<const double> v) {
    if (v.size() != P) throw DimensionError("parameter vector has wrong dimension");
    ParamVec<P> out{};
    std::copy(v.begin(), v.end(), out.begin());
    return out;
}

template <std::size_t P>
std::vector<double> to_vector(const ParamVec<P>& v) {
    return {v.begin(), v.end()};
}

template <std::size_t P>
BoxDomain<P> make_domain(std::span<const double> lower, std::span<const double> upper) {
    BoxDomain<P> d{to_fixed<P>(lower), to_fixed<P>(upper)};
    d.validate();
    return d;
}

}  // namespace kscal
