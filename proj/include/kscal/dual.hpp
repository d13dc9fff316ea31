#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>

#include "kscal/errors.hpp"
#include "kscal/param.hpp"

namespace kscal {

/// Forward-mode dual number carrying a value and P partial derivatives.
/// P is the number of learnable parameters, fixed at compile time; the
/// library instantiates P in {1, .., 4} and dispatches at the CLI/config
/// boundary.
template <std::size_t P>
struct Dual {
    double v = 0.0;
    std::array<double, P> d{};

    Dual() = default;
    Dual(double value) : v(value) {}  // NOLINT: implicit lift of constants
    Dual(double value, const std::array<double, P>& deriv) : v(value), d(deriv) {}

    /// Seeds coordinate i with derivative 1 (the independent variable).
    static Dual seed(double value, std::size_t i) {
        Dual x(value);
        x.d[i] = 1.0;
        return x;
    }

    Dual operator-() const {
        Dual r(-v);
        for (std::size_t i = 0; i < P; ++i) r.d[i] = -d[i];
        return r;
    }

    Dual& operator+=(const Dual& o) {
        v += o.v;
        for (std::size_t i = 0; i < P; ++i) d[i] += o.d[i];
        return *this;
    }
    Dual& operator-=(const Dual& o) {
        v -= o.v;
        for (std::size_t i = 0; i < P; ++i) d[i] -= o.d[i];
        return *this;
    }
    Dual& operator*=(const Dual& o) {
        for (std::size_t i = 0; i < P; ++i) d[i] = d[i] * o.v + v * o.d[i];
        v *= o.v;
        return *this;
    }
    Dual& operator/=(const Dual& o) {
        if (o.v == 0.0) throw DomainError("Dual: division by zero");
        const double inv = 1.0 / o.v;
        for (std::size_t i = 0; i < P; ++i) d[i] = (d[i] - v * inv * o.d[i]) * inv;
        v *= inv;
        return *this;
    }

    friend Dual operator+(Dual a, const Dual& b) { return a += b; }
    friend Dual operator-(Dual a, const Dual& b) { return a -= b; }
    friend Dual operator*(Dual a, const Dual& b) { return a *= b; }
    friend Dual operator/(Dual a, const Dual& b) { return a /= b; }

    friend bool operator<(const Dual& a, const Dual& b) { return a.v < b.v; }
    friend bool operator>(const Dual& a, const Dual& b) { return a.v > b.v; }
    friend bool operator<=(const Dual& a, const Dual& b) { return a.v <= b.v; }
    friend bool operator>=(const Dual& a, const Dual& b) { return a.v >= b.v; }
    friend bool operator==(const Dual& a, const Dual& b) { return a.v == b.v; }
};

template <std::size_t P>
Dual<P> exp(const Dual<P>& x) {
    const double e = std::exp(x.v);
    Dual<P> r(e);
    for (std::size_t i = 0; i < P; ++i) r.d[i] = e * x.d[i];
    return r;
}

template <std::size_t P>
Dual<P> log(const Dual<P>& x) {
    if (!(x.v > 0.0)) throw DomainError("Dual: log of nonpositive value");
    Dual<P> r(std::log(x.v));
    const double inv = 1.0 / x.v;
    for (std::size_t i = 0; i < P; ++i) r.d[i] = inv * x.d[i];
    return r;
}

template <std::size_t P>
Dual<P> sqrt(const Dual<P>& x) {
    if (x.v < 0.0) throw DomainError("Dual: sqrt of negative value");
    const double s = std::sqrt(x.v);
    Dual<P> r(s);
    if (s == 0.0) throw DomainError("Dual: sqrt derivative at zero");
    const double h = 0.5 / s;
    for (std::size_t i = 0; i < P; ++i) r.d[i] = h * x.d[i];
    return r;
}

/// x^c for a constant exponent; requires x > 0 when c is non-integral.
/// c in {0.5, 1, 2} short-circuits to sqrt / identity / square, which keeps
/// the beta = 1 energy kernel off the slow pow path.
template <std::size_t P>
Dual<P> pow_const(const Dual<P>& x, double c) {
    if (!(x.v > 0.0)) throw DomainError("Dual: pow_const needs a positive base");
    if (c == 1.0) return x;
    if (c == 2.0) return x * x;
    double pv, slope;
    if (c == 0.5) {
        pv = std::sqrt(x.v);
        slope = 0.5 / pv;
    } else {
        pv = std::pow(x.v, c);
        slope = c * std::pow(x.v, c - 1.0);
    }
    Dual<P> r(pv);
    for (std::size_t i = 0; i < P; ++i) r.d[i] = slope * x.d[i];
    return r;
}

inline double pow_const(double x, double c) {
    if (!(x > 0.0)) throw DomainError("pow_const needs a positive base");
    if (c == 1.0) return x;
    if (c == 2.0) return x * x;
    if (c == 0.5) return std::sqrt(x);
    return std::pow(x, c);
}

/// max(x, 0) with subgradient 0 at the kink, matching the queueing
/// recursion's convention: a customer exactly at the boundary contributes
/// no sensitivity.
template <std::size_t P>
Dual<P> relu(const Dual<P>& x) {
    if (x.v > 0.0) return x;
    return Dual<P>(0.0);
}

inline double relu(double x) { return x > 0.0 ? x : 0.0; }

/// |x| with subgradient 0 at the kink (used by the Laplacian kernel).
template <std::size_t P>
Dual<P> abs_val(const Dual<P>& x) {
    if (x.v > 0.0) return x;
    if (x.v < 0.0) return -x;
    return Dual<P>(0.0);
}

inline double abs_val(double x) { return std::abs(x); }

// Plain-double overloads so scalar-generic code (kernels, the Lindley
// recursion) compiles for T = double: inside this namespace the Dual
// templates hide the std:: names.
inline double exp(double x) { return std::exp(x); }
inline double log(double x) { return std::log(x); }
inline double sqrt(double x) { return std::sqrt(x); }

inline double value_of(double x) { return x; }

template <std::size_t P>
double value_of(const Dual<P>& x) {
    return x.v;
}

/// Lifts theta[i] into a dual seeded on coordinate i.
template <std::size_t P>
std::array<Dual<P>, P> lift_params(const ParamVec<P>& theta) {
    std::array<Dual<P>, P> out;
    for (std::size_t i = 0; i < P; ++i) out[i] = Dual<P>::seed(theta[i], i);
    return out;
}

/// Max over coordinates of |forward-mode derivative - central difference|
/// / (1 + |central difference|), with f evaluated on the same latent draws
/// in both modes. f must accept std::array<T, P> for T in {double, Dual<P>}.
template <std::size_t P, typename F>
double grad_check(F&& f, const ParamVec<P>& theta, double h = 1e-5) {
    const Dual<P> y = f(lift_params<P>(theta));
    double worst = 0.0;
    for (std::size_t i = 0; i < P; ++i) {
        ParamVec<P> tp = theta;
        ParamVec<P> tm = theta;
        tp[i] += h;
        tm[i] -= h;
        const double fd = (f(tp) - f(tm)) / (2.0 * h);
        worst = std::max(worst, std::abs(fd - y.d[i]) / (1.0 + std::abs(fd)));
    }
    return worst;
}

}  // namespace kscal
