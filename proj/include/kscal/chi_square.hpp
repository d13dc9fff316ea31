#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>

#include "kscal/errors.hpp"

namespace kscal {
namespace detail {

/// Regularized lower incomplete gamma P(s, x), series expansion.
/// Converges quickly for x < s + 1.
inline double gamma_p_series(double s, double x) {
    double term = 1.0 / s;
    double sum = term;
    for (int k = 1; k < 500; ++k) {
        term *= x / (s + k);
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + s * std::log(x) - std::lgamma(s));
}

/// Regularized upper incomplete gamma Q(s, x) by Lentz continued fraction.
/// Preferred for x >= s + 1.
inline double gamma_q_cf(double s, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - s;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int k = 1; k < 500; ++k) {
        const double an = -static_cast<double>(k) * (k - s);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return h * std::exp(-x + s * std::log(x) - std::lgamma(s));
}

}  // namespace detail

/// Regularized lower incomplete gamma function P(s, x) = gamma(s, x) / Gamma(s).
inline double gamma_p(double s, double x) {
    if (!(s > 0.0)) throw DomainError("gamma_p: shape must be positive");
    if (x < 0.0) throw DomainError("gamma_p: x must be nonnegative");
    if (x == 0.0) return 0.0;
    if (x < s + 1.0) return detail::gamma_p_series(s, x);
    return 1.0 - detail::gamma_q_cf(s, x);
}

/// CDF of the chi-square distribution with p degrees of freedom.
inline double chi2_cdf(double q, std::size_t p) {
    if (p == 0) throw DomainError("chi2_cdf: degrees of freedom must be positive");
    if (q <= 0.0) return 0.0;
    return gamma_p(0.5 * static_cast<double>(p), 0.5 * q);
}

/// Quantile of the chi-square distribution: the q with CDF(q) = 1 - alpha.
/// Bracketing bisection followed by Newton polish; accurate to 1e-10 in CDF.
inline double chi2_quantile(double alpha, std::size_t p) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw DomainError("chi2_quantile: alpha must lie in (0, 1)");
    if (p == 0) throw DomainError("chi2_quantile: degrees of freedom must be positive");
    const double target = 1.0 - alpha;
    const double dof = static_cast<double>(p);

    double lo = 0.0;
    double hi = dof + 1.0;
    while (chi2_cdf(hi, p) < target) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e12) throw DomainError("chi2_quantile: bracket expansion failed");
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (chi2_cdf(mid, p) < target)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-9 * (1.0 + hi)) break;
    }
    double q = 0.5 * (lo + hi);
    // Newton steps on CDF(q) - target with the chi-square density.
    for (int it = 0; it < 8; ++it) {
        const double f = chi2_cdf(q, p) - target;
        const double pdf = std::exp((0.5 * dof - 1.0) * std::log(q) - 0.5 * q -
                                    std::lgamma(0.5 * dof) - 0.5 * dof * std::numbers::ln2);
        if (!(pdf > 0.0)) break;
        const double step = f / pdf;
        const double next = q - step;
        if (next > lo && next < hi) q = next;
        if (std::abs(f) < 1e-12) break;
    }
    return q;
}

}  // namespace kscal
