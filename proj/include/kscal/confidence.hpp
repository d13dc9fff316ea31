#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <vector>

#include "kscal/chi_square.hpp"
#include "kscal/errors.hpp"
#include "kscal/param.hpp"
#include "kscal/sandwich.hpp"
#include "kscal/sym_matrix.hpp"

namespace kscal {

/// Ellipsoidal confidence set
///   { theta : | sqrt(m) Sigma^{-1/2} H (theta - center) |^2 <= chi2_{1-alpha}(p) }.
/// The whitener sqrt(m) Sigma^{-1/2} H is precomputed; note it is a product
/// of symmetric matrices and in general not symmetric itself.
template <std::size_t P>
struct ConfidenceSet {
    ParamVec<P> center{};
    Mat<P> whitener;
    double threshold = 0.0;
    double alpha = 0.05;
    SymMat<P> H_hat;      // retained for reporting
    SymMat<P> Sigma_hat;  // retained for reporting
    std::size_t m = 0;
};

/// Builds the set from plug-in estimates. Throws NotPositiveDefiniteError
/// when Sigma is not positive definite and SingularMatrixError when H is
/// numerically singular; callers tally such runs as degenerate.
template <std::size_t P>
ConfidenceSet<P> build_confidence_set(const SandwichEstimate<P>& sandwich,
                                      const ParamVec<P>& theta_hat, double alpha) {
    if (sandwich.m < 1) throw ConfigError("build_confidence_set: empty data");
    const SymMat<P> white = sym_inverse_sqrt(sandwich.Sigma_hat);
    sym_inverse(sandwich.H_hat);  // reject singular H up front
    ConfidenceSet<P> set;
    set.center = theta_hat;
    set.whitener = white.as_mat() * sandwich.H_hat.as_mat();
    const double root_m = std::sqrt(static_cast<double>(sandwich.m));
    for (std::size_t i = 0; i < P; ++i)
        for (std::size_t j = 0; j < P; ++j) set.whitener.a[i][j] *= root_m;
    set.threshold = chi2_quantile(alpha, P);
    set.alpha = alpha;
    set.H_hat = sandwich.H_hat;
    set.Sigma_hat = sandwich.Sigma_hat;
    set.m = sandwich.m;
    return set;
}

/// The ellipsoid statistic |W (theta - center)|^2.
template <std::size_t P>
double set_statistic(const ConfidenceSet<P>& set, const ParamVec<P>& theta) {
    ParamVec<P> d{};
    for (std::size_t i = 0; i < P; ++i) d[i] = theta[i] - set.center[i];
    const ParamVec<P> w = set.whitener * d;
    double s = 0.0;
    for (double v : w) s += v * v;
    return s;
}

/// Membership test (closed set: boundary points belong).
template <std::size_t P>
bool contains(const ConfidenceSet<P>& set, const ParamVec<P>& theta) {
    return set_statistic(set, theta) <= set.threshold;
}

/// Geometry extract for reporting. p = 1 gives an interval; p = 2 gives the
/// ellipse axes, orientation, axis-aligned bounding box, and a boundary
/// polyline. Higher p supports membership only.
struct SetGeometry {
    std::size_t p = 0;
    double width = 0.0;
    double height = 0.0;  // p = 2 only
    double lo = 0.0;      // p = 1
    double hi = 0.0;      // p = 1
    std::array<double, 2> semi_axes{};             // p = 2, major axis first
    double angle_rad = 0.0;                        // major-axis direction
    std::vector<std::array<double, 2>> boundary;   // p = 2
};

template <std::size_t P>
SetGeometry set_geometry(const ConfidenceSet<P>& set, int boundary_points = 256) {
    SetGeometry g;
    g.p = P;
    if constexpr (P == 1) {
        const double w = std::abs(set.whitener.a[0][0]);
        if (!(w > 0.0)) throw SingularMatrixError(std::numeric_limits<double>::infinity());
        const double half = std::sqrt(set.threshold) / w;
        g.lo = set.center[0] - half;
        g.hi = set.center[0] + half;
        g.width = g.hi - g.lo;
        return g;
    } else if constexpr (P == 2) {
        // The set is (theta-c)^T Q (theta-c) <= 1 with Q = W^T W / threshold.
        const Mat<2> wt = set.whitener.transpose();
        SymMat<2> q = SymMat<2>::symmetrized(wt * set.whitener);
        for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t j = 0; j < 2; ++j) q.a[i][j] /= set.threshold;
        const SymMat<2> q_inv = sym_inverse(q);
        if (!(q_inv.a[0][0] > 0.0 && q_inv.a[1][1] > 0.0))
            throw NotPositiveDefiniteError(std::min(q_inv.a[0][0], q_inv.a[1][1]));
        g.width = 2.0 * std::sqrt(q_inv.a[0][0]);
        g.height = 2.0 * std::sqrt(q_inv.a[1][1]);

        const EigenSym<2> eig = jacobi_eigen(q);
        // Semi-axis length along eigenvector v_k is 1/sqrt(lambda_k); the
        // major axis belongs to the smaller eigenvalue.
        const std::size_t major = eig.values[0] <= eig.values[1] ? 0 : 1;
        const std::size_t minor = 1 - major;
        if (!(eig.values[major] > 0.0)) throw NotPositiveDefiniteError(eig.values[major]);
        g.semi_axes = {1.0 / std::sqrt(eig.values[major]), 1.0 / std::sqrt(eig.values[minor])};
        double vx = eig.vectors.a[0][major];
        double vy = eig.vectors.a[1][major];
        if (vx < 0.0 || (vx == 0.0 && vy < 0.0)) {
            vx = -vx;
            vy = -vy;
        }
        g.angle_rad = std::atan2(vy, vx);

        // Boundary: theta = c + W^{-1} sqrt(threshold) (cos t, sin t).
        const double det = set.whitener.a[0][0] * set.whitener.a[1][1] -
                           set.whitener.a[0][1] * set.whitener.a[1][0];
        if (!(std::abs(det) > 0.0))
            throw SingularMatrixError(std::numeric_limits<double>::infinity());
        const double inv00 = set.whitener.a[1][1] / det;
        const double inv01 = -set.whitener.a[0][1] / det;
        const double inv10 = -set.whitener.a[1][0] / det;
        const double inv11 = set.whitener.a[0][0] / det;
        const double r = std::sqrt(set.threshold);
        g.boundary.reserve(static_cast<std::size_t>(boundary_points));
        for (int k = 0; k < boundary_points; ++k) {
            const double t = 2.0 * std::numbers::pi * static_cast<double>(k) /
                             static_cast<double>(boundary_points);
            const double bx = r * std::cos(t);
            const double by = r * std::sin(t);
            g.boundary.push_back({set.center[0] + inv00 * bx + inv01 * by,
                                  set.center[1] + inv10 * bx + inv11 * by});
        }
        return g;
    } else {
        throw ConfigError("set_geometry: only p <= 2 has a geometry extract");
    }
}

}  // namespace kscal
