#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>

#include "kscal/errors.hpp"
#include "kscal/param.hpp"

namespace kscal {

/// Dense P x P matrix, row major. Small P only (the library targets p <= 4);
/// everything here is O(P^3) with plain loops.
template <std::size_t P>
struct Mat {
    std::array<std::array<double, P>, P> a{};

    double& operator()(std::size_t i, std::size_t j) { return a[i][j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i][j]; }

    static Mat identity() {
        Mat m;
        for (std::size_t i = 0; i < P; ++i) m.a[i][i] = 1.0;
        return m;
    }

    Mat transpose() const {
        Mat t;
        for (std::size_t i = 0; i < P; ++i)
            for (std::size_t j = 0; j < P; ++j) t.a[j][i] = a[i][j];
        return t;
    }

    friend Mat operator*(const Mat& x, const Mat& y) {
        Mat r;
        for (std::size_t i = 0; i < P; ++i)
            for (std::size_t k = 0; k < P; ++k) {
                const double xik = x.a[i][k];
                for (std::size_t j = 0; j < P; ++j) r.a[i][j] += xik * y.a[k][j];
            }
        return r;
    }

    friend ParamVec<P> operator*(const Mat& x, const ParamVec<P>& v) {
        ParamVec<P> r{};
        for (std::size_t i = 0; i < P; ++i)
            for (std::size_t j = 0; j < P; ++j) r[i] += x.a[i][j] * v[j];
        return r;
    }

    double max_abs() const {
        double m = 0.0;
        for (const auto& row : a)
            for (double v : row) m = std::max(m, std::abs(v));
        return m;
    }
};

/// Symmetric P x P matrix. Construction symmetrizes, so entries[i][j] ==
/// entries[j][i] holds exactly for every instance.
template <std::size_t P>
struct SymMat {
    std::array<std::array<double, P>, P> a{};

    SymMat() = default;

    /// Builds (M + M^T)/2; finite-difference Hessians are asymmetric at
    /// round-off level, so all inputs pass through here.
    static SymMat symmetrized(const Mat<P>& m) {
        SymMat s;
        for (std::size_t i = 0; i < P; ++i) {
            s.a[i][i] = m.a[i][i];
            for (std::size_t j = i + 1; j < P; ++j) {
                const double v = 0.5 * (m.a[i][j] + m.a[j][i]);
                s.a[i][j] = v;
                s.a[j][i] = v;
            }
        }
        return s;
    }

    static SymMat diagonal(const ParamVec<P>& d) {
        SymMat s;
        for (std::size_t i = 0; i < P; ++i) s.a[i][i] = d[i];
        return s;
    }

    static SymMat identity() { return diagonal([] { ParamVec<P> d; d.fill(1.0); return d; }()); }

    double& operator()(std::size_t i, std::size_t j) { return a[i][j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i][j]; }

    /// Set a[i][j] and a[j][i] together.
    void set(std::size_t i, std::size_t j, double v) {
        a[i][j] = v;
        a[j][i] = v;
    }

    Mat<P> as_mat() const {
        Mat<P> m;
        m.a = a;
        return m;
    }

    double trace() const {
        double t = 0.0;
        for (std::size_t i = 0; i < P; ++i) t += a[i][i];
        return t;
    }

    friend ParamVec<P> operator*(const SymMat& x, const ParamVec<P>& v) { return x.as_mat() * v; }
};

/// Eigendecomposition result: M = V diag(values) V^T, V orthogonal
/// (eigenvectors in columns).
template <std::size_t P>
struct EigenSym {
    ParamVec<P> values{};
    Mat<P> vectors;
};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
template <std::size_t P>
EigenSym<P> jacobi_eigen(const SymMat<P>& m) {
    auto a = m.a;
    Mat<P> v = Mat<P>::identity();
    if constexpr (P == 1) {
        return {{a[0][0]}, v};
    }
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < P; ++i)
            for (std::size_t j = i + 1; j < P; ++j) off += a[i][j] * a[i][j];
        if (off <= 1e-30 * (1.0 + m.as_mat().max_abs() * m.as_mat().max_abs())) break;
        for (std::size_t p = 0; p < P; ++p) {
            for (std::size_t q = p + 1; q < P; ++q) {
                if (a[p][q] == 0.0) continue;
                const double tau = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (std::size_t k = 0; k < P; ++k) {
                    const double akp = a[k][p];
                    const double akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < P; ++k) {
                    const double apk = a[p][k];
                    const double aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < P; ++k) {
                    const double vkp = v.a[k][p];
                    const double vkq = v.a[k][q];
                    v.a[k][p] = c * vkp - s * vkq;
                    v.a[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    EigenSym<P> out;
    for (std::size_t i = 0; i < P; ++i) out.values[i] = a[i][i];
    out.vectors = v;
    return out;
}

namespace detail {

/// V diag(f(lambda)) V^T, exactly symmetrized.
template <std::size_t P, typename F>
SymMat<P> eigen_rebuild(const EigenSym<P>& e, F&& f) {
    Mat<P> r;
    for (std::size_t i = 0; i < P; ++i)
        for (std::size_t j = 0; j < P; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < P; ++k)
                s += e.vectors.a[i][k] * f(e.values[k]) * e.vectors.a[j][k];
            r.a[i][j] = s;
        }
    return SymMat<P>::symmetrized(r);
}

}  // namespace detail

/// Inverse of a symmetric (possibly indefinite) matrix via eigendecomposition.
/// Throws SingularMatrixError when min|lambda| <= 1e-12 * max|lambda|.
template <std::size_t P>
SymMat<P> sym_inverse(const SymMat<P>& m) {
    const auto e = jacobi_eigen(m);
    double max_abs = 0.0;
    double min_abs = std::numeric_limits<double>::infinity();
    for (double lam : e.values) {
        max_abs = std::max(max_abs, std::abs(lam));
        min_abs = std::min(min_abs, std::abs(lam));
    }
    if (!(min_abs > 1e-12 * max_abs) || max_abs == 0.0)
        throw SingularMatrixError(min_abs == 0.0 ? std::numeric_limits<double>::infinity()
                                                 : max_abs / min_abs);
    return detail::eigen_rebuild(e, [](double lam) { return 1.0 / lam; });
}

/// Inverse square root of a symmetric positive definite matrix: the A with
/// A M A = I. Throws NotPositiveDefiniteError on a nonpositive eigenvalue.
template <std::size_t P>
SymMat<P> sym_inverse_sqrt(const SymMat<P>& m) {
    const auto e = jacobi_eigen(m);
    double max_eig = 0.0;
    for (double lam : e.values) max_eig = std::max(max_eig, lam);
    for (double lam : e.values)
        if (!(lam > 0.0) || lam <= 1e-14 * max_eig) throw NotPositiveDefiniteError(lam);
    return detail::eigen_rebuild(e, [](double lam) { return 1.0 / std::sqrt(lam); });
}

}  // namespace kscal
