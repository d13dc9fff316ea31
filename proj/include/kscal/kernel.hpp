#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "kscal/dual.hpp"
#include "kscal/errors.hpp"

namespace kscal {

enum class KernelFamily { gaussian, laplacian, riesz };

inline std::string kernel_family_name(KernelFamily f) {
    switch (f) {
        case KernelFamily::gaussian: return "gaussian";
        case KernelFamily::laplacian: return "laplacian";
        case KernelFamily::riesz: return "riesz";
    }
    return "?";
}

/// Kernel choice plus hyperparameters.
///
/// Gaussian:  k(x,y) = exp(-|x-y|_2^2 / (2 sigma))
/// Laplacian: k(x,y) = exp(-|x-y|_1 / sigma)
/// Riesz:     k(x,y) = -1/2 (|x-y|_2^2 + eps)^(beta/2)
///
/// For the Gaussian, sigma may be left unresolved (sigma_pending) and filled
/// in once per run from the median heuristic on the observed data. beta = 2
/// makes the Riesz score non-strictly proper; it stays allowed for sweeps.
struct KernelSpec {
    KernelFamily family = KernelFamily::gaussian;
    bool sigma_pending = false;  // Gaussian only: resolve via median heuristic
    double sigma = 1.0;
    double beta = 1.0;       // Riesz only
    double eps = 1e-8;       // Riesz smoothing

    static KernelSpec gaussian_median() {
        KernelSpec s;
        s.family = KernelFamily::gaussian;
        s.sigma_pending = true;
        s.sigma = 0.0;
        return s;
    }
    static KernelSpec gaussian(double sigma) {
        KernelSpec s;
        s.family = KernelFamily::gaussian;
        s.sigma = sigma;
        s.validate();
        return s;
    }
    static KernelSpec laplacian(double sigma) {
        KernelSpec s;
        s.family = KernelFamily::laplacian;
        s.sigma = sigma;
        s.validate();
        return s;
    }
    static KernelSpec riesz(double beta = 1.0, double eps = 1e-8) {
        KernelSpec s;
        s.family = KernelFamily::riesz;
        s.beta = beta;
        s.eps = eps;
        s.validate();
        return s;
    }

    bool resolved() const { return family == KernelFamily::riesz || !sigma_pending; }

    void validate() const {
        switch (family) {
            case KernelFamily::gaussian:
                if (!sigma_pending && !(sigma > 0.0))
                    throw ConfigError("gaussian kernel: sigma must be positive");
                break;
            case KernelFamily::laplacian:
                if (sigma_pending)
                    throw ConfigError("laplacian kernel: sigma must be given explicitly");
                if (!(sigma > 0.0))
                    throw ConfigError("laplacian kernel: sigma must be positive");
                break;
            case KernelFamily::riesz:
                if (!(beta > 0.0 && beta <= 2.0))
                    throw ConfigError("riesz kernel: beta must lie in (0, 2]");
                if (!(eps >= 0.0)) throw ConfigError("riesz kernel: eps must be nonnegative");
                break;
        }
    }
};

/// Kernel evaluation, generic over the scalar type (double or Dual<P>).
/// Data points enter as constants through the implicit double -> T lift.
template <typename T>
T kernel_eval(const KernelSpec& spec, std::span<const T> x, std::span<const T> y) {
    if (x.size() != y.size()) throw DimensionError("kernel_eval: dimension mismatch");
    if (x.empty()) throw DimensionError("kernel_eval: empty input");
    if (!spec.resolved())
        throw ConfigError("kernel_eval: bandwidth not resolved (median heuristic pending)");
    switch (spec.family) {
        case KernelFamily::gaussian: {
            T sq(0.0);
            for (std::size_t i = 0; i < x.size(); ++i) {
                const T d = x[i] - y[i];
                sq += d * d;
            }
            return exp(-sq / T(2.0 * spec.sigma));
        }
        case KernelFamily::laplacian: {
            T l1(0.0);
            for (std::size_t i = 0; i < x.size(); ++i) l1 += abs_val(x[i] - y[i]);
            return exp(-l1 / T(spec.sigma));
        }
        case KernelFamily::riesz: {
            T sq(0.0);
            for (std::size_t i = 0; i < x.size(); ++i) {
                const T d = x[i] - y[i];
                sq += d * d;
            }
            if (!(value_of(sq) + spec.eps > 0.0)) return T(0.0);  // coincident, eps = 0
            return T(-0.5) * pow_const(sq + T(spec.eps), 0.5 * spec.beta);
        }
    }
    throw ConfigError("kernel_eval: unknown kernel family");
}

/// Scalar (d = 1) overloads: the queueing experiments emit one number per
/// observation and this path is hot.
template <typename T>
T kernel_eval1(const KernelSpec& spec, const T& x, const T& y) {
    if (!spec.resolved())
        throw ConfigError("kernel_eval1: bandwidth not resolved (median heuristic pending)");
    switch (spec.family) {
        case KernelFamily::gaussian: {
            const T d = x - y;
            return exp(d * d * T(-0.5 / spec.sigma));
        }
        case KernelFamily::laplacian:
            return exp(abs_val(x - y) * T(-1.0 / spec.sigma));
        case KernelFamily::riesz: {
            const T d = x - y;
            const T sq = d * d;
            if (!(value_of(sq) + spec.eps > 0.0)) return T(0.0);
            return T(-0.5) * pow_const(sq + T(spec.eps), 0.5 * spec.beta);
        }
    }
    throw ConfigError("kernel_eval1: unknown kernel family");
}

/// Median-heuristic bandwidth: half the median of all pairwise squared
/// Euclidean distances of the rows of `data` (n rows of dimension d,
/// flattened row-major). Even pair counts average the two central order
/// statistics. Computed on the observed data only and frozen for the run.
inline double median_heuristic(std::span<const double> data, std::size_t dim) {
    if (dim == 0) throw DimensionError("median_heuristic: dimension must be positive");
    if (data.size() % dim != 0)
        throw DimensionError("median_heuristic: data size not a multiple of dimension");
    const std::size_t n = data.size() / dim;
    if (n < 2) throw DegenerateDataError("median_heuristic: need at least two points");
    std::vector<double> sq;
    sq.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < dim; ++k) {
                const double d = data[i * dim + k] - data[j * dim + k];
                s += d * d;
            }
            sq.push_back(s);
        }
    std::sort(sq.begin(), sq.end());
    const std::size_t mid = sq.size() / 2;
    const double med = (sq.size() % 2 == 1) ? sq[mid] : 0.5 * (sq[mid - 1] + sq[mid]);
    if (!(med > 0.0))
        throw DegenerateDataError("median_heuristic: all points identical, bandwidth would be 0");
    return 0.5 * med;
}

/// Returns a copy of `spec` with any pending Gaussian bandwidth resolved on
/// the given data.
inline KernelSpec resolve_kernel(const KernelSpec& spec, std::span<const double> data,
                                 std::size_t dim) {
    KernelSpec out = spec;
    if (spec.family == KernelFamily::gaussian && spec.sigma_pending) {
        out.sigma = median_heuristic(data, dim);
        out.sigma_pending = false;
    }
    out.validate();
    return out;
}

}  // namespace kscal
