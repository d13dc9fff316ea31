#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "kscal/data.hpp"
#include "kscal/dual.hpp"
#include "kscal/errors.hpp"
#include "kscal/kernel.hpp"
#include "kscal/param.hpp"
#include "kscal/queueing.hpp"

namespace kscal {

/// Everything a gradient step needs: observed data X, a resolved kernel, the
/// simulator, the parameter box, and the per-iteration simulated sample size.
template <std::size_t P>
struct ScoreContext {
    DataMatrix data;
    KernelSpec kernel;
    GG1Model model;
    BoxDomain<P> domain;
    std::size_t n = 500;

    void validate() const {
        data.validate();
        if (data.rows() < 2) throw ConfigError("ScoreContext: need at least two observations");
        if (n < 2) throw ConfigError("ScoreContext: simulated sample size must be at least 2");
        if (!kernel.resolved()) throw ConfigError("ScoreContext: kernel bandwidth unresolved");
        kernel.validate();
        if (model.validate() != P) throw ConfigError("ScoreContext: model parameter count mismatch");
        if (data.dim != 1)
            throw ConfigError("ScoreContext: the queue simulator emits scalar observations");
        domain.validate();
    }

    /// n / (m + n), recorded in reports.
    double sample_ratio() const {
        return static_cast<double>(n) / static_cast<double>(n + data.rows());
    }
};

/// Simulated-vs-data score
///   L = (1/(n(n-1))) sum_{i != j} k(Y_i, Y_j) - (2/(mn)) sum_{i,j} k(Y_j, X_i),
/// generic over T (double or Dual<P>); data points enter as constants, so the
/// gradient channel carries exactly the U-statistic gradient estimate.
template <typename T>
T kernel_simulated_score(const KernelSpec& kernel, const DataMatrix& X, std::span<const T> Y,
                         std::size_t dim) {
    if (dim == 0 || Y.size() % dim != 0)
        throw DimensionError("kernel_simulated_score: bad simulated sample shape");
    if (X.dim != dim) throw DimensionError("kernel_simulated_score: dimension mismatch");
    const std::size_t n = Y.size() / dim;
    const std::size_t m = X.rows();
    if (n < 2) throw ConfigError("kernel_simulated_score: need n >= 2 simulated draws");
    if (m < 1) throw ConfigError("kernel_simulated_score: need at least one observation");

    T pair_acc(0.0);
    T data_acc(0.0);
    if (dim == 1) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                pair_acc += kernel_eval1(kernel, Y[i], Y[j]);
        for (std::size_t j = 0; j < n; ++j) {
            T row(0.0);
            const T yj = Y[j];
            for (std::size_t i = 0; i < m; ++i) row += kernel_eval1(kernel, yj, T(X.values[i]));
            data_acc += row;
        }
    } else {
        std::vector<T> xlift(X.values.begin(), X.values.end());
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                pair_acc += kernel_eval(kernel, Y.subspan(i * dim, dim), Y.subspan(j * dim, dim));
        const std::span<const T> xs(xlift);
        for (std::size_t j = 0; j < n; ++j) {
            T row(0.0);
            for (std::size_t i = 0; i < m; ++i)
                row += kernel_eval(kernel, Y.subspan(j * dim, dim), xs.subspan(i * dim, dim));
            data_acc += row;
        }
    }
    const double pair_scale = 2.0 / (static_cast<double>(n) * static_cast<double>(n - 1));
    const double data_scale = 2.0 / (static_cast<double>(m) * static_cast<double>(n));
    return pair_acc * T(pair_scale) - data_acc * T(data_scale);
}

/// Constant-in-theta data term (1/(m(m-1))) sum_{i != j} k(X_i, X_j); adding
/// it to the simulated score gives the full unbiased squared-MMD estimate.
inline double data_self_term(const KernelSpec& kernel, const DataMatrix& X) {
    const std::size_t m = X.rows();
    if (m < 2) throw ConfigError("data_self_term: need at least two observations");
    double acc = 0.0;
    if (X.dim == 1) {
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = i + 1; j < m; ++j)
                acc += kernel_eval1(kernel, X.values[i], X.values[j]);
    } else {
        const std::span<const double> xs(X.values);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = i + 1; j < m; ++j)
                acc += kernel_eval(kernel, xs.subspan(i * X.dim, X.dim),
                                   xs.subspan(j * X.dim, X.dim));
    }
    return 2.0 * acc / (static_cast<double>(m) * static_cast<double>(m - 1));
}

/// Complete unbiased estimate of squared MMD between X and the sample Y.
inline double mmd_squared(const KernelSpec& kernel, const DataMatrix& X,
                          std::span<const double> Y, std::size_t dim) {
    return kernel_simulated_score<double>(kernel, X, Y, dim) + data_self_term(kernel, X);
}

/// Score at theta on frozen latent blocks (common random numbers); T dual
/// gives the gradient, T double feeds finite-difference oracles.
template <typename T, std::size_t P>
T score_on_blocks(const ScoreContext<P>& ctx, const std::array<T, P>& theta,
                  const std::vector<LatentBlock>& blocks) {
    std::vector<T> y(blocks.size());
    for (std::size_t j = 0; j < blocks.size(); ++j)
        y[j] = pushforward_waiting_time(ctx.model, theta, blocks[j]);
    return kernel_simulated_score<T>(ctx.kernel, ctx.data, std::span<const T>(y), 1);
}

template <std::size_t P>
struct ScoreEval {
    double value = 0.0;
    ParamVec<P> grad{};
};

/// One SGD evaluation: fresh n-replication simulated sample from the given
/// stream key, score value plus gradient. Pure function of (ctx, theta, key).
template <std::size_t P>
ScoreEval<P> score_gradient_step(const ScoreContext<P>& ctx, const ParamVec<P>& theta,
                                 std::uint64_t key) {
    if (!ctx.domain.contains(theta))
        throw DomainError("score_gradient_step: theta outside the box domain");
    const auto lifted = lift_params<P>(theta);
    const std::vector<Dual<P>> y = simulate_model_sample(ctx.model, lifted, ctx.n, key);
    const Dual<P> s =
        kernel_simulated_score<Dual<P>>(ctx.kernel, ctx.data, std::span<const Dual<P>>(y), 1);
    return {s.v, s.d};
}

}  // namespace kscal
