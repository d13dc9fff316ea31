#pragma once

#include <cstddef>
#include <cstdint>
#include <iostream>
#include <vector>

#include "kscal/dual.hpp"
#include "kscal/errors.hpp"
#include "kscal/param.hpp"
#include "kscal/queueing.hpp"
#include "kscal/score.hpp"
#include "kscal/sym_matrix.hpp"

namespace kscal {

template <std::size_t P>
struct SandwichEstimate {
    SymMat<P> H_hat;
    SymMat<P> Sigma_hat;
    SymMat<P> C_hat;  // H^-1 Sigma H^-1
    std::size_t m = 0;
    std::size_t n_c = 0;
};

/// Between-observation covariance of gradient means,
///   Sigma = 4/(m-1) sum_i (mu_i - mu_bar)(mu_i - mu_bar)^T,
/// where mu_i is the mean over the frozen latent sample of the kernel
/// gradient against observation i. The simulated sample is pushed through
/// once and reused for every i.
template <std::size_t P>
SymMat<P> estimate_sigma(const ScoreContext<P>& ctx, const ParamVec<P>& theta_hat,
                         const std::vector<LatentBlock>& blocks) {
    const std::size_t m = ctx.data.rows();
    if (m < 2) throw ConfigError("estimate_sigma: need at least two observations");
    if (blocks.size() < 2) throw ConfigError("estimate_sigma: need at least two latent draws");

    const auto lifted = lift_params<P>(theta_hat);
    std::vector<Dual<P>> y(blocks.size());
    for (std::size_t j = 0; j < blocks.size(); ++j)
        y[j] = pushforward_waiting_time(ctx.model, lifted, blocks[j]);

    const double inv_nc = 1.0 / static_cast<double>(blocks.size());
    std::vector<ParamVec<P>> mu(m, ParamVec<P>{});
    for (std::size_t i = 0; i < m; ++i) {
        const Dual<P> xi(ctx.data.values[i]);
        ParamVec<P> acc{};
        for (std::size_t j = 0; j < y.size(); ++j) {
            const Dual<P> k = kernel_eval1(ctx.kernel, y[j], xi);
            for (std::size_t c = 0; c < P; ++c) acc[c] += k.d[c];
        }
        for (std::size_t c = 0; c < P; ++c) mu[i][c] = acc[c] * inv_nc;
    }

    ParamVec<P> mu_bar{};
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t c = 0; c < P; ++c) mu_bar[c] += mu[i][c];
    for (std::size_t c = 0; c < P; ++c) mu_bar[c] /= static_cast<double>(m);

    Mat<P> acc;
    for (std::size_t i = 0; i < m; ++i) {
        ParamVec<P> d{};
        for (std::size_t c = 0; c < P; ++c) d[c] = mu[i][c] - mu_bar[c];
        for (std::size_t r = 0; r < P; ++r)
            for (std::size_t c = 0; c < P; ++c) acc.a[r][c] += d[r] * d[c];
    }
    const double scale = 4.0 / static_cast<double>(m - 1);
    for (std::size_t r = 0; r < P; ++r)
        for (std::size_t c = 0; c < P; ++c) acc.a[r][c] *= scale;
    return SymMat<P>::symmetrized(acc);
}

/// Central-difference Hessian of a gradient function, symmetrized. When a
/// probe point theta +- h e_i leaves the box the step is halved (with a
/// warning) down to h_min, below which the coordinate is abandoned.
template <std::size_t P, typename GradFn>
SymMat<P> fd_hessian(GradFn&& grad_fn, const ParamVec<P>& theta, const BoxDomain<P>& domain,
                     double h, double h_min = 1e-4) {
    if (!(h > 0.0)) throw ConfigError("fd_hessian: step must be positive");
    Mat<P> cols;
    for (std::size_t i = 0; i < P; ++i) {
        double hi = h;
        while (true) {
            ParamVec<P> tp = theta;
            ParamVec<P> tm = theta;
            tp[i] += hi;
            tm[i] -= hi;
            if (domain.contains(tp) && domain.contains(tm)) {
                const ParamVec<P> gp = grad_fn(tp);
                const ParamVec<P> gm = grad_fn(tm);
                for (std::size_t r = 0; r < P; ++r) cols.a[r][i] = (gp[r] - gm[r]) / (2.0 * hi);
                break;
            }
            hi *= 0.5;
            if (hi < h_min)
                throw DomainError("fd_hessian: probe step underflowed h_min near the boundary");
            std::cerr << "fd_hessian: shrinking step for coordinate " << i << " to " << hi
                      << " (box boundary)\n";
        }
    }
    return SymMat<P>::symmetrized(cols);
}

/// Hessian of the score at theta_hat by central differences of the
/// forward-mode gradient on the frozen latent sample.
template <std::size_t P>
SymMat<P> estimate_hessian(const ScoreContext<P>& ctx, const ParamVec<P>& theta_hat,
                           const std::vector<LatentBlock>& blocks, double h = 0.1,
                           double h_min = 1e-4) {
    const auto grad_at = [&](const ParamVec<P>& t) {
        const Dual<P> s = score_on_blocks(ctx, lift_params<P>(t), blocks);
        return s.d;
    };
    return fd_hessian<P>(grad_at, theta_hat, ctx.domain, h, h_min);
}

/// Full plug-in sandwich on one frozen latent sample of size n_c drawn from
/// `key` (shared by Sigma and H, as the confidence construction requires).
template <std::size_t P>
SandwichEstimate<P> estimate_sandwich(const ScoreContext<P>& ctx, const ParamVec<P>& theta_hat,
                                      std::size_t n_c, double h, std::uint64_t key) {
    if (n_c < 2) throw ConfigError("estimate_sandwich: n_c must be at least 2");
    const std::vector<LatentBlock> blocks = draw_latent_blocks(ctx.model, n_c, key);
    SandwichEstimate<P> est;
    est.m = ctx.data.rows();
    est.n_c = n_c;
    est.Sigma_hat = estimate_sigma(ctx, theta_hat, blocks);
    est.H_hat = estimate_hessian(ctx, theta_hat, blocks, h);
    const SymMat<P> h_inv = sym_inverse(est.H_hat);
    est.C_hat =
        SymMat<P>::symmetrized(h_inv.as_mat() * est.Sigma_hat.as_mat() * h_inv.as_mat());
    return est;
}

}  // namespace kscal
