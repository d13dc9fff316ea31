#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "kscal/errors.hpp"
#include "kscal/kernel.hpp"
#include "kscal/param.hpp"
#include "kscal/queueing.hpp"
#include "kscal/rng.hpp"
#include "kscal/score.hpp"

namespace kscal {

/// Projected stochastic gradient descent settings. The step scale at
/// iteration t (0-based) is eta0 / sqrt(1 + t); with plain_sgd false it
/// multiplies the Adam step, otherwise the raw gradient.
struct SGDConfig {
    double eta0 = 1.0;
    int max_iters = 200;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps_adam = 1e-8;
    int averaging_window = 100;  // tail iterates averaged into theta_hat; 0 disables
    bool plain_sgd = false;
    bool record_theta_trace = false;

    void validate() const {
        if (!(eta0 > 0.0)) throw ConfigError("SGDConfig: eta0 must be positive");
        if (max_iters < 0) throw ConfigError("SGDConfig: max_iters must be nonnegative");
        if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0))
            throw ConfigError("SGDConfig: beta1, beta2 must lie in [0, 1)");
        if (!(eps_adam > 0.0)) throw ConfigError("SGDConfig: eps_adam must be positive");
        if (averaging_window < 0 || averaging_window > max_iters)
            throw ConfigError("SGDConfig: averaging_window must lie in [0, max_iters]");
    }
};

template <std::size_t P>
struct CalibrationResult {
    ParamVec<P> theta_hat{};
    ParamVec<P> theta0{};
    double final_score = 0.0;
    std::vector<double> score_trace;
    std::vector<ParamVec<P>> theta_trace;  // filled when record_theta_trace
    double wall_seconds = 0.0;
};

/// Projected Adam descent on the kernel simulated score. Iteration t draws
/// its simulated sample from derive_key(key, stream_tag::sgd_iteration, t),
/// so the whole trajectory is a pure function of (ctx, cfg, theta0, key).
/// Tail averaging over the last averaging_window projected iterates gives
/// theta_hat; the average of in-box points stays in the box.
template <std::size_t P>
CalibrationResult<P> calibrate(const ScoreContext<P>& ctx, const SGDConfig& cfg,
                               const ParamVec<P>& theta0, std::uint64_t key) {
    ctx.validate();
    cfg.validate();
    if (!ctx.domain.contains(theta0))
        throw ConfigError("calibrate: theta0 outside the box domain");

    const auto t_start = std::chrono::steady_clock::now();
    CalibrationResult<P> result;
    result.theta0 = theta0;
    result.score_trace.reserve(static_cast<std::size_t>(cfg.max_iters));

    ParamVec<P> theta = theta0;
    ParamVec<P> m1{};
    ParamVec<P> m2{};
    ParamVec<P> tail_sum{};
    int tail_count = 0;
    double last_score = 0.0;

    for (int t = 0; t < cfg.max_iters; ++t) {
        const std::uint64_t iter_key = derive_key(key, stream_tag::sgd_iteration,
                                                  static_cast<std::uint64_t>(t));
        const ScoreEval<P> eval = score_gradient_step(ctx, theta, iter_key);
        bool finite = std::isfinite(eval.value);
        for (double g : eval.grad) finite = finite && std::isfinite(g);
        if (!finite) throw DivergedError(t);
        result.score_trace.push_back(eval.value);
        last_score = eval.value;

        const double eta_t = cfg.eta0 / std::sqrt(1.0 + static_cast<double>(t));
        if (cfg.plain_sgd) {
            for (std::size_t i = 0; i < P; ++i) theta[i] -= eta_t * eval.grad[i];
        } else {
            const double bc1 = 1.0 - std::pow(cfg.beta1, t + 1);
            const double bc2 = 1.0 - std::pow(cfg.beta2, t + 1);
            for (std::size_t i = 0; i < P; ++i) {
                m1[i] = cfg.beta1 * m1[i] + (1.0 - cfg.beta1) * eval.grad[i];
                m2[i] = cfg.beta2 * m2[i] + (1.0 - cfg.beta2) * eval.grad[i] * eval.grad[i];
                const double step = (m1[i] / bc1) / (std::sqrt(m2[i] / bc2) + cfg.eps_adam);
                theta[i] -= eta_t * step;
            }
        }
        theta = project(theta, ctx.domain);
        if (cfg.record_theta_trace) result.theta_trace.push_back(theta);
        if (t >= cfg.max_iters - cfg.averaging_window) {
            for (std::size_t i = 0; i < P; ++i) tail_sum[i] += theta[i];
            ++tail_count;
        }
    }

    if (tail_count > 0) {
        for (std::size_t i = 0; i < P; ++i)
            result.theta_hat[i] = tail_sum[i] / static_cast<double>(tail_count);
    } else {
        result.theta_hat = theta;
    }
    result.final_score = last_score;
    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return result;
}

/// Reference optimal parameter: a long calibration against a fresh large
/// sample (5000 draws) from the target system, Polyak-Ruppert averaging over
/// the last 100 iterations. Used as the coverage/MSE truth when the model is
/// inexact. iters = 0 picks 1000 for the Riesz kernel and 800 otherwise.
template <std::size_t P>
ParamVec<P> estimate_optimal_parameter(const TargetSystem& target, const GG1Model& model,
                                       const KernelSpec& kernel, const BoxDomain<P>& domain,
                                       std::size_t n, std::uint64_t key, int iters = 0,
                                       std::size_t m_star = 5000) {
    const std::vector<double> x =
        generate_target_data(target, m_star, derive_key(key, stream_tag::target_data));
    ScoreContext<P> ctx;
    ctx.data = DataMatrix(x, 1);
    ctx.kernel = resolve_kernel(kernel, ctx.data.values, 1);
    ctx.model = model;
    ctx.domain = domain;
    ctx.n = n;

    SGDConfig cfg;
    cfg.eta0 = 1.0;
    cfg.max_iters = iters > 0 ? iters : (kernel.family == KernelFamily::riesz ? 1000 : 800);
    cfg.averaging_window = std::min(100, cfg.max_iters);

    RngStream init_rng(derive_key(key, stream_tag::theta_init));
    const ParamVec<P> theta0 = domain.sample_uniform(init_rng);
    const CalibrationResult<P> res =
        calibrate(ctx, cfg, theta0, derive_key(key, stream_tag::run));
    return res.theta_hat;
}

}  // namespace kscal
