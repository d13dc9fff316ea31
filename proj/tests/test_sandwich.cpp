#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "kscal/sandwich.hpp"

using namespace kscal;
using Catch::Approx;

namespace {

ScoreContext<1> context_1p(const KernelSpec& kernel, std::size_t m, std::uint64_t data_key) {
    ScoreContext<1> ctx;
    ctx.kernel = kernel;
    ctx.model.arrival = RateSlot::exp_fixed(1.0);
    ctx.model.service = RateSlot::exp_param(0);
    ctx.model.burn_in = 3;
    ctx.model.horizon = 12;
    ctx.domain = BoxDomain<1>{{0.5}, {2.5}};
    ctx.n = 50;

    TargetSystem t;
    t.queue = ctx.model;
    t.queue.service = RateSlot::exp_fixed(1.2);
    ctx.data = DataMatrix(generate_target_data(t, m, data_key), 1);
    return ctx;
}

ScoreContext<2> context_2p(std::size_t m, std::uint64_t data_key) {
    ScoreContext<2> ctx;
    ctx.kernel = KernelSpec::riesz(1.0);
    ctx.model.arrival = RateSlot::gamma_param(0.5, 1);
    ctx.model.service = RateSlot::exp_param(0);
    ctx.model.burn_in = 0;
    ctx.model.horizon = 10;
    ctx.domain = BoxDomain<2>{{0.1, 0.1}, {3.0, 3.0}};
    ctx.n = 40;

    TargetSystem t;
    t.queue.arrival = RateSlot::gamma_fixed(0.5, 1.0);
    t.queue.service = RateSlot::exp_fixed(1.0);
    t.queue.burn_in = 0;
    t.queue.horizon = 10;
    ctx.data = DataMatrix(generate_target_data(t, m, data_key), 1);
    return ctx;
}

// Sign of every pre-threshold waiting-time value along the block's recursion.
// The score restricted to one block is smooth in theta exactly while this
// pattern stays fixed.
template <std::size_t P>
std::vector<char> hinge_pattern(const GG1Model& model, const std::array<double, P>& theta,
                                const LatentBlock& block) {
    const auto rate = [&](const RateSlot& slot) {
        return slot.param_index < 0 ? slot.fixed_rate
                                    : theta[static_cast<std::size_t>(slot.param_index)];
    };
    const double inv_lambda = 1.0 / rate(model.arrival);
    const double inv_mu = 1.0 / rate(model.service);
    std::vector<char> pattern(block.arrival.size());
    double w = 0.0;
    for (std::size_t j = 0; j < block.arrival.size(); ++j) {
        const double g = w + block.service[j] * inv_mu - block.arrival[j] * inv_lambda;
        pattern[j] = g > 0.0 ? 1 : 0;
        w = std::max(0.0, g);
    }
    return pattern;
}

// Blocks whose hinge pattern is identical at every point of the {-h, 0, +h}^P
// probe stencil, so that the finite differences all sample one smooth branch.
template <std::size_t P>
std::vector<LatentBlock> stencil_stable_blocks(const GG1Model& model,
                                               const std::array<double, P>& theta,
                                               std::size_t count, std::uint64_t key, double h) {
    std::size_t stencil = 1;
    for (std::size_t i = 0; i < P; ++i) stencil *= 3;
    std::vector<LatentBlock> blocks;
    for (std::uint64_t c = 0; blocks.size() < count && c < 100 * count; ++c) {
        RngStream rng(derive_key(key, c));
        LatentBlock block = draw_latent_block(model, rng);
        const auto base = hinge_pattern<P>(model, theta, block);
        bool stable = true;
        for (std::size_t point = 0; point < stencil && stable; ++point) {
            std::array<double, P> probe = theta;
            std::size_t code = point;
            for (std::size_t i = 0; i < P; ++i, code /= 3)
                probe[i] += (static_cast<int>(code % 3) - 1) * h;
            stable = hinge_pattern<P>(model, probe, block) == base;
        }
        if (stable) blocks.push_back(std::move(block));
    }
    REQUIRE(blocks.size() == count);
    return blocks;
}

}  // namespace

TEST_CASE("finite-difference hessian recovers a quadratic exactly") {
    // grad f = 2 A theta for f = theta^T A theta; central differences of a
    // linear map are exact, so the estimate must equal 2A to round-off.
    Mat<2> a;
    a(0, 0) = 2.0; a(0, 1) = 0.5;
    a(1, 0) = 0.5; a(1, 1) = 1.0;
    auto grad = [&](const ParamVec<2>& t) {
        ParamVec<2> g = a * t;
        for (double& v : g) v *= 2.0;
        return g;
    };
    const BoxDomain<2> box{{-10.0, -10.0}, {10.0, 10.0}};
    const SymMat<2> h = fd_hessian<2>(grad, {0.3, -0.2}, box, 0.1);
    REQUIRE(h(0, 0) == Approx(4.0).margin(1e-9));
    REQUIRE(h(0, 1) == Approx(1.0).margin(1e-9));
    REQUIRE(h(1, 1) == Approx(2.0).margin(1e-9));
}

TEST_CASE("hessian probes shrink near the boundary and keep the answer") {
    Mat<2> a;
    a(0, 0) = 3.0; a(0, 1) = -0.25;
    a(1, 0) = -0.25; a(1, 1) = 1.5;
    auto grad = [&](const ParamVec<2>& t) {
        ParamVec<2> g = a * t;
        for (double& v : g) v *= 2.0;
        return g;
    };
    const BoxDomain<2> box{{0.0, 0.0}, {1.0, 1.0}};
    // theta close to the upper face in coordinate 0: h halves until inside.
    const SymMat<2> h = fd_hessian<2>(grad, {0.95, 0.5}, box, 0.1);
    REQUIRE(h(0, 0) == Approx(6.0).margin(1e-9));
    REQUIRE(h(0, 1) == Approx(-0.5).margin(1e-9));
    REQUIRE(h(1, 1) == Approx(3.0).margin(1e-9));
}

TEST_CASE("hessian probes on the boundary underflow into a domain error") {
    auto grad = [](const ParamVec<1>& t) { return ParamVec<1>{2.0 * t[0]}; };
    const BoxDomain<1> box{{0.0}, {1.0}};
    REQUIRE_THROWS_AS(fd_hessian<1>(grad, {1.0}, box, 0.1, 0.04), DomainError);
    REQUIRE_THROWS_AS(fd_hessian<1>(grad, {0.5}, box, 0.0), ConfigError);
}

TEST_CASE("sigma collapses to the analytic form for the energy kernel at beta 2") {
    // With k(y, x) = -((y-x)^2 + eps)/2 the per-observation gradient mean is
    // mu_i = -A + x_i B with A = mean(y dy), B = mean(dy), so
    // Sigma = 4 B^2 var(x) exactly.
    ScoreContext<1> ctx = context_1p(KernelSpec::riesz(2.0), 25, 321);
    const ParamVec<1> theta{1.3};
    const auto blocks = draw_latent_blocks(ctx.model, 80, 555);

    const auto lifted = lift_params<1>(theta);
    double b = 0.0;
    for (const auto& block : blocks) {
        const Dual<1> y = pushforward_waiting_time(ctx.model, lifted, block);
        b += y.d[0];
    }
    b /= static_cast<double>(blocks.size());

    const std::size_t m = ctx.data.rows();
    double xbar = 0.0;
    for (double x : ctx.data.values) xbar += x;
    xbar /= static_cast<double>(m);
    double var_x = 0.0;
    for (double x : ctx.data.values) var_x += (x - xbar) * (x - xbar);
    var_x /= static_cast<double>(m - 1);

    const SymMat<1> sigma = estimate_sigma(ctx, theta, blocks);
    REQUIRE(sigma(0, 0) == Approx(4.0 * b * b * var_x).epsilon(1e-10));
}

TEST_CASE("sigma replays the defining sum in two dimensions") {
    ScoreContext<2> ctx = context_2p(15, 99);
    const ParamVec<2> theta{1.1, 0.8};
    const auto blocks = draw_latent_blocks(ctx.model, 60, 77);
    const SymMat<2> sigma = estimate_sigma(ctx, theta, blocks);

    // Independent reimplementation: accumulate the kernel-gradient means per
    // observation, then the scaled outer products.
    const auto lifted = lift_params<2>(theta);
    std::vector<Dual<2>> y(blocks.size());
    for (std::size_t j = 0; j < blocks.size(); ++j)
        y[j] = pushforward_waiting_time(ctx.model, lifted, blocks[j]);

    const std::size_t m = ctx.data.rows();
    std::vector<std::array<double, 2>> mu(m, {0.0, 0.0});
    for (std::size_t i = 0; i < m; ++i) {
        for (const auto& yj : y) {
            const Dual<2> k = kernel_eval1(ctx.kernel, yj, Dual<2>(ctx.data.values[i]));
            mu[i][0] += k.d[0];
            mu[i][1] += k.d[1];
        }
        mu[i][0] /= static_cast<double>(blocks.size());
        mu[i][1] /= static_cast<double>(blocks.size());
    }
    std::array<double, 2> bar{0.0, 0.0};
    for (const auto& v : mu) {
        bar[0] += v[0];
        bar[1] += v[1];
    }
    bar[0] /= static_cast<double>(m);
    bar[1] /= static_cast<double>(m);
    double s00 = 0.0, s01 = 0.0, s11 = 0.0;
    for (const auto& v : mu) {
        s00 += (v[0] - bar[0]) * (v[0] - bar[0]);
        s01 += (v[0] - bar[0]) * (v[1] - bar[1]);
        s11 += (v[1] - bar[1]) * (v[1] - bar[1]);
    }
    const double scale = 4.0 / static_cast<double>(m - 1);
    REQUIRE(sigma(0, 0) == Approx(scale * s00).margin(1e-14));
    REQUIRE(sigma(0, 1) == Approx(scale * s01).margin(1e-14));
    REQUIRE(sigma(1, 1) == Approx(scale * s11).margin(1e-14));

    // Covariance structure: symmetric with nonnegative diagonal.
    REQUIRE(sigma(0, 1) == sigma(1, 0));
    REQUIRE(sigma(0, 0) >= 0.0);
    REQUIRE(sigma(1, 1) >= 0.0);
}

TEST_CASE("sigma input validation") {
    ScoreContext<1> ctx = context_1p(KernelSpec::riesz(1.0), 10, 5);
    const auto blocks = draw_latent_blocks(ctx.model, 10, 6);
    ScoreContext<1> tiny = ctx;
    tiny.data = DataMatrix({1.0}, 1);
    REQUIRE_THROWS_AS(estimate_sigma(tiny, ParamVec<1>{1.0}, blocks), ConfigError);

    const std::vector<LatentBlock> one_block(1, blocks[0]);
    REQUIRE_THROWS_AS(estimate_sigma(ctx, ParamVec<1>{1.0}, one_block), ConfigError);
}

TEST_CASE("score hessian agrees with second differences of the score value") {
    // estimate_hessian differentiates the forward-mode gradient; an
    // independent oracle takes plain second differences of the double-valued
    // score on the same frozen blocks. Both equal f'' up to O(h^2) terms, but
    // only where the score is smooth across the probe window: beta = 2 keeps
    // the kernel free of coincidence kinks and the blocks are screened so no
    // hinge flips anywhere on the stencil.
    ScoreContext<1> ctx = context_1p(KernelSpec::riesz(2.0), 30, 808);
    const ParamVec<1> theta{1.25};
    const double h = 0.02;
    const auto blocks = stencil_stable_blocks<1>(ctx.model, theta, 120, 909, h);
    const SymMat<1> hess = estimate_hessian(ctx, theta, blocks, h);

    auto f = [&](double t) { return score_on_blocks(ctx, ParamVec<1>{t}, blocks); };
    const double second = (f(theta[0] + h) - 2.0 * f(theta[0]) + f(theta[0] - h)) / (h * h);
    REQUIRE(hess(0, 0) == Approx(second).margin(5e-3 * (1.0 + std::abs(second))));

    ScoreContext<2> ctx2 = context_2p(20, 43);
    ctx2.kernel = KernelSpec::riesz(2.0);
    const ParamVec<2> th2{1.0, 0.9};
    const auto blocks2 = stencil_stable_blocks<2>(ctx2.model, th2, 80, 44, h);
    const SymMat<2> hess2 = estimate_hessian(ctx2, th2, blocks2, h);
    auto f2 = [&](double u, double v) { return score_on_blocks(ctx2, ParamVec<2>{u, v}, blocks2); };
    const double d00 = (f2(th2[0] + h, th2[1]) - 2.0 * f2(th2[0], th2[1]) +
                        f2(th2[0] - h, th2[1])) / (h * h);
    const double d11 = (f2(th2[0], th2[1] + h) - 2.0 * f2(th2[0], th2[1]) +
                        f2(th2[0], th2[1] - h)) / (h * h);
    const double d01 = (f2(th2[0] + h, th2[1] + h) - f2(th2[0] + h, th2[1] - h) -
                        f2(th2[0] - h, th2[1] + h) + f2(th2[0] - h, th2[1] - h)) / (4.0 * h * h);
    REQUIRE(hess2(0, 0) == Approx(d00).margin(5e-3 * (1.0 + std::abs(d00))));
    REQUIRE(hess2(1, 1) == Approx(d11).margin(5e-3 * (1.0 + std::abs(d11))));
    REQUIRE(hess2(0, 1) == Approx(d01).margin(5e-3 * (1.0 + std::abs(d01))));
}

TEST_CASE("the full sandwich shares one frozen latent sample") {
    ScoreContext<1> ctx = context_1p(KernelSpec::riesz(1.0), 20, 31);
    const ParamVec<1> theta{1.2};
    const std::uint64_t key = 2718;
    const SandwichEstimate<1> est = estimate_sandwich(ctx, theta, 64, 0.1, key);
    REQUIRE(est.m == 20);
    REQUIRE(est.n_c == 64);

    // Rebuilding both pieces from the same key reproduces them exactly.
    const auto blocks = draw_latent_blocks(ctx.model, 64, key);
    REQUIRE(estimate_sigma(ctx, theta, blocks)(0, 0) == est.Sigma_hat(0, 0));
    REQUIRE(estimate_hessian(ctx, theta, blocks, 0.1)(0, 0) == est.H_hat(0, 0));

    // One parameter: C = Sigma / H^2.
    REQUIRE(est.C_hat(0, 0) ==
            Approx(est.Sigma_hat(0, 0) / (est.H_hat(0, 0) * est.H_hat(0, 0))).epsilon(1e-12));

    REQUIRE_THROWS_AS(estimate_sandwich(ctx, theta, 1, 0.1, key), ConfigError);
}

TEST_CASE("the two-parameter sandwich composes H^-1 Sigma H^-1") {
    ScoreContext<2> ctx = context_2p(25, 123);
    const ParamVec<2> theta{1.0, 0.9};
    const SandwichEstimate<2> est = estimate_sandwich(ctx, theta, 70, 0.1, 5150);

    const SymMat<2> h_inv = sym_inverse(est.H_hat);
    const Mat<2> expect = h_inv.as_mat() * est.Sigma_hat.as_mat() * h_inv.as_mat();
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j)
            REQUIRE(est.C_hat(i, j) ==
                    Approx(0.5 * (expect(i, j) + expect(j, i))).margin(1e-13));
}
