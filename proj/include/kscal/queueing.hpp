#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "kscal/dual.hpp"
#include "kscal/errors.hpp"
#include "kscal/param.hpp"
#include "kscal/rng.hpp"

namespace kscal {

enum class LatentKind { exponential, gamma };

/// One side of the queue (arrival or service process). The latent reference
/// draw is Exp(1) or Gamma(shape, 1); the realized time is latent / rate.
/// The rate is either theta[param_index] (learnable) or a fixed constant.
/// Gamma shapes are simulation constants and never learnable.
struct RateSlot {
    LatentKind kind = LatentKind::exponential;
    double shape = 1.0;     // gamma only
    int param_index = -1;   // >= 0 selects a theta coordinate
    double fixed_rate = 1.0;

    static RateSlot exp_fixed(double rate) { return {LatentKind::exponential, 1.0, -1, rate}; }
    static RateSlot exp_param(int index) { return {LatentKind::exponential, 1.0, index, 0.0}; }
    static RateSlot gamma_fixed(double shape, double rate) {
        return {LatentKind::gamma, shape, -1, rate};
    }
    static RateSlot gamma_param(double shape, int index) {
        return {LatentKind::gamma, shape, index, 0.0};
    }
};

/// Single-server FIFO queue simulated through the Lindley recursion, with
/// burn_in customers discarded and the next `horizon` waiting times averaged
/// into one output observation.
struct GG1Model {
    RateSlot arrival;
    RateSlot service;
    int burn_in = 10;
    int horizon = 50;

    int block_length() const { return burn_in + horizon; }

    /// Number of learnable coordinates; checks that indices 0..p-1 are each
    /// consumed by exactly one slot and that fixed rates are positive.
    std::size_t validate() const {
        if (burn_in < 0) throw ConfigError("GG1Model: burn_in must be nonnegative");
        if (horizon < 1) throw ConfigError("GG1Model: horizon must be at least 1");
        std::array<const RateSlot*, 2> slots{&arrival, &service};
        int max_index = -1;
        for (const RateSlot* s : slots) {
            if (s->kind == LatentKind::gamma && !(s->shape > 0.0))
                throw ConfigError("GG1Model: gamma shape must be positive");
            if (s->param_index >= 0)
                max_index = std::max(max_index, s->param_index);
            else if (!(s->fixed_rate > 0.0))
                throw ConfigError("GG1Model: fixed rate must be positive");
        }
        const std::size_t p = static_cast<std::size_t>(max_index + 1);
        std::vector<int> used(p, 0);
        for (const RateSlot* s : slots)
            if (s->param_index >= 0) ++used[static_cast<std::size_t>(s->param_index)];
        for (std::size_t i = 0; i < p; ++i)
            if (used[i] != 1)
                throw ConfigError("GG1Model: every theta coordinate must feed exactly one rate");
        return p;
    }
};

/// Latent reference draws for one output observation: one interarrival and
/// one service latent per customer, burn-in included.
struct LatentBlock {
    std::vector<double> arrival;
    std::vector<double> service;
};

namespace detail {

inline double draw_latent(const RateSlot& slot, RngStream& rng) {
    return slot.kind == LatentKind::exponential ? rng.next_exp1() : rng.next_gamma(slot.shape);
}

}  // namespace detail

/// Draws all latents for one observation: arrival latents first, then
/// service latents, in customer order.
inline LatentBlock draw_latent_block(const GG1Model& model, RngStream& rng) {
    const std::size_t len = static_cast<std::size_t>(model.block_length());
    LatentBlock block;
    block.arrival.resize(len);
    block.service.resize(len);
    for (std::size_t j = 0; j < len; ++j) block.arrival[j] = detail::draw_latent(model.arrival, rng);
    for (std::size_t j = 0; j < len; ++j) block.service[j] = detail::draw_latent(model.service, rng);
    return block;
}

namespace detail {

template <typename T, std::size_t P>
T slot_rate(const RateSlot& slot, const std::array<T, P>& theta) {
    if (slot.param_index < 0) return T(slot.fixed_rate);
    const T r = theta[static_cast<std::size_t>(slot.param_index)];
    if (!(value_of(r) > 0.0)) throw DomainError("GG1Model: rate must be positive");
    return r;
}

}  // namespace detail

/// Lindley recursion on a fixed latent block:
///   W_0 = 0,  W_{j+1} = max(0, W_j + service_j/mu - arrival_j/lambda),
/// returning the mean of the `horizon` post-burn-in waiting times. T is
/// double or Dual<P>; gradients flow through the rates only.
template <typename T, std::size_t P>
T pushforward_waiting_time(const GG1Model& model, const std::array<T, P>& theta,
                           const LatentBlock& block) {
    const std::size_t len = static_cast<std::size_t>(model.block_length());
    if (block.arrival.size() != len || block.service.size() != len)
        throw DimensionError("pushforward_waiting_time: block length mismatch");
    const T arrival_rate = detail::slot_rate(model.arrival, theta);
    const T service_rate = detail::slot_rate(model.service, theta);
    const T inv_lambda = T(1.0) / arrival_rate;
    const T inv_mu = T(1.0) / service_rate;
    T w(0.0);
    T acc(0.0);
    const std::size_t burn = static_cast<std::size_t>(model.burn_in);
    for (std::size_t j = 0; j < len; ++j) {
        w = relu(w + T(block.service[j]) * inv_mu - T(block.arrival[j]) * inv_lambda);
        if (j >= burn) acc += w;
    }
    return acc / T(static_cast<double>(model.horizon));
}

/// n independent replications with fresh latent draws; replication j uses the
/// stream derive_key(key, j), so results are independent of evaluation order
/// and thread count.
template <typename T, std::size_t P>
std::vector<T> simulate_model_sample(const GG1Model& model, const std::array<T, P>& theta,
                                     std::size_t n, std::uint64_t key) {
    std::vector<T> out(n);
    for (std::size_t j = 0; j < n; ++j) {
        RngStream rng(derive_key(key, j));
        const LatentBlock block = draw_latent_block(model, rng);
        out[j] = pushforward_waiting_time(model, theta, block);
    }
    return out;
}

/// Draws n latent blocks up front (replication j from derive_key(key, j)),
/// for evaluations that must reuse the same randomness across several theta.
inline std::vector<LatentBlock> draw_latent_blocks(const GG1Model& model, std::size_t n,
                                                   std::uint64_t key) {
    std::vector<LatentBlock> blocks(n);
    for (std::size_t j = 0; j < n; ++j) {
        RngStream rng(derive_key(key, j));
        blocks[j] = draw_latent_block(model, rng);
    }
    return blocks;
}

/// The data-generating system: a queue with fully fixed rates plus optional
/// contamination, which adds N(0, noise_sd^2) noise to a uniformly chosen
/// fraction epsilon of the observations.
struct TargetSystem {
    GG1Model queue;
    double contamination_eps = 0.0;
    double noise_sd = 0.1;

    void validate() const {
        if (queue.validate() != 0)
            throw ConfigError("TargetSystem: target rates must all be fixed");
        if (!(contamination_eps >= 0.0 && contamination_eps <= 1.0))
            throw ConfigError("TargetSystem: contamination fraction must lie in [0, 1]");
        if (!(noise_sd >= 0.0)) throw ConfigError("TargetSystem: noise sd must be nonnegative");
    }
};

/// m i.i.d. average waiting times from the target queue (observation i uses
/// the stream derive_key(key, stream_tag::target_data, i)); contamination
/// indices and noise come from a separate stream, so eps = 0 and
/// zero-strength contamination produce identical data.
inline std::vector<double> generate_target_data(const TargetSystem& target, std::size_t m,
                                                std::uint64_t key) {
    target.validate();
    const std::array<double, 0> no_theta{};
    std::vector<double> data(m);
    for (std::size_t i = 0; i < m; ++i) {
        RngStream rng(derive_key(key, stream_tag::target_data, i));
        const LatentBlock block = draw_latent_block(target.queue, rng);
        data[i] = pushforward_waiting_time(target.queue, no_theta, block);
    }
    const std::size_t c =
        static_cast<std::size_t>(std::floor(target.contamination_eps * static_cast<double>(m)));
    if (c > 0) {
        RngStream rng(derive_key(key, stream_tag::contamination));
        std::vector<std::size_t> idx(m);
        for (std::size_t i = 0; i < m; ++i) idx[i] = i;
        for (std::size_t t = 0; t < c; ++t) {
            const double u = rng.next_uniform();
            std::size_t j = t + static_cast<std::size_t>(u * static_cast<double>(m - t));
            j = std::min(j, m - 1);
            std::swap(idx[t], idx[j]);
        }
        for (std::size_t t = 0; t < c; ++t) data[idx[t]] += target.noise_sd * rng.next_normal();
    }
    return data;
}

}  // namespace kscal
