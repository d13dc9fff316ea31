#pragma once

#include <string>
#include <vector>

#include "kscal/config.hpp"

namespace kscal {

// Ready-made experiment batches. exp1..exp4 are the headline studies; the
// remaining ids are the appendix-style sweeps. Replication counts are desk
// scale: pass a larger R for publication-grade aggregates.

namespace detail {

inline ExperimentSettings exp1_settings() {
    ExperimentSettings s;
    s.id = "exp1";
    s.target.queue.arrival = RateSlot::exp_fixed(1.0);
    s.target.queue.service = RateSlot::exp_fixed(1.2);
    s.target.queue.burn_in = 10;
    s.target.queue.horizon = 50;
    s.model.arrival = RateSlot::exp_fixed(1.0);
    s.model.service = RateSlot::exp_param(0);
    s.model.burn_in = 10;
    s.model.horizon = 50;
    s.lower = {0.5};
    s.upper = {2.5};
    s.kernel = KernelSpec::riesz(1.0);
    s.m = 500;
    s.n = 500;
    s.R = 100;
    s.sgd.eta0 = 1.0;
    // The early adaptive steps span half the box; runs need room to relax
    // back well before the averaging window opens.
    s.sgd.max_iters = 1000;
    s.sgd.averaging_window = 100;
    s.theta_star.mode = ThetaStarSpec::Mode::known;
    s.theta_star.value = {1.2};
    return s;
}

inline ExperimentSettings exp2_settings() {
    ExperimentSettings s = exp1_settings();
    s.id = "exp2";
    s.target.queue.service = RateSlot::gamma_fixed(1.0, 1.2);
    s.lower = {0.5};
    s.upper = {5.0};
    s.kernel = KernelSpec::gaussian_median();
    s.theta_star.mode = ThetaStarSpec::Mode::estimate;
    s.theta_star.value.clear();
    s.sweeps.a = {1.0, 0.8, 0.6, 0.4, 0.2};
    return s;
}

inline ExperimentSettings exp3_settings() {
    ExperimentSettings s;
    s.id = "exp3";
    s.target.queue.arrival = RateSlot::gamma_fixed(0.5, 1.0);
    s.target.queue.service = RateSlot::exp_fixed(1.0);
    s.target.queue.burn_in = 0;
    s.target.queue.horizon = 10;
    s.model.arrival = RateSlot::gamma_param(0.5, 1);
    s.model.service = RateSlot::exp_param(0);
    s.model.burn_in = 0;
    s.model.horizon = 10;
    s.lower = {0.1, 0.1};
    s.upper = {3.0, 3.0};
    s.kernel = KernelSpec::riesz(1.0);
    s.m = 1000;
    s.n = 1000;
    s.R = 100;
    s.sgd.eta0 = 1.0;
    s.sgd.max_iters = 800;
    s.sgd.averaging_window = 100;
    s.theta_star.mode = ThetaStarSpec::Mode::known;
    s.theta_star.value = {1.0, 1.0};
    return s;
}

inline ExperimentSettings exp4_settings() {
    ExperimentSettings s;
    s.id = "exp4";
    s.target.queue.arrival = RateSlot::gamma_fixed(0.5, 1.0);
    s.target.queue.service = RateSlot::gamma_fixed(1.0, 2.5);
    s.target.queue.burn_in = 10;
    s.target.queue.horizon = 20;
    s.model.arrival = RateSlot::gamma_param(0.5, 1);
    s.model.service = RateSlot::exp_param(0);
    s.model.burn_in = 10;
    s.model.horizon = 20;
    s.lower = {0.1, 0.1};
    s.upper = {12.0, 6.0};
    s.kernel = KernelSpec::riesz(1.0);
    s.m = 1000;
    s.n = 1000;
    s.R = 20;
    s.sgd.eta0 = 1.0;
    s.sgd.max_iters = 800;
    s.sgd.averaging_window = 100;
    s.theta_star.mode = ThetaStarSpec::Mode::estimate;
    s.sweeps.a = {1.0, 0.8, 0.6, 0.4, 0.2};
    return s;
}

}  // namespace detail

inline std::vector<std::string> builtin_ids() {
    return {"exp1", "exp2", "exp3", "exp4", "beta_sweep", "n_sweep", "bias", "contamination"};
}

/// Returns the named built-in configuration, or throws ConfigError listing
/// the valid ids.
inline ExperimentSettings builtin_config(const std::string& id) {
    if (id == "exp1") return detail::exp1_settings();
    if (id == "exp2") return detail::exp2_settings();
    if (id == "exp3") return detail::exp3_settings();
    if (id == "exp4") return detail::exp4_settings();
    if (id == "beta_sweep") {
        // Riesz exponent study on the inexact single-rate setup, shape 0.6.
        ExperimentSettings s = detail::exp2_settings();
        s.id = "beta_sweep";
        s.target.queue.service = RateSlot::gamma_fixed(0.6, 1.2);
        s.kernel = KernelSpec::riesz(1.0);
        s.sweeps = SweepSpec{};
        s.sweeps.beta = {1.0, 1.25, 1.5, 1.75, 2.0};
        s.R = 20;
        return s;
    }
    if (id == "n_sweep") {
        // Simulation-size sensitivity on the exact single-rate setup.
        ExperimentSettings s = detail::exp1_settings();
        s.id = "n_sweep";
        s.sweeps.n = {2, 10, 50, 100, 200, 500};
        s.R = 20;
        return s;
    }
    if (id == "bias") {
        // Data-size study of the uncertainty estimate, two-parameter setup
        // with an exact service shape.
        ExperimentSettings s = detail::exp4_settings();
        s.id = "bias";
        s.sweeps = SweepSpec{};
        s.sweeps.m = {1000, 2000, 5000};
        s.R = 20;
        return s;
    }
    if (id == "contamination") {
        // Noise robustness on the two-parameter exact setup: a fraction
        // epsilon of the observations gets N(0, 0.01) noise added.
        ExperimentSettings s = detail::exp3_settings();
        s.id = "contamination";
        s.target.noise_sd = 0.1;
        s.sweeps.epsilon = {0.01, 0.05, 0.1, 0.2, 0.5};
        s.R = 20;
        return s;
    }
    std::string msg = "unknown experiment id '" + id + "'; valid ids:";
    for (const std::string& known : builtin_ids()) msg += " " + known;
    throw ConfigError(msg);
}

inline std::vector<ExperimentSettings> builtin_configs() {
    std::vector<ExperimentSettings> all;
    for (const std::string& id : builtin_ids()) all.push_back(builtin_config(id));
    return all;
}

}  // namespace kscal
