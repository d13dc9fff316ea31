#pragma once

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kscal/calibrate.hpp"
#include "kscal/errors.hpp"
#include "kscal/kernel.hpp"
#include "kscal/queueing.hpp"

namespace kscal {

using nlohmann::json;

/// How the reference parameter theta_star is obtained: fixed truth for
/// model-exact setups, or a separate large calibration run when the model
/// cannot match the target exactly.
struct ThetaStarSpec {
    enum class Mode { known, estimate };
    Mode mode = Mode::estimate;
    std::vector<double> value;  // known only
    int iters = 0;              // estimate only; 0 = kernel-dependent default
};

/// Optional one-axis-at-a-time sweep lists; the harness runs the cartesian
/// product of all non-empty axes.
struct SweepSpec {
    std::vector<double> a;            // target service gamma shape
    std::vector<double> beta;         // Riesz exponent
    std::vector<std::size_t> n;       // simulated sample size
    std::vector<std::size_t> m;       // data size
    std::vector<double> epsilon;      // contamination fraction

    bool empty() const {
        return a.empty() && beta.empty() && n.empty() && m.empty() && epsilon.empty();
    }
};

/// Full experiment description: target system, model, box, kernel, sizes,
/// SGD settings, truth specification, sweeps and reporting knobs.
struct ExperimentSettings {
    std::string id = "custom";
    TargetSystem target;
    GG1Model model;
    std::vector<double> lower;
    std::vector<double> upper;
    KernelSpec kernel;
    std::size_t m = 500;
    std::size_t n = 500;
    std::size_t n_c = 5000;
    int R = 100;
    double alpha = 0.05;
    SGDConfig sgd;
    double fd_step = 0.1;
    ThetaStarSpec theta_star;
    SweepSpec sweeps;
    int boundary_points = 256;
    bool write_sets = true;

    std::size_t p() const { return model.validate(); }

    void validate() const {
        target.validate();
        const std::size_t dim = model.validate();
        if (dim < 1 || dim > 4)
            throw ConfigError("ExperimentSettings: parameter dimension must lie in 1..4");
        if (lower.size() != dim || upper.size() != dim)
            throw ConfigError("ExperimentSettings: domain bounds must match parameter count");
        for (std::size_t i = 0; i < dim; ++i)
            if (!(lower[i] < upper[i]) || !(lower[i] > 0.0))
                throw ConfigError(
                    "ExperimentSettings: box needs 0 < lower < upper (rates are positive)");
        kernel.validate();
        if (m < 2 || n < 2 || n_c < 2)
            throw ConfigError("ExperimentSettings: m, n, n_c must all be at least 2");
        if (R < 1) throw ConfigError("ExperimentSettings: R must be at least 1");
        if (!(alpha > 0.0 && alpha < 1.0))
            throw ConfigError("ExperimentSettings: alpha must lie in (0, 1)");
        sgd.validate();
        if (!(fd_step > 0.0)) throw ConfigError("ExperimentSettings: fd_step must be positive");
        if (theta_star.mode == ThetaStarSpec::Mode::known && theta_star.value.size() != dim)
            throw ConfigError("ExperimentSettings: known theta_star must match parameter count");
        if (boundary_points < 3)
            throw ConfigError("ExperimentSettings: boundary_points must be at least 3");
        if (!sweeps.a.empty() && target.queue.service.kind != LatentKind::gamma)
            throw ConfigError("ExperimentSettings: 'a' sweep needs a gamma target service");
        if (!sweeps.beta.empty() && kernel.family != KernelFamily::riesz)
            throw ConfigError("ExperimentSettings: 'beta' sweep needs the riesz kernel");
    }
};

/// A config file: experiment settings plus optional seed and output location
/// (command-line flags take precedence over both).
struct RunConfig {
    ExperimentSettings settings;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
};

namespace cfg_detail {

inline void require_keys(const json& j, std::initializer_list<const char*> allowed,
                         const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                ok = true;
                break;
            }
        if (!ok) throw ConfigError("unknown key '" + it.key() + "' in " + where);
    }
}

inline const json& require(const json& j, const char* key, const std::string& where) {
    const auto it = j.find(key);
    if (it == j.end()) throw ConfigError(where + ": missing required key '" + key + "'");
    return *it;
}

inline double get_double(const json& j, const char* key, const std::string& where) {
    const json& v = require(j, key, where);
    if (!v.is_number()) throw ConfigError(where + "." + key + ": expected a number");
    return v.get<double>();
}

inline double get_double_or(const json& j, const char* key, double fallback,
                            const std::string& where) {
    if (!j.contains(key)) return fallback;
    return get_double(j, key, where);
}

inline std::int64_t get_int(const json& j, const char* key, const std::string& where) {
    const json& v = require(j, key, where);
    if (!v.is_number_integer()) throw ConfigError(where + "." + key + ": expected an integer");
    return v.get<std::int64_t>();
}

inline std::int64_t get_int_or(const json& j, const char* key, std::int64_t fallback,
                               const std::string& where) {
    if (!j.contains(key)) return fallback;
    return get_int(j, key, where);
}

inline bool get_bool_or(const json& j, const char* key, bool fallback,
                        const std::string& where) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_boolean()) throw ConfigError(where + "." + key + ": expected a boolean");
    return v.get<bool>();
}

inline std::string get_string(const json& j, const char* key, const std::string& where) {
    const json& v = require(j, key, where);
    if (!v.is_string()) throw ConfigError(where + "." + key + ": expected a string");
    return v.get<std::string>();
}

inline std::vector<double> get_double_list(const json& v, const std::string& where) {
    if (!v.is_array()) throw ConfigError(where + ": expected an array of numbers");
    std::vector<double> out;
    for (const json& e : v) {
        if (!e.is_number()) throw ConfigError(where + ": expected an array of numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

inline std::vector<std::size_t> get_size_list(const json& v, const std::string& where) {
    if (!v.is_array()) throw ConfigError(where + ": expected an array of integers");
    std::vector<std::size_t> out;
    for (const json& e : v) {
        if (!e.is_number_integer() || e.get<std::int64_t>() < 0)
            throw ConfigError(where + ": expected nonnegative integers");
        out.push_back(static_cast<std::size_t>(e.get<std::int64_t>()));
    }
    return out;
}

}  // namespace cfg_detail

inline json slot_to_json(const RateSlot& slot) {
    json j;
    j["dist"] = slot.kind == LatentKind::exponential ? "exp" : "gamma";
    if (slot.kind == LatentKind::gamma) j["shape"] = slot.shape;
    if (slot.param_index >= 0)
        j["param"] = slot.param_index;
    else
        j["rate"] = slot.fixed_rate;
    return j;
}

inline RateSlot slot_from_json(const json& j, bool allow_param, const std::string& where) {
    using namespace cfg_detail;
    require_keys(j, {"dist", "shape", "rate", "param"}, where);
    RateSlot slot;
    const std::string dist = get_string(j, "dist", where);
    if (dist == "exp") {
        slot.kind = LatentKind::exponential;
        if (j.contains("shape")) throw ConfigError(where + ": 'shape' is a gamma-only key");
    } else if (dist == "gamma") {
        slot.kind = LatentKind::gamma;
        slot.shape = get_double(j, "shape", where);
    } else {
        throw ConfigError(where + ".dist: expected 'exp' or 'gamma'");
    }
    const bool has_rate = j.contains("rate");
    const bool has_param = j.contains("param");
    if (has_rate == has_param)
        throw ConfigError(where + ": give exactly one of 'rate' or 'param'");
    if (has_param) {
        if (!allow_param)
            throw ConfigError(where + ": target rates are fixed; 'param' not allowed here");
        const std::int64_t idx = get_int(j, "param", where);
        if (idx < 0 || idx > 3) throw ConfigError(where + ".param: index must lie in 0..3");
        slot.param_index = static_cast<int>(idx);
    } else {
        slot.fixed_rate = get_double(j, "rate", where);
    }
    return slot;
}

inline json model_to_json(const GG1Model& model) {
    json j;
    j["arrival"] = slot_to_json(model.arrival);
    j["service"] = slot_to_json(model.service);
    j["burn_in"] = model.burn_in;
    j["horizon"] = model.horizon;
    return j;
}

inline GG1Model model_from_json(const json& j, bool allow_param, const std::string& where) {
    using namespace cfg_detail;
    require_keys(j, {"arrival", "service", "burn_in", "horizon"}, where);
    GG1Model model;
    model.arrival = slot_from_json(require(j, "arrival", where), allow_param, where + ".arrival");
    model.service = slot_from_json(require(j, "service", where), allow_param, where + ".service");
    model.burn_in = static_cast<int>(get_int_or(j, "burn_in", 10, where));
    model.horizon = static_cast<int>(get_int_or(j, "horizon", 50, where));
    return model;
}

inline json target_to_json(const TargetSystem& target) {
    json j = model_to_json(target.queue);
    // noise_sd matters even at epsilon = 0 when an epsilon sweep is present,
    // so a non-default value forces the block out.
    if (target.contamination_eps > 0.0 || target.noise_sd != 0.1) {
        j["contamination"] = {{"epsilon", target.contamination_eps},
                              {"noise_sd", target.noise_sd}};
    }
    return j;
}

inline TargetSystem target_from_json(const json& j, const std::string& where) {
    using namespace cfg_detail;
    require_keys(j, {"arrival", "service", "burn_in", "horizon", "contamination"}, where);
    TargetSystem target;
    json queue = j;
    queue.erase("contamination");
    target.queue = model_from_json(queue, /*allow_param=*/false, where);
    if (j.contains("contamination")) {
        const json& c = j.at("contamination");
        require_keys(c, {"epsilon", "noise_sd"}, where + ".contamination");
        target.contamination_eps = get_double(c, "epsilon", where + ".contamination");
        target.noise_sd = get_double_or(c, "noise_sd", 0.1, where + ".contamination");
    }
    return target;
}

inline json kernel_to_json(const KernelSpec& kernel) {
    json j;
    j["family"] = kernel_family_name(kernel.family);
    switch (kernel.family) {
        case KernelFamily::gaussian:
            if (kernel.sigma_pending)
                j["sigma"] = "median";
            else
                j["sigma"] = kernel.sigma;
            break;
        case KernelFamily::laplacian:
            j["sigma"] = kernel.sigma;
            break;
        case KernelFamily::riesz:
            j["beta"] = kernel.beta;
            j["eps"] = kernel.eps;
            break;
    }
    return j;
}

inline KernelSpec kernel_from_json(const json& j, const std::string& where) {
    using namespace cfg_detail;
    require_keys(j, {"family", "sigma", "beta", "eps"}, where);
    const std::string family = get_string(j, "family", where);
    if (family == "gaussian") {
        const json& sigma = require(j, "sigma", where);
        if (sigma.is_string()) {
            if (sigma.get<std::string>() != "median")
                throw ConfigError(where + ".sigma: expected a number or 'median'");
            return KernelSpec::gaussian_median();
        }
        if (!sigma.is_number()) throw ConfigError(where + ".sigma: expected a number or 'median'");
        return KernelSpec::gaussian(sigma.get<double>());
    }
    if (family == "laplacian") return KernelSpec::laplacian(get_double(j, "sigma", where));
    if (family == "riesz")
        return KernelSpec::riesz(get_double_or(j, "beta", 1.0, where),
                                 get_double_or(j, "eps", 1e-8, where));
    throw ConfigError(where + ".family: expected 'gaussian', 'laplacian' or 'riesz'");
}

inline json sgd_to_json(const SGDConfig& sgd) {
    json j;
    j["eta0"] = sgd.eta0;
    j["max_iters"] = sgd.max_iters;
    j["beta1"] = sgd.beta1;
    j["beta2"] = sgd.beta2;
    j["eps"] = sgd.eps_adam;
    j["averaging_window"] = sgd.averaging_window;
    j["plain_sgd"] = sgd.plain_sgd;
    return j;
}

inline SGDConfig sgd_from_json(const json& j, const std::string& where) {
    using namespace cfg_detail;
    require_keys(j, {"eta0", "max_iters", "beta1", "beta2", "eps", "averaging_window",
                     "plain_sgd"},
                 where);
    SGDConfig sgd;
    sgd.eta0 = get_double_or(j, "eta0", sgd.eta0, where);
    sgd.max_iters = static_cast<int>(get_int_or(j, "max_iters", sgd.max_iters, where));
    sgd.beta1 = get_double_or(j, "beta1", sgd.beta1, where);
    sgd.beta2 = get_double_or(j, "beta2", sgd.beta2, where);
    sgd.eps_adam = get_double_or(j, "eps", sgd.eps_adam, where);
    sgd.averaging_window =
        static_cast<int>(get_int_or(j, "averaging_window", sgd.averaging_window, where));
    sgd.plain_sgd = get_bool_or(j, "plain_sgd", sgd.plain_sgd, where);
    return sgd;
}

inline json theta_star_to_json(const ThetaStarSpec& spec) {
    json j;
    if (spec.mode == ThetaStarSpec::Mode::known) {
        j["mode"] = "known";
        j["value"] = spec.value;
    } else {
        j["mode"] = "estimate";
        j["iters"] = spec.iters;
    }
    return j;
}

inline ThetaStarSpec theta_star_from_json(const json& j, const std::string& where) {
    using namespace cfg_detail;
    require_keys(j, {"mode", "value", "iters"}, where);
    ThetaStarSpec spec;
    const std::string mode = get_string(j, "mode", where);
    if (mode == "known") {
        spec.mode = ThetaStarSpec::Mode::known;
        spec.value = get_double_list(require(j, "value", where), where + ".value");
    } else if (mode == "estimate") {
        spec.mode = ThetaStarSpec::Mode::estimate;
        spec.iters = static_cast<int>(get_int_or(j, "iters", 0, where));
    } else {
        throw ConfigError(where + ".mode: expected 'known' or 'estimate'");
    }
    return spec;
}

inline json sweeps_to_json(const SweepSpec& sweeps) {
    json j = json::object();
    if (!sweeps.a.empty()) j["a"] = sweeps.a;
    if (!sweeps.beta.empty()) j["beta"] = sweeps.beta;
    if (!sweeps.n.empty()) j["n"] = sweeps.n;
    if (!sweeps.m.empty()) j["m"] = sweeps.m;
    if (!sweeps.epsilon.empty()) j["epsilon"] = sweeps.epsilon;
    return j;
}

inline SweepSpec sweeps_from_json(const json& j, const std::string& where) {
    using namespace cfg_detail;
    require_keys(j, {"a", "beta", "n", "m", "epsilon"}, where);
    SweepSpec sweeps;
    if (j.contains("a")) sweeps.a = get_double_list(j.at("a"), where + ".a");
    if (j.contains("beta")) sweeps.beta = get_double_list(j.at("beta"), where + ".beta");
    if (j.contains("n")) sweeps.n = get_size_list(j.at("n"), where + ".n");
    if (j.contains("m")) sweeps.m = get_size_list(j.at("m"), where + ".m");
    if (j.contains("epsilon"))
        sweeps.epsilon = get_double_list(j.at("epsilon"), where + ".epsilon");
    return sweeps;
}

inline json settings_to_json(const ExperimentSettings& s) {
    json j;
    j["id"] = s.id;
    j["target"] = target_to_json(s.target);
    j["model"] = model_to_json(s.model);
    j["domain"] = {{"lower", s.lower}, {"upper", s.upper}};
    j["kernel"] = kernel_to_json(s.kernel);
    j["m"] = s.m;
    j["n"] = s.n;
    j["n_c"] = s.n_c;
    j["R"] = s.R;
    j["alpha"] = s.alpha;
    j["sgd"] = sgd_to_json(s.sgd);
    j["fd_step"] = s.fd_step;
    j["theta_star"] = theta_star_to_json(s.theta_star);
    if (!s.sweeps.empty()) j["sweeps"] = sweeps_to_json(s.sweeps);
    j["boundary_points"] = s.boundary_points;
    j["write_sets"] = s.write_sets;
    return j;
}

inline RunConfig run_config_from_json(const json& j) {
    using namespace cfg_detail;
    const std::string where = "config";
    require_keys(j,
                 {"id", "seed", "out_dir", "target", "model", "domain", "kernel", "m", "n",
                  "n_c", "R", "alpha", "sgd", "fd_step", "theta_star", "sweeps",
                  "boundary_points", "write_sets"},
                 where);
    RunConfig rc;
    ExperimentSettings& s = rc.settings;
    if (j.contains("id")) s.id = get_string(j, "id", where);
    s.target = target_from_json(require(j, "target", where), where + ".target");
    s.model = model_from_json(require(j, "model", where), /*allow_param=*/true, where + ".model");
    {
        const json& d = require(j, "domain", where);
        require_keys(d, {"lower", "upper"}, where + ".domain");
        s.lower = get_double_list(require(d, "lower", where + ".domain"), where + ".domain.lower");
        s.upper = get_double_list(require(d, "upper", where + ".domain"), where + ".domain.upper");
    }
    s.kernel = kernel_from_json(require(j, "kernel", where), where + ".kernel");
    s.m = static_cast<std::size_t>(get_int_or(j, "m", static_cast<std::int64_t>(s.m), where));
    s.n = static_cast<std::size_t>(get_int_or(j, "n", static_cast<std::int64_t>(s.n), where));
    s.n_c =
        static_cast<std::size_t>(get_int_or(j, "n_c", static_cast<std::int64_t>(s.n_c), where));
    s.R = static_cast<int>(get_int_or(j, "R", s.R, where));
    s.alpha = get_double_or(j, "alpha", s.alpha, where);
    if (j.contains("sgd")) s.sgd = sgd_from_json(j.at("sgd"), where + ".sgd");
    s.fd_step = get_double_or(j, "fd_step", s.fd_step, where);
    if (j.contains("theta_star"))
        s.theta_star = theta_star_from_json(j.at("theta_star"), where + ".theta_star");
    if (j.contains("sweeps")) s.sweeps = sweeps_from_json(j.at("sweeps"), where + ".sweeps");
    s.boundary_points = static_cast<int>(get_int_or(j, "boundary_points", s.boundary_points, where));
    s.write_sets = get_bool_or(j, "write_sets", s.write_sets, where);
    s.validate();

    if (j.contains("seed")) {
        const json& v = j.at("seed");
        const bool ok =
            v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
        if (!ok) throw ConfigError("config.seed: expected a nonnegative integer");
        rc.seed = v.get<std::uint64_t>();
    }
    if (j.contains("out_dir")) rc.out_dir = get_string(j, "out_dir", where);
    return rc;
}

inline RunConfig parse_run_config(const std::string& text) {
    return run_config_from_json(json::parse(text));
}

}  // namespace kscal
