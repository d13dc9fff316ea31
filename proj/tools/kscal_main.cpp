// Command-line front end: calibrate a model against data, build a confidence
// set around an estimate, or run a full replication batch.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "kscal/kscal.hpp"

namespace {

using namespace kscal;

constexpr int exit_ok = 0;
constexpr int exit_config = 1;
constexpr int exit_diverged = 2;
constexpr int exit_degenerate = 3;

// Maps a byte offset from a JSON parse error to 1-based line/column.
std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte_pos) {
    std::size_t line = 1;
    std::size_t col = 1;
    const std::size_t stop = std::min(byte_pos > 0 ? byte_pos - 1 : 0, text.size());
    for (std::size_t i = 0; i < stop; ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

RunConfig load_run_config(const std::string& path) {
    const std::string text = read_text_file(path);
    try {
        return parse_run_config(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = line_column(text, e.byte);
        throw ConfigError(path + ":" + std::to_string(line) + ":" + std::to_string(col) +
                          ": " + e.what());
    }
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, const RunConfig& cfg) {
    if (flag) return *flag;
    if (cfg.seed) return *cfg.seed;
    return 1;
}

std::string resolve_out(const std::optional<std::string>& flag, const RunConfig& cfg,
                        const std::string& default_name) {
    if (flag) return *flag;
    if (cfg.out_dir) return *cfg.out_dir + "/" + default_name;
    return default_name;
}

void ensure_parent_dir(const std::string& path) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
}

DataMatrix load_or_generate_data(const ExperimentSettings& s,
                                 const std::optional<std::string>& data_path,
                                 std::uint64_t master_seed) {
    if (data_path) return read_data_csv(*data_path);
    const std::vector<double> x =
        generate_target_data(s.target, s.m, derive_key(master_seed, stream_tag::target_data));
    return DataMatrix(x, 1);
}

// Accepts "1.2" or "2.5,1.0" inline, otherwise a path to a JSON document
// holding either a bare array or an object with a "theta_hat" array.
std::vector<double> load_theta_hat(const std::string& arg) {
    std::vector<double> inline_values;
    bool inline_ok = !arg.empty();
    std::size_t start = 0;
    while (inline_ok && start <= arg.size()) {
        const std::size_t comma = arg.find(',', start);
        const std::string field =
            arg.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        try {
            std::size_t used = 0;
            inline_values.push_back(std::stod(field, &used));
            inline_ok = used == field.size();
        } catch (...) {
            inline_ok = false;
        }
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (inline_ok && !inline_values.empty()) return inline_values;

    const std::string text = read_text_file(arg);
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = line_column(text, e.byte);
        throw ConfigError(arg + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " +
                          e.what());
    }
    if (doc.is_array()) return doc.get<std::vector<double>>();
    if (doc.is_object() && doc.contains("theta_hat"))
        return doc.at("theta_hat").get<std::vector<double>>();
    throw ConfigError("theta-hat file " + arg + " must be an array or contain \"theta_hat\"");
}

template <std::size_t P>
int run_calibrate(const ExperimentSettings& s, const DataMatrix& data, std::uint64_t seed,
                  const std::string& out_path) {
    ScoreContext<P> ctx;
    ctx.kernel = resolve_kernel(s.kernel, data.values, data.dim);
    ctx.data = data;
    ctx.model = s.model;
    ctx.domain = make_domain<P>(s.lower, s.upper);
    ctx.n = s.n;
    ctx.validate();

    SGDConfig sgd = s.sgd;
    sgd.record_theta_trace = true;
    RngStream init_rng(derive_key(seed, stream_tag::theta_init));
    const ParamVec<P> theta0 = ctx.domain.sample_uniform(init_rng);
    const CalibrationResult<P> res =
        calibrate(ctx, sgd, theta0, derive_key(seed, stream_tag::run));

    json out;
    out["theta_hat"] = to_vector(res.theta_hat);
    out["theta0"] = to_vector(res.theta0);
    out["final_score"] = res.final_score;
    out["iterations"] = sgd.max_iters;
    out["seed"] = seed;
    out["m"] = ctx.data.rows();
    out["n"] = ctx.n;
    ensure_parent_dir(out_path);
    write_text_file(out_path, out.dump(2) + "\n");

    std::vector<std::string> header{"iteration", "score"};
    for (std::size_t c = 0; c < P; ++c) header.push_back("theta_" + std::to_string(c));
    std::vector<std::vector<std::string>> rows;
    for (std::size_t t = 0; t < res.score_trace.size(); ++t) {
        std::vector<std::string> row{std::to_string(t), format_double(res.score_trace[t])};
        for (std::size_t c = 0; c < P; ++c) row.push_back(format_double(res.theta_trace[t][c]));
        rows.push_back(std::move(row));
    }
    std::string trace_path = out_path;
    const std::string ext = std::filesystem::path(out_path).extension().string();
    trace_path = trace_path.substr(0, trace_path.size() - ext.size()) + "_trace.csv";
    write_csv(trace_path, header, rows);

    std::cout << "calibration (seed " << seed << ", m " << ctx.data.rows() << ", n " << ctx.n
              << ")\n";
    for (std::size_t c = 0; c < P; ++c)
        std::cout << "  theta_hat[" << c << "]  " << format_double(res.theta_hat[c]) << "\n";
    std::cout << "  final_score  " << format_double(res.final_score) << "\n";
    std::cout << "  wrote " << out_path << " and " << trace_path << "\n";
    return exit_ok;
}

template <std::size_t P>
int run_confidence(const ExperimentSettings& s, const DataMatrix& data,
                   const std::vector<double>& theta_hat_values, std::uint64_t seed,
                   const std::string& out_path) {
    if (theta_hat_values.size() != P)
        throw ConfigError("theta-hat has " + std::to_string(theta_hat_values.size()) +
                          " coordinates; the model exposes " + std::to_string(P));
    ScoreContext<P> ctx;
    ctx.kernel = resolve_kernel(s.kernel, data.values, data.dim);
    ctx.data = data;
    ctx.model = s.model;
    ctx.domain = make_domain<P>(s.lower, s.upper);
    ctx.n = s.n;
    ctx.validate();

    const ParamVec<P> theta_hat = to_fixed<P>(std::span<const double>(theta_hat_values));
    const SandwichEstimate<P> sandwich = estimate_sandwich(
        ctx, theta_hat, s.n_c, s.fd_step, derive_key(seed, stream_tag::confidence_latents));
    const ConfidenceSet<P> set = build_confidence_set(sandwich, theta_hat, s.alpha);
    const SetGeometry geometry = set_geometry(set, s.boundary_points);

    ensure_parent_dir(out_path);
    write_text_file(out_path, confidence_set_json(set, geometry).dump(2) + "\n");

    std::cout << "confidence set (alpha " << format_double(s.alpha) << ", seed " << seed
              << ", n_c " << s.n_c << ")\n";
    if constexpr (P == 1) {
        std::cout << "  interval  [" << format_double(geometry.lo) << ", "
                  << format_double(geometry.hi) << "]\n"
                  << "  width  " << format_double(geometry.width) << "\n";
    } else {
        std::cout << "  center  (" << format_double(set.center[0]) << ", "
                  << format_double(set.center[1]) << ")\n"
                  << "  width  " << format_double(geometry.width) << "\n"
                  << "  height  " << format_double(geometry.height) << "\n"
                  << "  angle_rad  " << format_double(geometry.angle_rad) << "\n";
    }
    std::cout << "  wrote " << out_path << "\n";
    return exit_ok;
}

int dispatch_exit(const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (dynamic_cast<const DivergedError*>(&e)) return exit_diverged;
    if (dynamic_cast<const NotPositiveDefiniteError*>(&e)) return exit_degenerate;
    if (dynamic_cast<const SingularMatrixError*>(&e)) return exit_degenerate;
    return exit_config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Kernel-score calibration for stochastic queueing simulators"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::string> data_path;
    std::optional<std::uint64_t> seed_flag;
    std::optional<std::string> out_flag;

    CLI::App* cal = app.add_subcommand("calibrate", "Fit model parameters to data");
    cal->add_option("--config", config_path, "run configuration (JSON)")->required();
    cal->add_option("--data", data_path, "observed data CSV (overrides synthetic target data)");
    cal->add_option("--seed", seed_flag, "master seed");
    cal->add_option("--out", out_flag, "output JSON path");

    std::string theta_hat_arg;
    CLI::App* conf = app.add_subcommand("confidence", "Confidence set around an estimate");
    conf->add_option("--config", config_path, "run configuration (JSON)")->required();
    conf->add_option("--theta-hat", theta_hat_arg,
                     "estimate: inline comma-separated values or a calibrate output JSON")
        ->required();
    conf->add_option("--data", data_path, "observed data CSV (overrides synthetic target data)");
    conf->add_option("--seed", seed_flag, "master seed");
    conf->add_option("--out", out_flag, "output JSON path");

    std::string experiment_arg;
    std::optional<std::string> out_dir_flag;
    std::optional<int> r_flag;
    int threads = 0;
    CLI::App* exp = app.add_subcommand("experiment", "Run a replication batch");
    exp->add_option("config", experiment_arg, "config JSON path or a built-in id")->required();
    exp->add_option("--seed", seed_flag, "master seed");
    exp->add_option("--out-dir", out_dir_flag, "output directory");
    exp->add_option("--R", r_flag, "replication count override");
    exp->add_option("--threads", threads, "worker threads (0 = all cores)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_config;
    }

    try {
        if (cal->parsed()) {
            const RunConfig cfg = load_run_config(config_path);
            const std::uint64_t seed = resolve_seed(seed_flag, cfg);
            const std::string out_path = resolve_out(out_flag, cfg, "calibration.json");
            const DataMatrix data = load_or_generate_data(cfg.settings, data_path, seed);
            switch (cfg.settings.p()) {
                case 1:
                    return run_calibrate<1>(cfg.settings, data, seed, out_path);
                case 2:
                    return run_calibrate<2>(cfg.settings, data, seed, out_path);
                default:
                    throw ConfigError("calibrate: queue models expose one or two parameters");
            }
        }
        if (conf->parsed()) {
            const RunConfig cfg = load_run_config(config_path);
            const std::uint64_t seed = resolve_seed(seed_flag, cfg);
            const std::string out_path = resolve_out(out_flag, cfg, "confidence.json");
            const std::vector<double> theta_hat = load_theta_hat(theta_hat_arg);
            const DataMatrix data = load_or_generate_data(cfg.settings, data_path, seed);
            switch (cfg.settings.p()) {
                case 1:
                    return run_confidence<1>(cfg.settings, data, theta_hat, seed, out_path);
                case 2:
                    return run_confidence<2>(cfg.settings, data, theta_hat, seed, out_path);
                default:
                    throw ConfigError("confidence: queue models expose one or two parameters");
            }
        }
        if (exp->parsed()) {
            RunConfig cfg;
            if (std::filesystem::exists(experiment_arg)) {
                cfg = load_run_config(experiment_arg);
            } else {
                cfg.settings = builtin_config(experiment_arg);
            }
            if (r_flag) {
                if (*r_flag < 1) throw ConfigError("--R must be at least 1");
                cfg.settings.R = *r_flag;
                cfg.settings.validate();
            }
            const std::uint64_t seed = resolve_seed(seed_flag, cfg);
            const std::string out_dir =
                out_dir_flag ? *out_dir_flag : cfg.out_dir ? *cfg.out_dir : std::string("out");
            ExperimentOptions opts;
            opts.threads = threads;
            opts.cache_dir = out_dir + "/cache";
            opts.verbose = true;
            const ExperimentMetrics metrics = run_experiment(cfg.settings, seed, opts);
            write_experiment_outputs(metrics, out_dir);
            std::cout << render_metrics_table(metrics);
            return exit_ok;
        }
    } catch (const std::exception& e) {
        return dispatch_exit(e);
    }
    return exit_config;
}
