#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include "kscal/calibrate.hpp"
#include "kscal/confidence.hpp"
#include "kscal/config.hpp"
#include "kscal/io.hpp"
#include "kscal/parallel.hpp"
#include "kscal/sandwich.hpp"
#include "kscal/score.hpp"

namespace kscal {

/// One Monte Carlo replication: calibration outcome, confidence-set verdict
/// against theta_star, and bookkeeping. `calibrated` false means descent
/// diverged (no theta_hat); `degenerate` true means no usable confidence set
/// (covers divergence, non-PD Sigma, singular H).
struct RunRecord {
    int run = 0;
    std::vector<double> theta0;
    std::vector<double> theta_hat;
    bool calibrated = false;
    bool degenerate = false;
    bool in_set = false;
    double width = std::numeric_limits<double>::quiet_NaN();
    double height = std::numeric_limits<double>::quiet_NaN();
    double final_score = std::numeric_limits<double>::quiet_NaN();
    double seconds = 0.0;
    std::string note;
    std::string set_json;  // geometry document; empty when degenerate or disabled
};

/// Aggregates for one sweep point. MSE averages over calibrated runs;
/// coverage and width/height average over non-degenerate runs only, with the
/// degenerate count reported beside them.
struct PointMetrics {
    std::string label;
    double a = std::numeric_limits<double>::quiet_NaN();
    double beta = std::numeric_limits<double>::quiet_NaN();
    std::size_t m = 0;
    std::size_t n = 0;
    double epsilon = 0.0;
    int R = 0;
    std::vector<double> theta_star;
    std::vector<RunRecord> runs;
    std::vector<double> mse;
    double coverage = std::numeric_limits<double>::quiet_NaN();
    double mean_width = std::numeric_limits<double>::quiet_NaN();
    double mean_height = std::numeric_limits<double>::quiet_NaN();
    int degenerate_count = 0;
    double mean_seconds = 0.0;
};

struct ExperimentMetrics {
    ExperimentSettings settings;
    std::uint64_t master_seed = 0;
    std::vector<PointMetrics> points;
};

struct ExperimentOptions {
    int threads = 1;
    std::string cache_dir;  // theta_star cache location; empty disables caching
    bool verbose = false;   // progress lines on standard error
};

/// A sweep point: the base settings with one combination of sweep values
/// substituted, plus the resolved reporting fields.
struct SweepPoint {
    ExperimentSettings settings;
    std::string label;
    double a = std::numeric_limits<double>::quiet_NaN();
    double beta = std::numeric_limits<double>::quiet_NaN();
    double epsilon = 0.0;
};

namespace detail {

inline void append_label(std::string& label, const std::string& part) {
    if (!label.empty()) label += '_';
    label += part;
}

}  // namespace detail

/// Expands the cartesian product of all non-empty sweep axes; a config with
/// no sweeps yields the single point "base".
inline std::vector<SweepPoint> expand_sweeps(const ExperimentSettings& base) {
    base.validate();
    const auto one_or = [](auto list, auto fallback) {
        if (list.empty()) list.push_back(fallback);
        return list;
    };
    const bool sweep_a = !base.sweeps.a.empty();
    const bool sweep_beta = !base.sweeps.beta.empty();
    const bool sweep_n = !base.sweeps.n.empty();
    const bool sweep_m = !base.sweeps.m.empty();
    const bool sweep_eps = !base.sweeps.epsilon.empty();
    const auto a_values = one_or(base.sweeps.a, base.target.queue.service.shape);
    const auto beta_values = one_or(base.sweeps.beta, base.kernel.beta);
    const auto n_values = one_or(base.sweeps.n, base.n);
    const auto m_values = one_or(base.sweeps.m, base.m);
    const auto eps_values = one_or(base.sweeps.epsilon, base.target.contamination_eps);

    std::vector<SweepPoint> points;
    for (double a : a_values)
        for (double beta : beta_values)
            for (std::size_t n : n_values)
                for (std::size_t m : m_values)
                    for (double eps : eps_values) {
                        SweepPoint pt;
                        pt.settings = base;
                        pt.settings.sweeps = SweepSpec{};
                        std::string label;
                        if (sweep_a) {
                            pt.settings.target.queue.service.shape = a;
                            detail::append_label(label, "a" + format_double(a));
                        }
                        if (sweep_beta) {
                            pt.settings.kernel.beta = beta;
                            detail::append_label(label, "beta" + format_double(beta));
                        }
                        if (sweep_n) {
                            pt.settings.n = n;
                            detail::append_label(label, "n" + std::to_string(n));
                        }
                        if (sweep_m) {
                            pt.settings.m = m;
                            detail::append_label(label, "m" + std::to_string(m));
                        }
                        if (sweep_eps) {
                            pt.settings.target.contamination_eps = eps;
                            detail::append_label(label, "eps" + format_double(eps));
                        }
                        if (label.empty()) label = "base";
                        pt.label = label;
                        pt.settings.validate();
                        if (pt.settings.target.queue.service.kind == LatentKind::gamma)
                            pt.a = pt.settings.target.queue.service.shape;
                        if (pt.settings.kernel.family == KernelFamily::riesz)
                            pt.beta = pt.settings.kernel.beta;
                        pt.epsilon = pt.settings.target.contamination_eps;
                        points.push_back(std::move(pt));
                    }
    return points;
}

/// Confidence-set document: sandwich matrices plus the interval or ellipse
/// geometry, ready for plotting tools.
template <std::size_t P>
json confidence_set_json(const ConfidenceSet<P>& set, const SetGeometry& geometry) {
    const auto matrix_json = [](const SymMat<P>& mat) {
        json rows = json::array();
        for (std::size_t i = 0; i < P; ++i) {
            json row = json::array();
            for (std::size_t j = 0; j < P; ++j) row.push_back(mat.a[i][j]);
            rows.push_back(row);
        }
        return rows;
    };
    json j;
    j["alpha"] = set.alpha;
    j["p"] = P;
    j["m"] = set.m;
    j["center"] = to_vector(set.center);
    j["threshold"] = set.threshold;
    j["H_hat"] = matrix_json(set.H_hat);
    j["Sigma_hat"] = matrix_json(set.Sigma_hat);
    if constexpr (P == 1) {
        j["interval"] = {{"lo", geometry.lo}, {"hi", geometry.hi}, {"width", geometry.width}};
    } else {
        json boundary = json::array();
        for (const auto& pt : geometry.boundary) boundary.push_back({pt[0], pt[1]});
        j["ellipse"] = {{"semi_axes", {geometry.semi_axes[0], geometry.semi_axes[1]}},
                        {"angle_rad", geometry.angle_rad},
                        {"width", geometry.width},
                        {"height", geometry.height},
                        {"boundary_points", boundary}};
    }
    return j;
}

namespace detail {

template <std::size_t P>
ScoreContext<P> make_score_context(const ExperimentSettings& s, DataMatrix data) {
    ScoreContext<P> ctx;
    ctx.kernel = resolve_kernel(s.kernel, data.values, data.dim);
    ctx.data = std::move(data);
    ctx.model = s.model;
    ctx.domain = make_domain<P>(s.lower, s.upper);
    ctx.n = s.n;
    ctx.validate();
    return ctx;
}

/// theta_star for one sweep point: the configured truth, a cache hit, or a
/// fresh large-sample calibration. The estimation stream is keyed by a
/// content hash of everything theta_star depends on, so sweep points that
/// share a (target, model, kernel, n) quadruple share one estimate.
template <std::size_t P>
ParamVec<P> resolve_theta_star(const SweepPoint& pt, std::uint64_t master_seed,
                               const ExperimentOptions& opts) {
    const ExperimentSettings& s = pt.settings;
    if (s.theta_star.mode == ThetaStarSpec::Mode::known)
        return to_fixed<P>(std::span<const double>(s.theta_star.value));

    json source;
    source["target"] = target_to_json(s.target);
    source["model"] = model_to_json(s.model);
    source["kernel"] = kernel_to_json(s.kernel);
    source["n"] = s.n;
    source["iters"] = s.theta_star.iters;
    const std::uint64_t star_key =
        derive_key(master_seed, stream_tag::theta_star, fnv1a64(source.dump()));
    source["star_key"] = star_key;
    const std::string source_text = source.dump();
    const std::string cache_path =
        opts.cache_dir.empty()
            ? std::string()
            : opts.cache_dir + "/theta_star_" + hex64(fnv1a64(source_text)) + ".json";

    if (!cache_path.empty() && std::filesystem::exists(cache_path)) {
        const json cached = json::parse(read_text_file(cache_path));
        if (cached.contains("source") && cached.at("source").dump() == source_text) {
            const auto v = cached.at("theta").get<std::vector<double>>();
            return to_fixed<P>(std::span<const double>(v));
        }
    }

    if (opts.verbose)
        std::cerr << "[" << s.id << "/" << pt.label << "] estimating theta_star...\n";
    const ParamVec<P> star = estimate_optimal_parameter<P>(
        s.target, s.model, s.kernel, make_domain<P>(s.lower, s.upper), s.n, star_key,
        s.theta_star.iters);
    if (!cache_path.empty()) {
        std::filesystem::create_directories(opts.cache_dir);
        json out;
        out["source"] = source;
        out["theta"] = to_vector(star);
        write_text_file(cache_path, out.dump(2) + "\n");
    }
    return star;
}

template <std::size_t P>
RunRecord run_one(const ExperimentSettings& s, const ParamVec<P>& theta_star,
                  std::uint64_t master_seed, int run_index) {
    const auto t_start = std::chrono::steady_clock::now();
    RunRecord rec;
    rec.run = run_index;
    const std::uint64_t run_key =
        derive_key(master_seed, stream_tag::replication, static_cast<std::uint64_t>(run_index));
    try {
        const std::vector<double> x =
            generate_target_data(s.target, s.m, derive_key(run_key, stream_tag::target_data));
        const ScoreContext<P> ctx = make_score_context<P>(s, DataMatrix(x, 1));
        RngStream init_rng(derive_key(run_key, stream_tag::theta_init));
        const ParamVec<P> theta0 = ctx.domain.sample_uniform(init_rng);
        rec.theta0 = to_vector(theta0);

        const CalibrationResult<P> cal =
            calibrate(ctx, s.sgd, theta0, derive_key(run_key, stream_tag::run));
        rec.calibrated = true;
        rec.theta_hat = to_vector(cal.theta_hat);
        rec.final_score = cal.final_score;

        try {
            const SandwichEstimate<P> sandwich =
                estimate_sandwich(ctx, cal.theta_hat, s.n_c, s.fd_step,
                                  derive_key(run_key, stream_tag::confidence_latents));
            const ConfidenceSet<P> set = build_confidence_set(sandwich, cal.theta_hat, s.alpha);
            const SetGeometry geometry = set_geometry(set, s.boundary_points);
            rec.in_set = contains(set, theta_star);
            rec.width = geometry.width;
            if constexpr (P == 2) rec.height = geometry.height;
            if (s.write_sets) rec.set_json = confidence_set_json(set, geometry).dump(2) + "\n";
        } catch (const NotPositiveDefiniteError&) {
            rec.degenerate = true;
            rec.note = "sigma_not_pd";
        } catch (const SingularMatrixError&) {
            rec.degenerate = true;
            rec.note = "singular_h";
        } catch (const Error& e) {
            rec.degenerate = true;
            rec.note = e.what();
        }
    } catch (const DivergedError& e) {
        rec.degenerate = true;
        rec.note = std::string("diverged_iter_") + std::to_string(e.iteration);
    } catch (const Error& e) {
        rec.degenerate = true;
        rec.note = e.what();
    }
    std::replace(rec.note.begin(), rec.note.end(), ',', ';');
    rec.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return rec;
}

template <std::size_t P>
PointMetrics run_point(const SweepPoint& pt, std::uint64_t master_seed,
                       const ExperimentOptions& opts) {
    const ExperimentSettings& s = pt.settings;
    const ParamVec<P> theta_star = resolve_theta_star<P>(pt, master_seed, opts);

    PointMetrics metrics;
    metrics.label = pt.label;
    metrics.a = pt.a;
    metrics.beta = pt.beta;
    metrics.m = s.m;
    metrics.n = s.n;
    metrics.epsilon = pt.epsilon;
    metrics.R = s.R;
    metrics.theta_star = to_vector(theta_star);
    metrics.runs.resize(static_cast<std::size_t>(s.R));
    parallel_for(static_cast<std::size_t>(s.R), opts.threads, [&](std::size_t r) {
        metrics.runs[r] = run_one<P>(s, theta_star, master_seed, static_cast<int>(r));
    });

    std::vector<double> mse_acc(P, 0.0);
    int calibrated = 0;
    int valid = 0;
    int covered = 0;
    double width_acc = 0.0;
    double height_acc = 0.0;
    double seconds_acc = 0.0;
    for (const RunRecord& rec : metrics.runs) {
        seconds_acc += rec.seconds;
        if (rec.calibrated) {
            ++calibrated;
            for (std::size_t c = 0; c < P; ++c) {
                const double d = rec.theta_hat[c] - theta_star[c];
                mse_acc[c] += d * d;
            }
        }
        if (rec.degenerate) {
            ++metrics.degenerate_count;
            continue;
        }
        ++valid;
        if (rec.in_set) ++covered;
        width_acc += rec.width;
        if constexpr (P == 2) height_acc += rec.height;
    }
    metrics.mse.assign(P, std::numeric_limits<double>::quiet_NaN());
    if (calibrated > 0)
        for (std::size_t c = 0; c < P; ++c) metrics.mse[c] = mse_acc[c] / calibrated;
    if (valid > 0) {
        metrics.coverage = static_cast<double>(covered) / valid;
        metrics.mean_width = width_acc / valid;
        if constexpr (P == 2) metrics.mean_height = height_acc / valid;
    }
    metrics.mean_seconds = seconds_acc / static_cast<double>(s.R);
    if (opts.verbose) {
        std::cerr << "[" << s.id << "/" << pt.label << "] R=" << s.R
                  << " coverage=" << metrics.coverage << " degenerate=" << metrics.degenerate_count
                  << "\n";
    }
    return metrics;
}

template <std::size_t P>
ExperimentMetrics run_experiment_impl(const ExperimentSettings& settings,
                                      std::uint64_t master_seed, const ExperimentOptions& opts) {
    ExperimentMetrics metrics;
    metrics.settings = settings;
    metrics.master_seed = master_seed;
    for (const SweepPoint& pt : expand_sweeps(settings))
        metrics.points.push_back(run_point<P>(pt, master_seed, opts));
    return metrics;
}

}  // namespace detail

/// Runs the full batch: resolve theta_star per sweep point, execute R
/// replications per point (in parallel, bit-reproducibly), aggregate.
inline ExperimentMetrics run_experiment(const ExperimentSettings& settings,
                                        std::uint64_t master_seed,
                                        const ExperimentOptions& opts = {}) {
    switch (settings.p()) {
        case 1:
            return detail::run_experiment_impl<1>(settings, master_seed, opts);
        case 2:
            return detail::run_experiment_impl<2>(settings, master_seed, opts);
        default:
            throw ConfigError("run_experiment: queue models expose one or two parameters");
    }
}

namespace detail {

inline std::string cell(double v) {
    return std::isnan(v) ? std::string() : format_double(v);
}

}  // namespace detail

/// Aggregate report, one row per sweep point. Header matches the written
/// column set exactly; empty cells mean "not applicable" (no gamma shape, no
/// second coordinate, or no valid runs).
inline void write_report(const ExperimentMetrics& metrics, const std::string& path) {
    const std::size_t p = metrics.settings.p();
    std::vector<std::string> header{"experiment_id", "kernel", "a", "beta", "m", "n", "R"};
    for (std::size_t c = 0; c < p; ++c) header.push_back("mse_" + std::to_string(c));
    header.insert(header.end(),
                  {"coverage", "width", "height", "degenerate_count", "mean_seconds"});
    for (std::size_t c = 0; c < p; ++c) header.push_back("theta_star_" + std::to_string(c));

    std::vector<std::vector<std::string>> rows;
    for (const PointMetrics& pm : metrics.points) {
        std::vector<std::string> row{metrics.settings.id,
                                     kernel_family_name(metrics.settings.kernel.family),
                                     detail::cell(pm.a),
                                     detail::cell(pm.beta),
                                     std::to_string(pm.m),
                                     std::to_string(pm.n),
                                     std::to_string(pm.R)};
        for (std::size_t c = 0; c < p; ++c) row.push_back(detail::cell(pm.mse[c]));
        row.push_back(detail::cell(pm.coverage));
        row.push_back(detail::cell(pm.mean_width));
        row.push_back(detail::cell(pm.mean_height));
        row.push_back(std::to_string(pm.degenerate_count));
        row.push_back(format_double(pm.mean_seconds));
        for (std::size_t c = 0; c < p; ++c) row.push_back(detail::cell(pm.theta_star[c]));
        rows.push_back(std::move(row));
    }
    write_csv(path, header, rows);
}

/// Per-run detail CSV across all sweep points.
inline void write_run_details(const ExperimentMetrics& metrics, const std::string& path) {
    const std::size_t p = metrics.settings.p();
    std::vector<std::string> header{"experiment_id", "kernel", "label", "a",
                                    "beta",          "m",      "n",     "epsilon", "run"};
    for (std::size_t c = 0; c < p; ++c) header.push_back("theta0_" + std::to_string(c));
    for (std::size_t c = 0; c < p; ++c) header.push_back("theta_hat_" + std::to_string(c));
    header.insert(header.end(),
                  {"in_set", "degenerate", "note", "width", "height", "final_score", "seconds"});

    std::vector<std::vector<std::string>> rows;
    for (const PointMetrics& pm : metrics.points) {
        for (const RunRecord& rec : pm.runs) {
            std::vector<std::string> row{metrics.settings.id,
                                         kernel_family_name(metrics.settings.kernel.family),
                                         pm.label,
                                         detail::cell(pm.a),
                                         detail::cell(pm.beta),
                                         std::to_string(pm.m),
                                         std::to_string(pm.n),
                                         format_double(pm.epsilon),
                                         std::to_string(rec.run)};
            for (std::size_t c = 0; c < p; ++c)
                row.push_back(rec.theta0.size() == p ? format_double(rec.theta0[c])
                                                     : std::string());
            for (std::size_t c = 0; c < p; ++c)
                row.push_back(rec.calibrated ? format_double(rec.theta_hat[c]) : std::string());
            row.push_back(rec.degenerate ? std::string() : std::string(rec.in_set ? "1" : "0"));
            row.push_back(rec.degenerate ? "1" : "0");
            row.push_back(rec.note);
            row.push_back(detail::cell(rec.width));
            row.push_back(detail::cell(rec.height));
            row.push_back(detail::cell(rec.final_score));
            row.push_back(format_double(rec.seconds));
            rows.push_back(std::move(row));
        }
    }
    write_csv(path, header, rows);
}

/// Writes report CSV, per-run CSV, and one geometry JSON per retained
/// confidence set, under out_dir.
inline void write_experiment_outputs(const ExperimentMetrics& metrics,
                                     const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const std::string& id = metrics.settings.id;
    write_report(metrics, out_dir + "/" + id + "_report.csv");
    write_run_details(metrics, out_dir + "/" + id + "_runs.csv");
    if (metrics.settings.write_sets) {
        const std::string set_dir = out_dir + "/" + id + "_sets";
        fs::create_directories(set_dir);
        for (const PointMetrics& pm : metrics.points)
            for (const RunRecord& rec : pm.runs)
                if (!rec.set_json.empty())
                    write_text_file(set_dir + "/" + pm.label + "_run" +
                                        std::to_string(rec.run) + ".json",
                                    rec.set_json);
    }
}

/// Fixed-width human-readable table for standard output.
inline std::string render_metrics_table(const ExperimentMetrics& metrics) {
    const std::size_t p = metrics.settings.p();
    std::vector<std::string> header{"point", "m", "n", "R"};
    for (std::size_t c = 0; c < p; ++c) header.push_back("mse_" + std::to_string(c));
    header.insert(header.end(), {"coverage", "width", "height", "degen", "sec/run"});
    for (std::size_t c = 0; c < p; ++c) header.push_back("theta_star_" + std::to_string(c));

    const auto short_num = [](double v) {
        if (std::isnan(v)) return std::string("-");
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.4g", v);
        return std::string(buf);
    };
    std::vector<std::vector<std::string>> rows;
    for (const PointMetrics& pm : metrics.points) {
        std::vector<std::string> row{pm.label, std::to_string(pm.m), std::to_string(pm.n),
                                     std::to_string(pm.R)};
        for (std::size_t c = 0; c < p; ++c) row.push_back(short_num(pm.mse[c]));
        row.push_back(short_num(pm.coverage));
        row.push_back(short_num(pm.mean_width));
        row.push_back(short_num(pm.mean_height));
        row.push_back(std::to_string(pm.degenerate_count));
        row.push_back(short_num(pm.mean_seconds));
        for (std::size_t c = 0; c < p; ++c) row.push_back(short_num(pm.theta_star[c]));
        rows.push_back(std::move(row));
    }

    std::vector<std::size_t> widths(header.size());
    for (std::size_t i = 0; i < header.size(); ++i) widths[i] = header[i].size();
    for (const auto& row : rows)
        for (std::size_t i = 0; i < row.size(); ++i) widths[i] = std::max(widths[i], row[i].size());
    std::string out = "experiment " + metrics.settings.id + " (kernel " +
                      kernel_family_name(metrics.settings.kernel.family) + ", seed " +
                      std::to_string(metrics.master_seed) + ")\n";
    const auto emit_row = [&](const std::vector<std::string>& row) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            out += row[i];
            out.append(widths[i] - row[i].size() + 2, ' ');
        }
        out += '\n';
    };
    emit_row(header);
    for (const auto& row : rows) emit_row(row);
    return out;
}

}  // namespace kscal
