#include "curvecluster/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "curvecluster/cluster.hpp"
#include "curvecluster/errors.hpp"
#include "curvecluster/rng.hpp"
#include "curvecluster/simd.hpp"
#include "curvecluster/svg.hpp"
#include "curvecluster/threshold.hpp"

namespace curvecluster {

namespace {

class StageClock {
  public:
    explicit StageClock(nlohmann::json& timings) : timings_(timings) {}
    template <typename F>
    auto stage(const char* name, F&& f) {
        const auto t0 = std::chrono::steady_clock::now();
        if constexpr (std::is_void_v<decltype(f())>) {
            f();
            record(name, t0);
        } else {
            auto result = f();
            record(name, t0);
            return result;
        }
    }
    void record(const char* name, std::chrono::steady_clock::time_point t0) {
        const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
        timings_[name] = dt.count();
        total_ += dt.count();
        timings_["total"] = total_;
    }

  private:
    nlohmann::json& timings_;
    double total_ = 0.0;
};

double get_num(const nlohmann::json& v, const std::string& key) {
    if (!v.is_number()) raise(errc::bad_config, "config field '" + key + "' must be a number");
    return v.get<double>();
}

std::string fingerprint_hex(std::uint64_t fp) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fp));
    return buf;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) raise(errc::io_error, "cannot create directory " + dir + ": " + ec.message());
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) raise(errc::io_error, "cannot open " + path + " for writing");
    out << text;
    if (!out) raise(errc::io_error, "failed writing " + path);
}

std::string out_path(const RunConfig& cfg, const char* file) {
    return (std::filesystem::path(cfg.out_dir) / file).string();
}

}  // namespace

void apply_config_json(RunConfig& cfg, const nlohmann::json& j) {
    if (!j.is_object()) raise(errc::bad_config, "config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (key == "x_list") {
            cfg.x_list = value.get<std::vector<double>>();
        } else if (key == "h_list") {
            cfg.h_list = value.get<std::vector<double>>();
        } else if (key == "x_min") {
            cfg.x_min = get_num(value, key);
        } else if (key == "x_max") {
            cfg.x_max = get_num(value, key);
        } else if (key == "x_step") {
            cfg.x_step = get_num(value, key);
        } else if (key == "h_min") {
            cfg.h_min = get_num(value, key);
        } else if (key == "h_max") {
            cfg.h_max = get_num(value, key);
        } else if (key == "h_step") {
            cfg.h_step = get_num(value, key);
        } else if (key == "dyadic") {
            cfg.dyadic = value.get<bool>();
        } else if (key == "kernel") {
            cfg.kernel = value.get<std::string>();
        } else if (key == "variance_mode") {
            cfg.variance_mode = value.get<std::string>();
        } else if (key == "degeneracy_policy") {
            cfg.degeneracy_policy = value.get<std::string>();
        } else if (key == "alpha") {
            cfg.alpha = get_num(value, key);
        } else if (key == "mc_reps") {
            cfg.mc_reps = value.get<int>();
        } else if (key == "seed") {
            cfg.seed = value.get<std::uint64_t>();
        } else if (key == "workers") {
            cfg.workers = value.get<unsigned>();
        } else if (key == "out_dir") {
            cfg.out_dir = value.get<std::string>();
        } else if (key == "cache_dir") {
            cfg.cache_dir = value.get<std::string>();
        } else if (key == "use_cache") {
            cfg.use_cache = value.get<bool>();
        } else {
            raise(errc::bad_config, "unknown config key '" + key + "'");
        }
    }
}

void load_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(errc::io_error, "cannot open config file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        raise(errc::bad_config, "config file " + path + " is not valid JSON: " + e.what());
    }
    apply_config_json(cfg, j);
}

nlohmann::json config_json(const RunConfig& cfg) {
    return nlohmann::json{
        {"x_list", cfg.x_list},       {"h_list", cfg.h_list},
        {"x_min", cfg.x_min},         {"x_max", cfg.x_max},
        {"x_step", cfg.x_step},       {"h_min", cfg.h_min},
        {"h_max", cfg.h_max},         {"h_step", cfg.h_step},
        {"dyadic", cfg.dyadic},       {"kernel", cfg.kernel},
        {"variance_mode", cfg.variance_mode},
        {"degeneracy_policy", cfg.degeneracy_policy},
        {"alpha", cfg.alpha},         {"mc_reps", cfg.mc_reps},
        {"seed", cfg.seed},           {"workers", cfg.workers},
        {"out_dir", cfg.out_dir},     {"cache_dir", cfg.cache_dir},
        {"use_cache", cfg.use_cache},
    };
}

LocationScaleGrid resolve_grid(const RunConfig& cfg, int T, std::ostream& log) {
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0))
        raise(errc::bad_level, "alpha must lie in (0, 1)");

    if (cfg.dyadic) {
        const double lo = cfg.h_min > 0.0 ? cfg.h_min : 10.0 / T;
        const double hi = cfg.h_max > 0.0 ? cfg.h_max : 0.25;
        LocationScaleGrid grid = make_dyadic_grid(lo, hi);
        log << "dyadic grid: " << grid.size() << " points, h in [" << grid.h_min << ", "
            << grid.h_max << "]\n";
        return grid;
    }

    std::vector<double> xs = cfg.x_list;
    if (xs.empty()) {
        if (!(cfg.x_step > 0.0)) raise(errc::bad_config, "x_step must be positive");
        const int steps = static_cast<int>(std::round((cfg.x_max - cfg.x_min) / cfg.x_step));
        if (steps < 0) raise(errc::bad_config, "x_min exceeds x_max");
        for (int k = 0; k <= steps; ++k) {
            const double x = cfg.x_min + k * cfg.x_step;
            if (x <= cfg.x_max + 1e-12) xs.push_back(std::min(x, 1.0));
        }
    }

    std::vector<double> hs = cfg.h_list;
    if (hs.empty()) {
        if (!(cfg.h_step > 0.0)) raise(errc::bad_config, "h_step must be positive");
        const int k_cap = static_cast<int>(std::floor(0.5 / cfg.h_step + 1e-9));
        const auto snap = [&](double h) {
            const int k = static_cast<int>(std::lround(h / cfg.h_step));
            return std::clamp(k, 1, std::max(1, k_cap));
        };
        const bool derived = cfg.h_min <= 0.0 || cfg.h_max <= 0.0;
        if (derived && T <= 0)
            raise(errc::bad_config,
                  "bandwidth window derivation needs the panel length; set h_min/h_max or pass T");
        const double lo_raw = cfg.h_min > 0.0 ? cfg.h_min : 10.0 / T;
        const double hi_raw = cfg.h_max > 0.0 ? cfg.h_max : 0.25;
        const int k_lo = snap(lo_raw);
        const int k_hi = std::max(k_lo, snap(hi_raw));
        for (int k = k_lo; k <= k_hi; ++k) hs.push_back(k * cfg.h_step);
        if (derived)
            log << "bandwidth window derived from T=" << T << ": h in [" << hs.front() << ", "
                << hs.back() << "] step " << cfg.h_step << " (T*h_min=" << T * hs.front()
                << ", T*h_max=" << T * hs.back() << ")\n";
    }

    LocationScaleGrid grid = make_grid(std::move(xs), std::move(hs));
    log << "grid: " << grid.size() << " points, " << grid.levels.size() << " bandwidths in ["
        << grid.h_min << ", " << grid.h_max << "], locations in [" << grid.points.front().x
        << ", " << grid.points[grid.levels.front().end - 1].x << "]\n";
    return grid;
}

std::string effective_cache_dir(const RunConfig& cfg) {
    if (!cfg.cache_dir.empty()) return cfg.cache_dir;
    return (std::filesystem::path(cfg.out_dir) / "cov-cache").string();
}

namespace {

nlohmann::json report_stub(const RunConfig& cfg) {
    nlohmann::json j;
    j["version"] = kVersion;
    j["config"] = config_json(cfg);
    j["simd"] = simd::active_kernels().name;
    return j;
}

nlohmann::json grid_json(const LocationScaleGrid& grid) {
    return nlohmann::json{{"size", grid.size()},
                          {"levels", grid.levels.size()},
                          {"h_min", grid.h_min},
                          {"h_max", grid.h_max}};
}

}  // namespace

nlohmann::json cmd_cluster(const std::string& panel_csv, const RunConfig& cfg,
                           bool emit_group_curves, std::ostream& log) {
    ensure_dir(cfg.out_dir);
    const VarianceMode mode = variance_mode_from_string(cfg.variance_mode);
    const DegeneracyPolicy policy = policy_from_string(cfg.degeneracy_policy);
    const KernelProfile kern = kernel_by_name(cfg.kernel);

    nlohmann::json report = report_stub(cfg);
    StageClock clock(report["timings"]);

    const PanelData panel =
        clock.stage("read", [&] { return read_panel_csv(panel_csv); });
    log << "panel: n=" << panel.n << " series, T=" << panel.T << " observations each\n";
    const TransformedPanel tp =
        clock.stage("transform", [&] { return within_transform(panel); });
    const LocationScaleGrid grid = resolve_grid(cfg, panel.T, log);

    const MultiscaleEngine engine = clock.stage("smooth", [&] {
        return MultiscaleEngine(tp, grid, kern, mode, policy, cfg.workers);
    });
    const DistanceMatrix dm = clock.stage("distances", [&] { return engine.full_matrix(); });
    write_distances_csv(dm, out_path(cfg, "distances.csv"));
    write_distances_meta(dm, grid, kern, mode, panel.series_ids,
                         out_path(cfg, "distances_meta.json"));

    const GaussianDesign design = clock.stage("covariance", [&] {
        return build_covariance_cached(grid, kern, effective_cache_dir(cfg), cfg.use_cache);
    });
    const double q = clock.stage("quantile", [&] {
        return quantile_qn(design, panel.n, cfg.alpha, cfg.mc_reps,
                           derive_seed(cfg.seed, seed_tag::quantile), cfg.workers);
    });
    log << "threshold q(" << cfg.alpha << ") = " << q << "\n";

    const Dendrogram dend = clock.stage("cluster", [&] {
        return hac_complete_linkage(dm, panel.series_ids);
    });
    const ClusteringResult res = estimate_k0(dend, q);
    log << "estimated " << res.k_hat << " groups\n";

    write_dendrogram_json(dend, out_path(cfg, "dendrogram.json"));
    write_dendrogram_svg(dend, q, out_path(cfg, "dendrogram.svg"));
    {
        std::ostringstream rows;
        rows << "series_id,cluster\n";
        std::vector<int> label(static_cast<std::size_t>(panel.n), 0);
        for (std::size_t g = 0; g < res.partition.size(); ++g)
            for (int member : res.partition[g]) label[static_cast<std::size_t>(member)] =
                static_cast<int>(g) + 1;
        for (int i = 0; i < panel.n; ++i)
            rows << panel.series_ids[static_cast<std::size_t>(i)] << ","
                 << label[static_cast<std::size_t>(i)] << "\n";
        write_text(out_path(cfg, "assignments.csv"), rows.str());
    }

    if (emit_group_curves) {
        const double h_display = grid.h_max;
        std::vector<double> eval_points;
        for (const auto& lev : grid.levels)
            if (lev.h == grid.h_max)
                for (std::size_t g = lev.begin; g < lev.end; ++g)
                    eval_points.push_back(grid.points[g].x);
        const auto curves = group_mean_curves(tp, res.partition, h_display, eval_points, kern);
        std::ostringstream rows;
        rows << "cluster,x,mean_curve\n";
        rows.precision(17);
        for (std::size_t g = 0; g < curves.size(); ++g)
            for (std::size_t e = 0; e < eval_points.size(); ++e)
                rows << (g + 1) << "," << eval_points[e] << "," << curves[g][e] << "\n";
        write_text(out_path(cfg, "group_curves.csv"), rows.str());
    }

    report["n"] = panel.n;
    report["T"] = panel.T;
    report["series_ids"] = panel.series_ids;
    report["grid"] = grid_json(grid);
    report["grid_fingerprint"] = fingerprint_hex(dm.grid_fingerprint);
    report["usable_grid_points"] = engine.usable_points();
    report["threshold"] = q;
    report["k_hat"] = res.k_hat;
    report["criterion_values"] = res.criterion_values;
    report["singleton_height"] = dend.singleton_height;
    report["covariance"] = {{"max_diag_error", design.max_diag_error},
                            {"min_eig_before_clip", design.min_eig_before_clip}};
    {
        nlohmann::json groups = nlohmann::json::array();
        for (const auto& g : res.partition) {
            nlohmann::json members = nlohmann::json::array();
            for (int member : g)
                members.push_back(panel.series_ids[static_cast<std::size_t>(member)]);
            groups.push_back(std::move(members));
        }
        report["groups"] = std::move(groups);
    }
    write_text(out_path(cfg, "report.json"), report.dump(2) + "\n");
    return report;
}

void cmd_distances(const std::string& panel_csv, const RunConfig& cfg, std::ostream& log) {
    ensure_dir(cfg.out_dir);
    const VarianceMode mode = variance_mode_from_string(cfg.variance_mode);
    const DegeneracyPolicy policy = policy_from_string(cfg.degeneracy_policy);
    const KernelProfile kern = kernel_by_name(cfg.kernel);

    const PanelData panel = read_panel_csv(panel_csv);
    log << "panel: n=" << panel.n << " series, T=" << panel.T << " observations each\n";
    const TransformedPanel tp = within_transform(panel);
    const LocationScaleGrid grid = resolve_grid(cfg, panel.T, log);
    const DistanceMatrix dm = distance_matrix(tp, grid, kern, mode, policy, cfg.workers);
    write_distances_csv(dm, out_path(cfg, "distances.csv"));
    write_distances_meta(dm, grid, kern, mode, panel.series_ids,
                         out_path(cfg, "distances_meta.json"));
    log << "wrote " << out_path(cfg, "distances.csv") << " (" << panel.n << "x" << panel.n
        << ", fingerprint " << fingerprint_hex(dm.grid_fingerprint) << ")\n";
}

double cmd_quantile(const RunConfig& cfg, int n_series, int T_hint, std::ostream& out,
                    std::ostream& log) {
    const KernelProfile kern = kernel_by_name(cfg.kernel);
    const LocationScaleGrid grid = resolve_grid(cfg, T_hint, log);
    ensure_dir(effective_cache_dir(cfg));
    const GaussianDesign design =
        build_covariance_cached(grid, kern, effective_cache_dir(cfg), cfg.use_cache);
    const double q = quantile_qn(design, n_series, cfg.alpha, cfg.mc_reps,
                                 derive_seed(cfg.seed, seed_tag::quantile), cfg.workers);
    log << "q_" << n_series << "(" << cfg.alpha << ") over " << grid.size()
        << " grid points, " << cfg.mc_reps << " draws\n";
    out.precision(12);
    out << q << "\n";
    return q;
}

nlohmann::json cmd_simulate(const SimulationDesign& design, int replications,
                            const std::vector<double>& baseline_bandwidths,
                            const RunConfig& cfg, std::ostream& log, bool verbose,
                            bool fixed_effect_adjust) {
    ensure_dir(cfg.out_dir);
    StudySetup setup;
    setup.design = design;
    setup.grid = resolve_grid(cfg, design.T, log);
    setup.baseline_bandwidths = baseline_bandwidths;
    setup.alpha = cfg.alpha;
    setup.mc_reps = cfg.mc_reps;
    setup.replications = replications;
    setup.master_seed = cfg.seed;
    setup.variance_mode = variance_mode_from_string(cfg.variance_mode);
    setup.policy = policy_from_string(cfg.degeneracy_policy);
    setup.kern = kernel_by_name(cfg.kernel);
    setup.workers = cfg.workers;
    setup.cache_dir = effective_cache_dir(cfg);
    setup.use_cache = cfg.use_cache;
    setup.fixed_effect_adjust = fixed_effect_adjust;

    nlohmann::json report = report_stub(cfg);
    StageClock clock(report["timings"]);
    const StudyReport study = clock.stage("study", [&] {
        return run_study(setup, verbose ? &log : nullptr);
    });

    nlohmann::json body = study_report_json(setup, study);
    for (auto& [key, value] : body.items()) report[key] = value;
    write_text(out_path(cfg, "study.json"), report.dump(2) + "\n");

    log << "multiscale: threshold " << study.threshold_multiscale << ", correct-K rate "
        << study.summary_multiscale.k_correct_rate << ", mean errors "
        << study.summary_multiscale.mean_errors << " over " << study.summary_multiscale.ok_count
        << "/" << replications << " successful replications\n";
    for (std::size_t b = 0; b < baseline_bandwidths.size(); ++b) {
        const MethodSummary& s = study.summary_baselines[b];
        log << "baseline h=" << baseline_bandwidths[b] << ": threshold "
            << study.thresholds_baseline[b] << ", correct-K rate " << s.k_correct_rate
            << ", mean errors " << s.mean_errors << "\n";
    }
    return report;
}

void cmd_render(const std::string& dendrogram_json, double threshold,
                const std::string& out_svg, std::ostream& log) {
    const Dendrogram dend = read_dendrogram_json(dendrogram_json);
    write_dendrogram_svg(dend, threshold, out_svg);
    int k = dend.n;
    for (const Merge& m : dend.merges)
        if (m.height <= threshold) --k;
    log << "rendered " << out_svg << " (" << dend.n << " leaves, K=" << k << " at threshold "
        << threshold << ")\n";
}

}  // namespace curvecluster
