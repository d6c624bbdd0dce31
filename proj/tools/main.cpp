#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "curvecluster/cli.hpp"
#include "curvecluster/errors.hpp"

namespace {

using curvecluster::RunConfig;

// --config is applied before the remaining flags bind, so explicit flags win.
void preload_config(int argc, char** argv, RunConfig& cfg) {
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--config" && i + 1 < argc) {
            curvecluster::load_config_file(cfg, argv[i + 1]);
            return;
        }
        if (arg.rfind("--config=", 0) == 0) {
            curvecluster::load_config_file(cfg, arg.substr(9));
            return;
        }
    }
}

void add_config_flags(CLI::App* cmd, RunConfig& cfg, std::string& config_path) {
    cmd->add_option("--config", config_path, "JSON config file (flags override its fields)");
    cmd->add_option("--locations", cfg.x_list, "explicit grid locations in [0,1]");
    cmd->add_option("--bandwidths", cfg.h_list, "explicit grid bandwidths in (0,0.5]");
    cmd->add_option("--x-min", cfg.x_min, "first grid location");
    cmd->add_option("--x-max", cfg.x_max, "last grid location");
    cmd->add_option("--x-step", cfg.x_step, "location spacing");
    cmd->add_option("--h-min", cfg.h_min, "smallest bandwidth (0 = derive from T)");
    cmd->add_option("--h-max", cfg.h_max, "largest bandwidth (0 = derive from T)");
    cmd->add_option("--h-step", cfg.h_step, "bandwidth spacing");
    cmd->add_flag("--dyadic", cfg.dyadic, "use the dyadic location-bandwidth grid");
    cmd->add_option("--kernel", cfg.kernel, "smoothing kernel: epanechnikov | biweight");
    cmd->add_option("--variance", cfg.variance_mode,
                    "variance estimator: homoskedastic | conditional");
    cmd->add_option("--policy", cfg.degeneracy_policy,
                    "degenerate-window policy: strict | lenient");
    cmd->add_option("--alpha", cfg.alpha, "confidence level of the threshold");
    cmd->add_option("--mc-reps", cfg.mc_reps, "Gaussian draws behind the threshold");
    cmd->add_option("--seed", cfg.seed, "master random seed");
    cmd->add_option("--workers", cfg.workers, "worker threads (0 = all cores)");
    cmd->add_option("--out", cfg.out_dir, "output directory");
    cmd->add_option("--cache-dir", cfg.cache_dir, "covariance cache directory");
    cmd->add_flag("!--no-cache", cfg.use_cache, "recompute the covariance, ignore the cache");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multiscale clustering of nonparametric regression curves"};
    app.set_version_flag("--version", std::string("artifact ") + curvecluster::kVersion);
    app.require_subcommand(1);

    RunConfig cfg;
    try {
        preload_config(argc, argv, cfg);
    } catch (const curvecluster::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.is_input_error() ? 2 : e.is_degeneracy() ? 3 : 4;
    }
    std::string config_path;

    std::string input_csv;
    bool group_curves = false;
    CLI::App* cluster = app.add_subcommand("cluster", "full pipeline on a panel CSV");
    cluster->add_option("--input", input_csv, "panel CSV (series_id,t,x,y)")->required();
    cluster->add_flag("--group-curves", group_curves, "also write per-group mean curves");
    add_config_flags(cluster, cfg, config_path);

    CLI::App* distances = app.add_subcommand("distances", "pairwise distance matrix only");
    distances->add_option("--input", input_csv, "panel CSV (series_id,t,x,y)")->required();
    add_config_flags(distances, cfg, config_path);

    int q_n = 0, q_T = 0;
    CLI::App* quantile = app.add_subcommand("quantile", "Gaussian threshold for n series");
    quantile->add_option("--n", q_n, "number of series")->required();
    quantile->add_option("--T", q_T, "panel length (needed when bandwidths are derived)");
    add_config_flags(quantile, cfg, config_path);

    curvecluster::SimulationDesign design;
    int replications = 100;
    std::vector<double> baselines;
    bool verbose = false;
    bool fixed_effect_adjust = false;
    CLI::App* simulate = app.add_subcommand("simulate", "synthetic clustering study");
    simulate->add_option("--n", design.n, "series per panel");
    simulate->add_option("--T", design.T, "observations per series");
    simulate->add_option("--k0", design.k0, "true number of groups (1..5)");
    simulate->add_option("--ar", design.ar_coeff, "AR(1) coefficient of the noise");
    simulate->add_option("--noise", design.noise_scale, "noise standard deviation");
    simulate->add_option("--replications", replications, "number of synthetic panels");
    simulate->add_option("--baseline", baselines,
                         "single-bandwidth baseline(s); each must be a grid level");
    simulate->add_flag("--verbose", verbose, "log every replication");
    simulate->add_flag("--fixed-effect-adjust", fixed_effect_adjust,
                       "demean each synthetic panel as the cluster command would "
                       "(the generated data has no additive effects, so this is off "
                       "by default)");
    add_config_flags(simulate, cfg, config_path);

    std::string dendro_path, out_svg = "dendrogram.svg";
    double threshold = 0.0;
    CLI::App* render = app.add_subcommand("render", "draw a stored dendrogram as SVG");
    render->add_option("--dendrogram", dendro_path, "dendrogram.json from `cluster`")
        ->required();
    render->add_option("--threshold", threshold, "cut height to draw")->required();
    render->add_option("--out-svg", out_svg, "output SVG path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cluster->parsed()) {
            curvecluster::cmd_cluster(input_csv, cfg, group_curves, std::cerr);
        } else if (distances->parsed()) {
            curvecluster::cmd_distances(input_csv, cfg, std::cerr);
        } else if (quantile->parsed()) {
            curvecluster::cmd_quantile(cfg, q_n, q_T, std::cout, std::cerr);
        } else if (simulate->parsed()) {
            curvecluster::cmd_simulate(design, replications, baselines, cfg, std::cerr,
                                       verbose, fixed_effect_adjust);
        } else if (render->parsed()) {
            curvecluster::cmd_render(dendro_path, threshold, out_svg, std::cerr);
        }
    } catch (const curvecluster::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.is_input_error() ? 2 : e.is_degeneracy() ? 3 : 4;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
