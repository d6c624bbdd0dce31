#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "curvecluster/multiscale.hpp"
#include "curvecluster/simulate.hpp"

namespace curvecluster {

inline constexpr const char* kVersion = "1.0.0";

// One JSON document of knobs; command-line flags override individual fields.
// Grid resolution order: explicit x/h lists win, otherwise arithmetic ranges;
// bandwidth bounds left at 0 are derived from the panel length T (effective
// sample size T*h_min near 10, h_max near 1/4) and snapped to h_step.
struct RunConfig {
    std::vector<double> x_list;
    std::vector<double> h_list;
    double x_min = 0.05, x_max = 0.95, x_step = 0.01;
    double h_min = 0.0, h_max = 0.0, h_step = 0.025;
    bool dyadic = false;

    std::string kernel = "epanechnikov";
    std::string variance_mode = "homoskedastic";
    std::string degeneracy_policy = "strict";
    double alpha = 0.95;
    int mc_reps = 1000;
    std::uint64_t seed = 1;
    unsigned workers = 0;  // 0 = all hardware threads

    std::string out_dir = "out";
    std::string cache_dir;  // empty = <out_dir>/cov-cache
    bool use_cache = true;
};

// Overlays fields present in `j` onto `cfg`; unknown keys are rejected.
void apply_config_json(RunConfig& cfg, const nlohmann::json& j);
void load_config_file(RunConfig& cfg, const std::string& path);
nlohmann::json config_json(const RunConfig& cfg);

// Builds the evaluation grid, deriving and logging the bandwidth window when
// the config leaves it open.  T only matters for that derivation.
LocationScaleGrid resolve_grid(const RunConfig& cfg, int T, std::ostream& log);

std::string effective_cache_dir(const RunConfig& cfg);

// Full pipeline: read -> transform -> distances -> threshold -> tree -> cut.
// Writes distances.csv(+meta), dendrogram.json, dendrogram.svg,
// assignments.csv, optional group_curves.csv, and report.json into
// cfg.out_dir.  Returns the report.
nlohmann::json cmd_cluster(const std::string& panel_csv, const RunConfig& cfg,
                           bool emit_group_curves, std::ostream& log);

// Distances only: distances.csv + distances_meta.json.
void cmd_distances(const std::string& panel_csv, const RunConfig& cfg, std::ostream& log);

// Prints q_n(alpha) on its own line to `out` and returns it; T_hint feeds the
// grid derivation (required unless the config pins the bandwidths).
double cmd_quantile(const RunConfig& cfg, int n_series, int T_hint, std::ostream& out,
                    std::ostream& log);

// Synthetic study; writes study.json into cfg.out_dir.
nlohmann::json cmd_simulate(const SimulationDesign& design, int replications,
                            const std::vector<double>& baseline_bandwidths,
                            const RunConfig& cfg, std::ostream& log, bool verbose,
                            bool fixed_effect_adjust = false);

// Re-renders a stored dendrogram against a threshold.
void cmd_render(const std::string& dendrogram_json, double threshold,
                const std::string& out_svg, std::ostream& log);

}  // namespace curvecluster
