#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "curvecluster/kernel.hpp"
#include "curvecluster/modes.hpp"
#include "curvecluster/multiscale.hpp"
#include "curvecluster/panel.hpp"

namespace curvecluster {

// Smooth compactly supported bump, (1 - v^2)^2 on |v| <= 1 with
// v = (x - center) / width; zero elsewhere.
double bump(double x, double center, double width);

// The five benchmark regression functions used by the synthetic studies:
// flat, two wide bumps at 1/4 and 3/4, and two narrow spikes at the same
// locations.  `k` is 1-based.
double group_function(int k, double x);

struct GroupStructure {
    std::vector<int> assignment;  // 0-based group label per series
    int k0 = 0;
};

// Splits n series into k0 contiguous equal blocks; n must be divisible by k0.
GroupStructure equal_blocks(int n, int k0);

struct SimulationDesign {
    int n = 50;                // number of series
    int T = 500;               // observations per series
    int k0 = 5;                // number of groups (cycles through group_function)
    double ar_coeff = -0.25;   // AR(1) coefficient of the noise
    double noise_scale = 1.0;  // multiplies the unit-variance stationary noise
};

// Draws one synthetic panel: X iid uniform on [0, 1], stationary AR(1) noise,
// group curves assigned in equal blocks.  Each series consumes its own
// substream of `seed`, so the panel is reproducible and independent of the
// worker count used elsewhere.
PanelData draw_sample(const SimulationDesign& design, std::uint64_t seed);

// Minimum number of misclassified series over all relabelings of the
// estimated partition.  Both label vectors must use exactly k0 distinct
// labels in [0, k0).
int classification_errors(const std::vector<int>& truth, const std::vector<int>& estimate,
                          int k0);

struct MethodOutcome {
    bool ok = false;
    int k_hat = 0;
    int errors_f = 0;        // misclassified series when forced to k0 groups
    std::string error;       // reason when !ok
};

struct RepRecord {
    int rep = 0;
    MethodOutcome multiscale;
    std::vector<MethodOutcome> baselines;  // parallel to StudySetup::baseline_bandwidths
};

struct StudySetup {
    SimulationDesign design;
    LocationScaleGrid grid;                    // multiscale location-bandwidth grid
    std::vector<double> baseline_bandwidths;   // each must match a grid level
    double alpha = 0.95;
    int mc_reps = 1000;                        // Gaussian draws per quantile
    int replications = 100;
    std::uint64_t master_seed = 1;
    VarianceMode variance_mode = VarianceMode::homoskedastic;
    DegeneracyPolicy policy = DegeneracyPolicy::strict;
    KernelProfile kern = epanechnikov();
    unsigned workers = 1;
    std::string cache_dir;                     // covariance cache location ("" = off)
    bool use_cache = true;
    // The synthetic model has no additive series/time effects, so by default
    // the replications skip the fixed-effect adjustment (it would only inject
    // estimation noise and recenter the group curves).  Enable to exercise
    // the full adjustment anyway.
    bool fixed_effect_adjust = false;
};

struct MethodSummary {
    int ok_count = 0;
    double k_correct_rate = 0.0;  // share of ALL replications with k_hat == k0
    double mean_errors = 0.0;     // over successful replications
    double median_errors = 0.0;   // over successful replications
};

struct StudyReport {
    double threshold_multiscale = 0.0;
    std::vector<double> thresholds_baseline;
    std::vector<RepRecord> reps;
    MethodSummary summary_multiscale;
    std::vector<MethodSummary> summary_baselines;
};

// Runs the full synthetic comparison: one threshold per method, then
// `replications` independent panels, each clustered with the multiscale
// distance and with every single-bandwidth baseline.  If `progress` is
// non-null a short line is written after every replication.
StudyReport run_study(const StudySetup& setup, std::ostream* progress = nullptr);

nlohmann::json study_report_json(const StudySetup& setup, const StudyReport& report);

}  // namespace curvecluster
