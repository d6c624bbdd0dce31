#include "curvecluster/errors.hpp"

namespace curvecluster {

const char* errc_name(errc c) {
    switch (c) {
        case errc::unbalanced_panel: return "UnbalancedPanel";
        case errc::out_of_support: return "OutOfSupport";
        case errc::too_few_series: return "TooFewSeries";
        case errc::duplicate_observation: return "DuplicateObservation";
        case errc::bad_bandwidth: return "BadBandwidth";
        case errc::empty_grid: return "EmptyGrid";
        case errc::bad_group: return "BadGroup";
        case errc::bad_level: return "BadLevel";
        case errc::bad_reps: return "BadReps";
        case errc::cluster_count_mismatch: return "ClusterCountMismatch";
        case errc::malformed_dendrogram: return "MalformedDendrogram";
        case errc::bad_config: return "BadConfig";
        case errc::io_error: return "IoError";
        case errc::insufficient_local_data: return "InsufficientLocalData";
        case errc::degenerate_density: return "DegenerateDensity";
        case errc::degenerate_variance: return "DegenerateVariance";
        case errc::all_points_degenerate: return "AllPointsDegenerate";
        case errc::non_finite_distance: return "NonFiniteDistance";
        case errc::quadrature_failure: return "QuadratureFailure";
        case errc::factorization_failure: return "FactorizationFailure";
    }
    return "UnknownError";
}

bool Error::is_input_error() const noexcept {
    switch (code_) {
        case errc::unbalanced_panel:
        case errc::out_of_support:
        case errc::too_few_series:
        case errc::duplicate_observation:
        case errc::bad_bandwidth:
        case errc::empty_grid:
        case errc::bad_group:
        case errc::bad_level:
        case errc::bad_reps:
        case errc::cluster_count_mismatch:
        case errc::malformed_dendrogram:
        case errc::bad_config:
        case errc::io_error:
            return true;
        default:
            return false;
    }
}

bool Error::is_degeneracy() const noexcept {
    switch (code_) {
        case errc::insufficient_local_data:
        case errc::degenerate_density:
        case errc::degenerate_variance:
        case errc::all_points_degenerate:
        case errc::non_finite_distance:
            return true;
        default:
            return false;
    }
}

}  // namespace curvecluster
