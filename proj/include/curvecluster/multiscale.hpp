#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "curvecluster/kernel.hpp"
#include "curvecluster/modes.hpp"
#include "curvecluster/panel.hpp"

namespace curvecluster {

// Location/bandwidth evaluation grid.  Points are grouped by bandwidth
// (ascending) and by location (ascending) within a bandwidth, so a single
// bandwidth is a contiguous slice -- the layout the pairwise loops and the
// single-bandwidth restrictions rely on.
struct GridPoint {
    double x;
    double h;
};

struct BandwidthLevel {
    double h;
    std::size_t begin, end;  // [begin, end) into points
};

struct LocationScaleGrid {
    std::vector<GridPoint> points;
    std::vector<BandwidthLevel> levels;
    double h_min = 0.0, h_max = 0.0;

    std::size_t size() const { return points.size(); }
};

// Cartesian grid from deduplicated location and bandwidth lists.  Locations
// must lie in [0, 1], bandwidths in (0, 0.5].
LocationScaleGrid make_grid(std::vector<double> locations, std::vector<double> bandwidths);

// All dyadic pairs (r 2^-v, 2^-v) with 0 < r 2^-v < 1 and h_min <= 2^-v <= h_max.
LocationScaleGrid make_dyadic_grid(double h_min, double h_max);

// Scale penalty lambda(2h) = sqrt(2 log(1/(2h))): the size of the fluctuation
// a bandwidth-h statistic is entitled to under the null.  Subtracting it puts
// all bandwidths on a common footing; lambda(0.5) = 0.
double lambda_correction(double h);

// Stable identity of (grid, kernel[, variance mode]); keys the covariance
// cache and stamps distance exports so mismatched artifacts are detectable.
std::uint64_t grid_kernel_fingerprint(const LocationScaleGrid& grid, const KernelProfile& kern);
std::uint64_t run_fingerprint(const LocationScaleGrid& grid, const KernelProfile& kern,
                              VarianceMode mode);

struct DistanceMatrix {
    int n = 0;
    std::vector<double> d;  // n*n, symmetric, diagonal = -lambda(2 h_max)
    std::uint64_t grid_fingerprint = 0;

    double at(int i, int j) const { return d[static_cast<std::size_t>(i) * n + j]; }
    double diagonal_value() const { return n > 0 ? d[0] : 0.0; }
};

// Normalized curve contrast at one grid point:
//   psi = sqrt(T h) (mhat_i(x) - mhat_j(x)) / sqrt((v_i + v_j) s(x,h)),
// v_k = sigma2_k / fhat_k(x).  Strict semantics: degenerate windows, densities
// below 1e-6, or a zero variance against a nonzero contrast all throw.
double psi_statistic(const TransformedPanel& tp, int i, int j, double x, double h,
                     const KernelProfile& kern, VarianceMode mode);

// max over the grid of |psi| - lambda(2h), using only series i and j.
double multiscale_distance(const TransformedPanel& tp, int i, int j,
                           const LocationScaleGrid& grid, const KernelProfile& kern,
                           VarianceMode mode, DegeneracyPolicy policy = DegeneracyPolicy::strict);

// Precomputes per-series smoother values and variance ratios over the grid
// once, then assembles pairwise distances from them.  Under the lenient
// policy, grid points unusable for *any* series are dropped for all pairs so
// every distance scans the same point set.
class MultiscaleEngine {
  public:
    MultiscaleEngine(const TransformedPanel& tp, const LocationScaleGrid& grid,
                     const KernelProfile& kern, VarianceMode mode, DegeneracyPolicy policy,
                     unsigned workers = 1, std::vector<int> series_subset = {});

    DistanceMatrix full_matrix() const;
    // Distances restricted to one bandwidth level of the grid (it must exist);
    // equals distance_matrix() on the standalone single-bandwidth grid.
    DistanceMatrix level_matrix(double h) const;

    int n_series() const { return static_cast<int>(series_.size()); }
    std::size_t usable_points() const { return kept_points_.size(); }
    const LocationScaleGrid& grid() const { return grid_; }

  private:
    struct LevelSlice {
        double h;
        std::size_t begin, end;  // [begin, end) into the compacted arrays
    };

    DistanceMatrix pair_matrix(std::size_t begin, std::size_t end, double diag,
                               std::uint64_t fingerprint) const;

    LocationScaleGrid grid_;
    KernelProfile kern_;
    VarianceMode mode_;
    unsigned workers_ = 1;
    int T_ = 0;
    std::vector<int> series_;             // panel row of each engine series
    std::vector<std::size_t> kept_points_;  // grid indices surviving the policy
    std::vector<LevelSlice> slices_;        // per level, in level order
    // compacted per-point constants, aligned with kept_points_
    std::vector<double> s_, sqrt_th_, lambda_;
    // compacted per-series stats: stats_m_[i] and stats_v_[i] over kept points
    std::vector<std::vector<double>> stats_m_, stats_v_;
};

DistanceMatrix distance_matrix(const TransformedPanel& tp, const LocationScaleGrid& grid,
                               const KernelProfile& kern, VarianceMode mode,
                               DegeneracyPolicy policy, unsigned workers = 1);

// `i,j,d` rows over the upper triangle (0-based indices, header included).
void write_distances_csv(const DistanceMatrix& dm, const std::string& path);
// Sidecar metadata documenting what the distances were computed from.
void write_distances_meta(const DistanceMatrix& dm, const LocationScaleGrid& grid,
                          const KernelProfile& kern, VarianceMode mode,
                          const std::vector<std::string>& series_ids, const std::string& path);

}  // namespace curvecluster
