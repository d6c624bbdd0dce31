#include "curvecluster/multiscale.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "curvecluster/errors.hpp"
#include "curvecluster/parallel.hpp"

namespace curvecluster {

namespace {

void check_location(double x) {
    if (!(x >= 0.0 && x <= 1.0))
        raise(errc::out_of_support, "grid location " + std::to_string(x) + " outside [0, 1]");
}

void check_bandwidth(double h) {
    if (!(h > 0.0) || h > 0.5)
        raise(errc::bad_bandwidth, "grid bandwidth " + std::to_string(h) + " outside (0, 0.5]");
}

std::vector<double> sorted_unique(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

}  // namespace

LocationScaleGrid make_grid(std::vector<double> locations, std::vector<double> bandwidths) {
    if (locations.empty() || bandwidths.empty())
        raise(errc::empty_grid, "grid needs at least one location and one bandwidth");
    locations = sorted_unique(std::move(locations));
    bandwidths = sorted_unique(std::move(bandwidths));
    for (double x : locations) check_location(x);
    for (double h : bandwidths) check_bandwidth(h);

    LocationScaleGrid grid;
    grid.points.reserve(locations.size() * bandwidths.size());
    for (double h : bandwidths) {
        const std::size_t begin = grid.points.size();
        for (double x : locations) grid.points.push_back({x, h});
        grid.levels.push_back({h, begin, grid.points.size()});
    }
    grid.h_min = bandwidths.front();
    grid.h_max = bandwidths.back();
    return grid;
}

LocationScaleGrid make_dyadic_grid(double h_min, double h_max) {
    check_bandwidth(h_min);
    check_bandwidth(h_max);
    if (h_min > h_max) raise(errc::bad_bandwidth, "h_min exceeds h_max");

    LocationScaleGrid grid;
    // level v contributes bandwidth 2^-v with locations r 2^-v, 0 < r < 2^v;
    // iterate coarse-to-fine... rather fine-to-coarse gives the h-ascending order.
    std::vector<int> levels;
    for (int v = 1; v <= 40; ++v) {
        const double h = std::ldexp(1.0, -v);
        if (h > h_max) continue;
        if (h < h_min) break;
        levels.push_back(v);
    }
    if (levels.empty())
        raise(errc::empty_grid, "no dyadic bandwidth lies inside [h_min, h_max]");
    for (auto it = levels.rbegin(); it != levels.rend(); ++it) {
        const int v = *it;
        const double h = std::ldexp(1.0, -v);
        const std::size_t begin = grid.points.size();
        const long long rmax = (1LL << v) - 1;
        for (long long r = 1; r <= rmax; ++r) grid.points.push_back({static_cast<double>(r) * h, h});
        grid.levels.push_back({h, begin, grid.points.size()});
    }
    grid.h_min = grid.levels.front().h;
    grid.h_max = grid.levels.back().h;
    return grid;
}

double lambda_correction(double h) {
    check_bandwidth(h);
    return std::sqrt(std::max(0.0, -2.0 * std::log(2.0 * h)));
}

namespace {

std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t seed) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t hash = seed;
    for (std::size_t i = 0; i < len; ++i) {
        hash ^= p[i];
        hash *= 1099511628211ULL;
    }
    return hash;
}

}  // namespace

std::uint64_t grid_kernel_fingerprint(const LocationScaleGrid& grid, const KernelProfile& kern) {
    // Format version folded into the hash: bump it whenever the covariance
    // integration semantics change, so cached matrices computed under the old
    // semantics are treated as misses instead of being silently reloaded.
    const std::uint64_t version = 2;
    std::uint64_t h = fnv1a(&version, sizeof(version), 14695981039346656037ULL);
    h = fnv1a(kern.name.data(), kern.name.size(), h);
    const std::uint64_t count = grid.size();
    h = fnv1a(&count, sizeof(count), h);
    for (const GridPoint& p : grid.points) {
        h = fnv1a(&p.x, sizeof(double), h);
        h = fnv1a(&p.h, sizeof(double), h);
    }
    return h;
}

std::uint64_t run_fingerprint(const LocationScaleGrid& grid, const KernelProfile& kern,
                              VarianceMode mode) {
    const std::uint64_t base = grid_kernel_fingerprint(grid, kern);
    const unsigned char m = mode == VarianceMode::homoskedastic ? 0 : 1;
    return fnv1a(&m, 1, base);
}

namespace {

struct SeriesPointValues {
    double m = 0.0;  // local-linear fit
    double v = 0.0;  // sigma2 / density
};

// One series' smoother value and variance ratio at one grid point, strict
// semantics (throws).  psi_statistic is assembled from exactly these pieces
// so its value matches the batch engine bit for bit.
SeriesPointValues series_point_values(const SeriesView& view, int label, int T, double x, double h,
                                      const KernelProfile& kern, const KernelConstants& c,
                                      VarianceMode mode) {
    const simd::Moments mo = window_moments(view, x, h, kern);
    const LocalFit fit = fit_from_moments(mo);
    if (!fit.ok)
        raise(errc::insufficient_local_data,
              "local-linear window holds fewer than two distinct design points (series " +
                  std::to_string(label) + ", x=" + std::to_string(x) + ", h=" + std::to_string(h) +
                  "); consider a larger minimum bandwidth");
    const double f = density_from_moments(mo.s0, static_cast<std::size_t>(T), h, c.kappa0);
    if (!(f > 1e-6))
        raise(errc::degenerate_density, "estimated design density " + std::to_string(f) +
                                            " at (series " + std::to_string(label) + ", x=" +
                                            std::to_string(x) + ", h=" + std::to_string(h) +
                                            ") is at or below the 1e-6 floor");
    const ResidualSweep sweep = residual_sweep(view, h, kern);
    if (!sweep.failed_x.empty())
        raise(errc::insufficient_local_data,
              "local-linear fit degenerated at " + std::to_string(sweep.failed_x.size()) +
                  " sample design point(s) for series " + std::to_string(label) + ", h=" +
                  std::to_string(h) + "; consider a larger minimum bandwidth");
    double sigma2;
    if (mode == VarianceMode::homoskedastic) {
        sigma2 = sweep.sigma2;
    } else {
        const simd::Moments mo2 = window_moments_over(view, sweep.squared.data(), x, h, kern);
        sigma2 = mo2.r0 / mo2.s0;
    }
    return {fit.m, sigma2 / f};
}

}  // namespace

double psi_statistic(const TransformedPanel& tp, int i, int j, double x, double h,
                     const KernelProfile& kern, VarianceMode mode) {
    if (i < 0 || j < 0 || i >= tp.n || j >= tp.n)
        raise(errc::bad_config, "series index out of range in psi_statistic");
    const KernelConstants c = kernel_constants(kern, x, h);

    const SeriesView view_i = make_series_view(tp.x_row(i), tp.ystar_row(i));
    const SeriesView view_j = make_series_view(tp.x_row(j), tp.ystar_row(j));
    const SeriesPointValues a = series_point_values(view_i, i, tp.T, x, h, kern, c, mode);
    const SeriesPointValues b = series_point_values(view_j, j, tp.T, x, h, kern, c, mode);

    const double diff = a.m - b.m;
    if (diff == 0.0) return 0.0;
    const double den = std::sqrt((a.v + b.v) * c.s);
    if (!(den > 0.0))
        raise(errc::degenerate_variance,
              "zero variance against a nonzero curve contrast for series pair (" +
                  std::to_string(i) + ", " + std::to_string(j) + ") at x=" + std::to_string(x) +
                  ", h=" + std::to_string(h));
    const double sqrt_th = std::sqrt(static_cast<double>(tp.T) * h);
    return (sqrt_th * diff) / den;
}

MultiscaleEngine::MultiscaleEngine(const TransformedPanel& tp, const LocationScaleGrid& grid,
                                   const KernelProfile& kern, VarianceMode mode,
                                   DegeneracyPolicy policy, unsigned workers,
                                   std::vector<int> series_subset)
    : grid_(grid), kern_(kern), mode_(mode), workers_(workers), T_(tp.T) {
    if (grid_.size() == 0) raise(errc::empty_grid, "distance grid is empty");
    if (series_subset.empty()) {
        series_.resize(tp.n);
        std::iota(series_.begin(), series_.end(), 0);
    } else {
        for (int s : series_subset)
            if (s < 0 || s >= tp.n) raise(errc::bad_config, "series index out of range");
        series_ = std::move(series_subset);
    }

    const std::size_t G = grid_.size();
    std::vector<double> s_full(G), kappa0_full(G), lambda_full(G), sqrt_th_full(G);
    for (std::size_t g = 0; g < G; ++g) {
        const GridPoint& p = grid_.points[g];
        const KernelConstants c = kernel_constants(kern_, p.x, p.h);
        s_full[g] = c.s;
        kappa0_full[g] = c.kappa0;
        lambda_full[g] = lambda_correction(p.h);
        sqrt_th_full[g] = std::sqrt(static_cast<double>(T_) * p.h);
    }

    const std::size_t ns = series_.size();
    std::vector<std::vector<double>> m_full(ns), v_full(ns);
    std::vector<std::vector<std::uint8_t>> ok(ns);
    struct Failure {
        double x, h;
        errc kind;
    };
    std::vector<std::vector<Failure>> failures(ns);

    parallel_for(ns, workers_, [&](std::size_t si) {
        const int row = series_[si];
        const SeriesView view = make_series_view(tp.x_row(row), tp.ystar_row(row));
        m_full[si].assign(G, 0.0);
        v_full[si].assign(G, 0.0);
        ok[si].assign(G, 1);

        for (const BandwidthLevel& lvl : grid_.levels) {
            const double h = lvl.h;
            const ResidualSweep sweep = residual_sweep(view, h, kern_);
            if (!sweep.failed_x.empty()) {
                // no variance estimate at this bandwidth: the whole level is
                // unusable for this series
                for (std::size_t g = lvl.begin; g < lvl.end; ++g) ok[si][g] = 0;
                for (double fx : sweep.failed_x)
                    failures[si].push_back({fx, h, errc::insufficient_local_data});
                continue;
            }
            for (std::size_t g = lvl.begin; g < lvl.end; ++g) {
                const double x = grid_.points[g].x;
                const simd::Moments mo = window_moments(view, x, h, kern_);
                const LocalFit fit = fit_from_moments(mo);
                if (!fit.ok) {
                    ok[si][g] = 0;
                    failures[si].push_back({x, h, errc::insufficient_local_data});
                    continue;
                }
                const double f = density_from_moments(mo.s0, static_cast<std::size_t>(T_), h,
                                                      kappa0_full[g]);
                if (!(f > 1e-6)) {
                    ok[si][g] = 0;
                    failures[si].push_back({x, h, errc::degenerate_density});
                    continue;
                }
                double sigma2;
                if (mode_ == VarianceMode::homoskedastic) {
                    sigma2 = sweep.sigma2;
                } else {
                    const simd::Moments mo2 =
                        window_moments_over(view, sweep.squared.data(), x, h, kern_);
                    sigma2 = mo2.r0 / mo2.s0;
                }
                m_full[si][g] = fit.m;
                v_full[si][g] = sigma2 / f;
            }
        }
    });

    bool any_failure = false;
    for (const auto& fs : failures) any_failure |= !fs.empty();
    if (any_failure && policy == DegeneracyPolicy::strict) {
        std::ostringstream os;
        errc kind = errc::degenerate_density;
        std::size_t count = 0;
        for (std::size_t si = 0; si < ns; ++si) {
            for (const Failure& f : failures[si]) {
                os << (count ? "; " : "") << "(series " << series_[si] << ", x=" << f.x
                   << ", h=" << f.h << ", "
                   << (f.kind == errc::degenerate_density ? "density" : "window") << ")";
                if (f.kind == errc::insufficient_local_data) kind = errc::insufficient_local_data;
                ++count;
            }
        }
        raise(kind, "distance grid unusable at " + std::to_string(count) + " point(s): " +
                        os.str() + "; consider a larger minimum bandwidth");
    }

    // points every series can use; under strict that is all of them
    kept_points_.reserve(G);
    for (std::size_t g = 0; g < G; ++g) {
        bool keep = true;
        for (std::size_t si = 0; si < ns && keep; ++si) keep = ok[si][g] != 0;
        if (keep) kept_points_.push_back(g);
    }
    if (kept_points_.empty())
        raise(errc::all_points_degenerate,
              "no grid point is usable for every series under the lenient policy");

    // compact the per-point constants and per-series stats; kept_points_ is
    // ascending, so each bandwidth level stays a contiguous slice
    const std::size_t K = kept_points_.size();
    s_.resize(K);
    sqrt_th_.resize(K);
    lambda_.resize(K);
    for (std::size_t k = 0; k < K; ++k) {
        const std::size_t g = kept_points_[k];
        s_[k] = s_full[g];
        sqrt_th_[k] = sqrt_th_full[g];
        lambda_[k] = lambda_full[g];
    }
    slices_.resize(grid_.levels.size());
    for (std::size_t li = 0; li < grid_.levels.size(); ++li) {
        const BandwidthLevel& lvl = grid_.levels[li];
        const auto lo = std::lower_bound(kept_points_.begin(), kept_points_.end(), lvl.begin);
        const auto hi = std::lower_bound(lo, kept_points_.end(), lvl.end);
        slices_[li] = {lvl.h, static_cast<std::size_t>(lo - kept_points_.begin()),
                       static_cast<std::size_t>(hi - kept_points_.begin())};
    }
    stats_m_.resize(ns);
    stats_v_.resize(ns);
    for (std::size_t si = 0; si < ns; ++si) {
        stats_m_[si].resize(K);
        stats_v_[si].resize(K);
        for (std::size_t k = 0; k < K; ++k) {
            stats_m_[si][k] = m_full[si][kept_points_[k]];
            stats_v_[si][k] = v_full[si][kept_points_[k]];
        }
    }
}

DistanceMatrix MultiscaleEngine::pair_matrix(std::size_t begin, std::size_t end, double diag,
                                             std::uint64_t fingerprint) const {
    const int ns = n_series();
    DistanceMatrix dm;
    dm.n = ns;
    dm.grid_fingerprint = fingerprint;
    dm.d.assign(static_cast<std::size_t>(ns) * ns, diag);

    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(static_cast<std::size_t>(ns) * (ns - 1) / 2);
    for (int i = 0; i < ns; ++i)
        for (int j = i + 1; j < ns; ++j) pairs.emplace_back(i, j);

    const auto& kernels = simd::active_kernels();
    parallel_for(pairs.size(), workers_, [&](std::size_t p) {
        const auto [i, j] = pairs[p];
        const double v = kernels.pair_max_stat(
            stats_m_[i].data() + begin, stats_m_[j].data() + begin, stats_v_[i].data() + begin,
            stats_v_[j].data() + begin, s_.data() + begin, sqrt_th_.data() + begin,
            lambda_.data() + begin, end - begin);
        dm.d[static_cast<std::size_t>(i) * ns + j] = v;
        dm.d[static_cast<std::size_t>(j) * ns + i] = v;
    });

    std::ostringstream bad;
    std::size_t bad_count = 0;
    for (const auto& [i, j] : pairs) {
        if (!std::isfinite(dm.at(i, j))) {
            bad << (bad_count ? ", " : "") << "(" << series_[i] << ", " << series_[j] << ")";
            ++bad_count;
        }
    }
    if (bad_count)
        raise(errc::degenerate_variance,
              "zero variance against a nonzero curve contrast for series pair(s) " + bad.str());
    return dm;
}

DistanceMatrix MultiscaleEngine::full_matrix() const {
    // the largest usable bandwidth defines the diagonal (equals grid h_max
    // unless the lenient policy dropped that whole level)
    double h_eff = 0.0;
    for (const LevelSlice& sl : slices_)
        if (sl.end > sl.begin) h_eff = sl.h;
    return pair_matrix(0, kept_points_.size(), -lambda_correction(h_eff),
                       run_fingerprint(grid_, kern_, mode_));
}

DistanceMatrix MultiscaleEngine::level_matrix(double h) const {
    for (std::size_t li = 0; li < slices_.size(); ++li) {
        if (grid_.levels[li].h == h) {
            const LevelSlice& sl = slices_[li];
            if (sl.end <= sl.begin)
                raise(errc::all_points_degenerate,
                      "no usable grid point at bandwidth " + std::to_string(h));
            std::vector<double> xs;
            const BandwidthLevel& lvl = grid_.levels[li];
            xs.reserve(lvl.end - lvl.begin);
            for (std::size_t g = lvl.begin; g < lvl.end; ++g) xs.push_back(grid_.points[g].x);
            const LocationScaleGrid sub = make_grid(std::move(xs), {h});
            return pair_matrix(sl.begin, sl.end, -lambda_correction(h),
                               run_fingerprint(sub, kern_, mode_));
        }
    }
    raise(errc::bad_bandwidth, "bandwidth " + std::to_string(h) + " is not a grid level");
}

double multiscale_distance(const TransformedPanel& tp, int i, int j, const LocationScaleGrid& grid,
                           const KernelProfile& kern, VarianceMode mode, DegeneracyPolicy policy) {
    if (i < 0 || j < 0 || i >= tp.n || j >= tp.n)
        raise(errc::bad_config, "series index out of range in multiscale_distance");
    const MultiscaleEngine engine(tp, grid, kern, mode, policy, 1,
                                  i == j ? std::vector<int>{i} : std::vector<int>{i, j});
    const DistanceMatrix dm = engine.full_matrix();
    return i == j ? dm.at(0, 0) : dm.at(0, 1);
}

DistanceMatrix distance_matrix(const TransformedPanel& tp, const LocationScaleGrid& grid,
                               const KernelProfile& kern, VarianceMode mode,
                               DegeneracyPolicy policy, unsigned workers) {
    return MultiscaleEngine(tp, grid, kern, mode, policy, workers).full_matrix();
}

void write_distances_csv(const DistanceMatrix& dm, const std::string& path) {
    std::ofstream out(path);
    if (!out) raise(errc::io_error, "cannot write '" + path + "'");
    out << "i,j,d\n";
    out.precision(17);
    for (int i = 0; i < dm.n; ++i)
        for (int j = i + 1; j < dm.n; ++j) out << i << ',' << j << ',' << dm.at(i, j) << '\n';
    if (!out) raise(errc::io_error, "failed writing '" + path + "'");
}

void write_distances_meta(const DistanceMatrix& dm, const LocationScaleGrid& grid,
                          const KernelProfile& kern, VarianceMode mode,
                          const std::vector<std::string>& series_ids, const std::string& path) {
    nlohmann::json meta;
    char fp[32];
    std::snprintf(fp, sizeof(fp), "%016llx",
                  static_cast<unsigned long long>(dm.grid_fingerprint));
    meta["fingerprint"] = fp;
    meta["kernel"] = kern.name;
    meta["variance_mode"] = to_string(mode);
    meta["n"] = dm.n;
    meta["diagonal"] = dm.diagonal_value();
    meta["series_ids"] = series_ids;
    meta["grid"]["h_min"] = grid.h_min;
    meta["grid"]["h_max"] = grid.h_max;
    meta["grid"]["size"] = grid.size();
    auto& pts = meta["grid"]["points"] = nlohmann::json::array();
    for (const GridPoint& p : grid.points) pts.push_back({p.x, p.h});

    std::ofstream out(path);
    if (!out) raise(errc::io_error, "cannot write '" + path + "'");
    out << meta.dump(2) << '\n';
    if (!out) raise(errc::io_error, "failed writing '" + path + "'");
}

}  // namespace curvecluster
