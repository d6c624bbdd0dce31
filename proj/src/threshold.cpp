#include "curvecluster/threshold.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <vector>

#include "curvecluster/errors.hpp"
#include "curvecluster/parallel.hpp"
#include "curvecluster/quadrature.hpp"
#include "curvecluster/rng.hpp"

namespace curvecluster {

double covariance_entry(const KernelProfile& kern, double x1, double h1, const KernelConstants& c1,
                        double x2, double h2, const KernelConstants& c2) {
    // Zero gate evaluated in the shared x coordinate, where touching window
    // endpoints compare exactly: a zero-measure overlap means a structurally
    // zero correlation.  The u-space bounds below can round an exactly
    // touching pair into an ulp-wide sliver, which would then integrate to a
    // spurious nonzero of order 1e-17.
    const double w_lo = std::max(std::max(0.0, x1 - h1), std::max(0.0, x2 - h2));
    const double w_hi = std::min(std::min(1.0, x1 + h1), std::min(1.0, x2 + h2));
    if (!(w_lo < w_hi)) return 0.0;

    // With u the normalized offset at (x1, h1), the matching offset at
    // (x2, h2) is v = alpha u + beta.  The integrand couples the two
    // equivalent local-linear kernels K(u)(kappa2 - kappa1 u) and
    // K(v)(kappa2' - kappa1' v); support ends of either kernel and the
    // boundary truncation of the first one clip the u-interval.
    const double alpha = h1 / h2;
    const double beta = (x1 - x2) / h2;

    const double lo = std::max({-1.0, -x1 / h1, (-1.0 - beta) / alpha});
    const double hi = std::min({1.0, (1.0 - x1) / h1, (1.0 - beta) / alpha});
    if (!(lo < hi)) return 0.0;  // disjoint smoothing windows

    if (!(c1.rho > 0.0) || !(c2.rho > 0.0))
        raise(errc::quadrature_failure, "nonpositive rho in covariance entry");
    const double pref = std::sqrt(h1 / h2) / (2.0 * std::sqrt(c1.rho * c2.rho));

    if (kern.has_poly) {
        const Poly ku = kern.poly;
        const Poly kv = kern.poly.compose_linear(alpha, beta);
        const Poly lin_u({c1.kappa2, -c1.kappa1});
        const Poly lin_v = Poly({c2.kappa2, -c2.kappa1}).compose_linear(alpha, beta);
        // association mirrors the rho computation in kernel_constants, so the
        // diagonal comes out as rho/(2 rho) up to one rounding
        const Poly integrand = ku * kv * lin_u * lin_v;
        return pref * integrand.integral(lo, hi);
    }

    const auto f = [&](double u) {
        const double v = alpha * u + beta;
        if (!(v > -1.0 && v < 1.0)) return 0.0;
        return kern.eval(u) * (c1.kappa2 - c1.kappa1 * u) * kern.eval(v) *
               (c2.kappa2 - c2.kappa1 * v);
    };
    // split at the second kernel's support edges so each piece is smooth
    std::vector<double> cuts{lo, hi};
    for (double edge : {(-1.0 - beta) / alpha, (1.0 - beta) / alpha})
        if (edge > lo && edge < hi) cuts.push_back(edge);
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
        total += integrate_adaptive(f, cuts[k], cuts[k + 1], 1e-8);
    return pref * total;
}

Eigen::MatrixXd covariance_raw(const LocationScaleGrid& grid, const KernelProfile& kern) {
    const std::size_t dim = grid.size();
    if (dim == 0) raise(errc::empty_grid, "covariance grid is empty");

    std::vector<KernelConstants> consts(dim);
    for (std::size_t g = 0; g < dim; ++g)
        consts[g] = kernel_constants(kern, grid.points[g].x, grid.points[g].h);

    Eigen::MatrixXd raw(dim, dim);
    for (std::size_t p = 0; p < dim; ++p) {
        const GridPoint& gp = grid.points[p];
        for (std::size_t q = 0; q < dim; ++q) {
            const GridPoint& gq = grid.points[q];
            raw(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q)) =
                covariance_entry(kern, gp.x, gp.h, consts[p], gq.x, gq.h, consts[q]);
        }
    }
    return raw;
}

namespace {

GaussianDesign finish_design(const LocationScaleGrid& grid, const KernelProfile& kern,
                             const Eigen::MatrixXd& raw) {
    const Eigen::Index dim = raw.rows();
    GaussianDesign design;
    design.grid = grid;
    design.fingerprint = grid_kernel_fingerprint(grid, kern);
    design.lambda.resize(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g)
        design.lambda[g] = lambda_correction(grid.points[g].h);

    design.max_diag_error = (raw.diagonal().array() - 0.5).abs().maxCoeff();
    if (design.max_diag_error > 1e-8)
        raise(errc::quadrature_failure,
              "covariance diagonal is off by " + std::to_string(design.max_diag_error) +
                  " from 0.5; integration is untrustworthy");

    const Eigen::MatrixXd sym = 0.5 * (raw + raw.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    if (es.info() != Eigen::Success)
        raise(errc::factorization_failure, "eigendecomposition of the covariance failed");
    design.min_eig_before_clip = es.eigenvalues().minCoeff();

    const Eigen::VectorXd clipped =
        es.eigenvalues().cwiseMax(0.0).array() + 1e-10;  // PSD repair + jitter
    design.sigma = es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().transpose();

    Eigen::LLT<Eigen::MatrixXd> llt(design.sigma);
    if (llt.info() != Eigen::Success)
        raise(errc::factorization_failure, "Cholesky of the repaired covariance failed");
    design.chol = Eigen::MatrixXd(llt.matrixL());
    (void)dim;
    return design;
}

}  // namespace

GaussianDesign build_covariance(const LocationScaleGrid& grid, const KernelProfile& kern) {
    return finish_design(grid, kern, covariance_raw(grid, kern));
}

double quantile_qn(const GaussianDesign& design, int n_series, double alpha, int reps,
                   std::uint64_t seed, unsigned workers) {
    if (n_series < 2)
        raise(errc::too_few_series, "quantile needs at least 2 series, got " +
                                        std::to_string(n_series));
    if (!(alpha > 0.0 && alpha < 1.0))
        raise(errc::bad_level, "confidence level " + std::to_string(alpha) + " outside (0, 1)");
    if (reps < 1) raise(errc::bad_reps, "need at least 1 Monte Carlo replication");
    const Eigen::Index dim = design.sigma.rows();
    if (dim == 0 || design.lambda.size() != static_cast<std::size_t>(dim))
        raise(errc::bad_config, "Gaussian design is inconsistent");

    std::vector<double> stats(static_cast<std::size_t>(reps));
    const auto& kernels = simd::active_kernels();

    parallel_for(static_cast<std::size_t>(reps), workers, [&](std::size_t r) {
        Rng rng(derive_seed(seed, r));
        Eigen::MatrixXd z(dim, n_series);
        for (int i = 0; i < n_series; ++i)
            for (Eigen::Index l = 0; l < dim; ++l) z(l, i) = rng.normal();

        Eigen::MatrixXd fields(dim, n_series);
        fields.noalias() = design.chol.triangularView<Eigen::Lower>() * z;

        double best = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < n_series; ++i) {
            for (int j = i + 1; j < n_series; ++j) {
                const double v =
                    kernels.pair_max_gauss(fields.col(i).data(), fields.col(j).data(),
                                           design.lambda.data(), static_cast<std::size_t>(dim));
                if (v > best) best = v;
            }
        }
        stats[r] = best;
    });

    std::sort(stats.begin(), stats.end());
    const int rank = static_cast<int>(std::ceil(alpha * reps));  // 1-based order statistic
    const int idx = std::clamp(rank - 1, 0, reps - 1);
    return stats[static_cast<std::size_t>(idx)];
}

namespace {
constexpr std::uint64_t kCacheMagic = 0x31303056304343ULL;  // "CC0V001"
}

std::string covariance_cache_file(const std::string& cache_dir, std::uint64_t fingerprint) {
    char name[40];
    std::snprintf(name, sizeof(name), "cov_%016llx.bin",
                  static_cast<unsigned long long>(fingerprint));
    return (std::filesystem::path(cache_dir) / name).string();
}

bool load_covariance_cache(const std::string& path, std::uint64_t fingerprint,
                           Eigen::MatrixXd& out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return false;
    std::uint64_t magic = 0, fp = 0, dim = 0;
    in.read(reinterpret_cast<char*>(&magic), sizeof(magic));
    in.read(reinterpret_cast<char*>(&fp), sizeof(fp));
    in.read(reinterpret_cast<char*>(&dim), sizeof(dim));
    if (!in || magic != kCacheMagic || fp != fingerprint || dim == 0 || dim > 1000000) return false;
    Eigen::MatrixXd m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(dim * dim * sizeof(double)));
    if (!in) return false;
    out = std::move(m);
    return true;
}

bool save_covariance_cache(const std::string& path, std::uint64_t fingerprint,
                           const Eigen::MatrixXd& sigma) {
    std::error_code ec;
    const auto dir = std::filesystem::path(path).parent_path();
    if (!dir.empty()) std::filesystem::create_directories(dir, ec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) return false;
    const std::uint64_t dim = static_cast<std::uint64_t>(sigma.rows());
    out.write(reinterpret_cast<const char*>(&kCacheMagic), sizeof(kCacheMagic));
    out.write(reinterpret_cast<const char*>(&fingerprint), sizeof(fingerprint));
    out.write(reinterpret_cast<const char*>(&dim), sizeof(dim));
    out.write(reinterpret_cast<const char*>(sigma.data()),
              static_cast<std::streamsize>(dim * dim * sizeof(double)));
    return static_cast<bool>(out);
}

GaussianDesign build_covariance_cached(const LocationScaleGrid& grid, const KernelProfile& kern,
                                       const std::string& cache_dir, bool use_cache) {
    if (cache_dir.empty() || !use_cache) return build_covariance(grid, kern);
    const std::uint64_t fp = grid_kernel_fingerprint(grid, kern);
    const std::string file = covariance_cache_file(cache_dir, fp);
    Eigen::MatrixXd raw;
    if (load_covariance_cache(file, fp, raw) &&
        raw.rows() == static_cast<Eigen::Index>(grid.size()))
        return finish_design(grid, kern, raw);
    raw = covariance_raw(grid, kern);
    save_covariance_cache(file, fp, raw);  // best effort
    return finish_design(grid, kern, raw);
}

}  // namespace curvecluster
