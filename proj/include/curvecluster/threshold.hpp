#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Dense>

#include "curvecluster/kernel.hpp"
#include "curvecluster/multiscale.hpp"

namespace curvecluster {

// Everything needed to simulate the null distribution of the clustering
// statistic on a grid: the covariance of the limiting Gaussian field across
// grid points (one field per series, iid over series), its Cholesky-type
// factor, and the per-point scale penalties.
struct GaussianDesign {
    LocationScaleGrid grid;
    Eigen::MatrixXd sigma;          // PSD-repaired covariance, dim = grid size
    Eigen::MatrixXd chol;           // lower factor: chol * chol^T = sigma
    std::vector<double> lambda;     // lambda(2h) per grid point
    std::uint64_t fingerprint = 0;  // grid_kernel_fingerprint of (grid, kernel)

    // diagnostics from the build
    double max_diag_error = 0.0;        // max |raw diagonal - 0.5|
    double min_eig_before_clip = 0.0;   // smallest eigenvalue of the raw matrix
};

// Correlation of the normalized local-linear contrast between two
// location/bandwidth pairs.  Exact polynomial integration for builtin
// kernels, adaptive quadrature otherwise; exactly zero when the smoothing
// windows do not overlap.  The diagonal is 1/2 by construction (two
// independent series each contribute half the variance of a contrast).
double covariance_entry(const KernelProfile& kern, double x1, double h1,
                        const KernelConstants& c1, double x2, double h2,
                        const KernelConstants& c2);

// Raw (pre-repair) covariance over the grid; entry (p,q) averaged with (q,p)
// is what build_covariance symmetrizes.
Eigen::MatrixXd covariance_raw(const LocationScaleGrid& grid, const KernelProfile& kern);

// Full design: raw matrix, diagonal verification (each raw diagonal must be
// within 1e-8 of 0.5), transpose symmetrization, eigenvalue clip at zero plus
// 1e-10 jitter, and a Cholesky factor of the repaired matrix.
GaussianDesign build_covariance(const LocationScaleGrid& grid, const KernelProfile& kern);

// Monte Carlo (1-alpha)... rather: order statistic ceil(alpha*reps) of the
// simulated null statistic
//   B = max over series pairs i<j of max over grid of |zeta_i - zeta_j| - lambda
// with zeta_1..zeta_n iid N(0, sigma).  Seeded per replication, so the value
// is a pure function of (design, n_series, alpha, reps, seed).
double quantile_qn(const GaussianDesign& design, int n_series, double alpha, int reps,
                   std::uint64_t seed, unsigned workers = 1);

// Raw-covariance cache (the expensive integration step).  Files are keyed by
// the (grid, kernel) fingerprint; a mismatched or unreadable file is treated
// as a miss.  save returns false when the file cannot be written.
bool load_covariance_cache(const std::string& path, std::uint64_t fingerprint,
                           Eigen::MatrixXd& out);
bool save_covariance_cache(const std::string& path, std::uint64_t fingerprint,
                           const Eigen::MatrixXd& sigma);
std::string covariance_cache_file(const std::string& cache_dir, std::uint64_t fingerprint);

// build_covariance with a read-through cache in cache_dir (empty dir or
// use_cache = false computes from scratch; stale writes are best-effort).
GaussianDesign build_covariance_cached(const LocationScaleGrid& grid, const KernelProfile& kern,
                                       const std::string& cache_dir, bool use_cache);

}  // namespace curvecluster
