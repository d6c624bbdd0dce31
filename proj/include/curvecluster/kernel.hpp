#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "curvecluster/poly.hpp"
#include "curvecluster/simd.hpp"

namespace curvecluster {

// A second-order kernel on [-1, 1].  Builtin profiles carry their polynomial
// form (exact moment/covariance integrals) and a SIMD id (vectorized window
// sums); custom profiles are evaluated through `eval` and integrated by
// adaptive quadrature.
struct KernelProfile {
    std::string name;
    std::function<double(double)> eval;
    double support_radius = 1.0;  // fixed at 1 throughout the library
    bool has_poly = false;
    Poly poly;
    int simd_id = -1;
};

const KernelProfile& epanechnikov();
const KernelProfile& biweight();
KernelProfile custom_kernel(std::string name, std::function<double(double)> eval);
const KernelProfile& kernel_by_name(const std::string& name);  // "epanechnikov" | "biweight"

// Boundary-aware kernel functionals at a location/bandwidth pair.  With
// A = [max(-1, -x/h), min(1, (1-x)/h)] the truncated support in normalized
// offsets:
//   kappa_l = integral over A of K(u) u^l du
//   rho     = integral over A of K(u)^2 (kappa2 - kappa1 u)^2 du
//   s       = rho / (kappa0 kappa2 - kappa1^2)^2
// In the interior (h <= x <= 1-h) kappa0 = 1 and kappa1 = 0, so s reduces to
// the usual squared-L2 constant of the equivalent local-linear kernel.
struct KernelConstants {
    double kappa0, kappa1, kappa2;
    double rho;
    double s;
};

KernelConstants kernel_constants(const KernelProfile& kern, double x, double h);

// One series' observations sorted by design point (ties kept in input order),
// the layout every windowed loop runs over.
struct SeriesView {
    std::vector<double> x;
    std::vector<double> y;

    std::size_t size() const { return x.size(); }
    // [lo, hi) covering design points in [x0 - h, x0 + h]
    std::pair<std::size_t, std::size_t> window(double x0, double h) const;
};

SeriesView make_series_view(std::span<const double> x, std::span<const double> y);

// Raw kernel-weighted window sums around x0 (see simd::Moments).  Dispatches
// to the active SIMD variant for builtin kernels, scalar fallback otherwise.
simd::Moments window_moments(const SeriesView& v, double x0, double h, const KernelProfile& kern);
// Same sums but with a caller-chosen response array (aligned with v.x).
simd::Moments window_moments_over(const SeriesView& v, const double* ys, double x0, double h,
                                  const KernelProfile& kern);

// Local-linear fit value assembled from raw sums; ok = false when fewer than
// two distinct design points carry weight.
struct LocalFit {
    double m = 0.0;
    bool ok = false;
};
LocalFit fit_from_moments(const simd::Moments& mo);

// f-hat from the raw weight sum: s0 / (T h kappa0).  Inline so the one-shot
// estimators and the batch engine share the exact expression.
inline double density_from_moments(double s0, std::size_t T, double h, double kappa0) {
    return s0 / (static_cast<double>(T) * h * kappa0);
}

// Local-linear estimate of the regression function at x.  Throws
// Error(errc::insufficient_local_data) when the window does not identify a
// line; `series_label` (when >= 0) is included in the message so batch
// callers can name the offending series.
double local_linear_fit(std::span<const double> ystar_row, std::span<const double> x_row, double x,
                        double h, const KernelProfile& kern, int series_label = -1);
double local_linear_fit(const SeriesView& v, double x, double h, const KernelProfile& kern,
                        int series_label = -1);

// Boundary-corrected kernel density estimate f-hat(x) = S0 / kappa0 with
// S0 = (T h)^-1 sum K((X_t - x)/h).  Always finite and >= 0.
double density_estimate(std::span<const double> x_row, double x, double h,
                        const KernelProfile& kern);
double density_estimate(const SeriesView& v, double x, double h, const KernelProfile& kern);

// Mean squared residual of the local-linear fit evaluated at the sample
// design points: the homoskedastic error-variance estimate at bandwidth h.
double variance_homoskedastic(std::span<const double> ystar_row, std::span<const double> x_row,
                              double h, const KernelProfile& kern, int series_label = -1);

// Kernel-weighted (Nadaraya-Watson) average of squared residuals at x: the
// conditional error-variance estimate sigma2(x) at bandwidth h.
double variance_conditional(std::span<const double> ystar_row, std::span<const double> x_row,
                            double x, double h, const KernelProfile& kern, int series_label = -1);

// Batch residual machinery shared by the public variance estimators and the
// pairwise-distance engine: local-linear residuals at every sample point of a
// sorted view, with failing sample locations collected instead of thrown.
struct ResidualSweep {
    std::vector<double> squared;    // squared residuals, aligned with view order
    double sigma2 = 0.0;            // mean of `squared`
    std::vector<double> failed_x;   // sample design points whose fit degenerated
};
ResidualSweep residual_sweep(const SeriesView& v, double h, const KernelProfile& kern);

}  // namespace curvecluster
