#include "curvecluster/simd.hpp"

#include <cmath>
#include <limits>

namespace curvecluster::simd {

namespace {

// Both builtin kernels vanish continuously at |u| = 1, so clamping the
// un-normalized shape t = 1 - u^2 at zero evaluates the kernel for *any* u:
//   epanechnikov  K(u) = 0.75 * max(0, t)
//   biweight      K(u) = 0.9375 * max(0, t)^2
// This keeps the windowed loops branch-free and makes window-boundary
// handling exact (points at distance exactly h get weight 0).
inline double weight_of(double t_pos, KernId kern) {
    return kern == KernId::epanechnikov ? 0.75 * t_pos : 0.9375 * (t_pos * t_pos);
}

Moments local_moments_scalar(const double* xs, const double* ys, std::size_t count, double x0,
                             double inv_h, KernId kern) {
    Moments m;
    for (std::size_t t = 0; t < count; ++t) {
        const double u = (xs[t] - x0) * inv_h;
        const double shape = 1.0 - u * u;
        if (shape <= 0.0) continue;
        const double k = weight_of(shape, kern);
        const double ku = k * u;
        m.s0 += k;
        m.s1 += ku;
        m.s2 += ku * u;
        m.r0 += k * ys[t];
        m.r1 += ku * ys[t];
        ++m.n_inside;
    }
    return m;
}

double pair_max_stat_scalar(const double* mi, const double* mj, const double* vi, const double* vj,
                            const double* s, const double* sqrt_th, const double* lambda,
                            std::size_t count) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < count; ++g) {
        const double ad = std::fabs(mi[g] - mj[g]);
        double val;
        if (ad == 0.0) {
            val = -lambda[g];
        } else {
            const double den = std::sqrt((vi[g] + vj[g]) * s[g]);
            val = (sqrt_th[g] * ad) / den - lambda[g];
        }
        if (val > best) best = val;
    }
    return best;
}

double pair_max_gauss_scalar(const double* zi, const double* zj, const double* lambda,
                             std::size_t count) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < count; ++l) {
        const double val = std::fabs(zi[l] - zj[l]) - lambda[l];
        if (val > best) best = val;
    }
    return best;
}

}  // namespace

const Kernels& scalar_kernels() {
    static const Kernels k{local_moments_scalar, pair_max_stat_scalar, pair_max_gauss_scalar,
                           "scalar"};
    return k;
}

}  // namespace curvecluster::simd
