// NEON variants for aarch64, mirroring the AVX2 file two lanes at a time.
// NEON is baseline on aarch64, so no extra compile flags or CPU probing.

#include "curvecluster/simd.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

#include <cmath>
#include <limits>

namespace curvecluster::simd {

namespace {

inline double weight_of(double t_pos, KernId kern) {
    return kern == KernId::epanechnikov ? 0.75 * t_pos : 0.9375 * (t_pos * t_pos);
}

Moments local_moments_neon(const double* xs, const double* ys, std::size_t count, double x0,
                           double inv_h, KernId kern) {
    const float64x2_t vx0 = vdupq_n_f64(x0);
    const float64x2_t vinvh = vdupq_n_f64(inv_h);
    const float64x2_t vone = vdupq_n_f64(1.0);
    const float64x2_t vzero = vdupq_n_f64(0.0);
    const float64x2_t vc = vdupq_n_f64(kern == KernId::epanechnikov ? 0.75 : 0.9375);
    const bool quartic = kern == KernId::biweight;

    float64x2_t s0 = vzero, s1 = vzero, s2 = vzero, r0 = vzero, r1 = vzero;
    std::int64_t n_inside = 0;

    std::size_t t = 0;
    for (; t + 2 <= count; t += 2) {
        const float64x2_t x = vld1q_f64(xs + t);
        const float64x2_t y = vld1q_f64(ys + t);
        const float64x2_t u = vmulq_f64(vsubq_f64(x, vx0), vinvh);
        const float64x2_t shape = vfmsq_f64(vone, u, u);  // 1 - u^2
        const uint64x2_t inside = vcgtq_f64(shape, vzero);
        const float64x2_t tpos =
            vreinterpretq_f64_u64(vandq_u64(vreinterpretq_u64_f64(shape), inside));
        float64x2_t k = vmulq_f64(vc, tpos);
        if (quartic) k = vmulq_f64(k, tpos);
        const float64x2_t ku = vmulq_f64(k, u);
        s0 = vaddq_f64(s0, k);
        s1 = vaddq_f64(s1, ku);
        s2 = vfmaq_f64(s2, ku, u);
        r0 = vfmaq_f64(r0, k, y);
        r1 = vfmaq_f64(r1, ku, y);
        n_inside += (vgetq_lane_u64(inside, 0) ? 1 : 0) + (vgetq_lane_u64(inside, 1) ? 1 : 0);
    }

    Moments m;
    m.s0 = vgetq_lane_f64(s0, 0) + vgetq_lane_f64(s0, 1);
    m.s1 = vgetq_lane_f64(s1, 0) + vgetq_lane_f64(s1, 1);
    m.s2 = vgetq_lane_f64(s2, 0) + vgetq_lane_f64(s2, 1);
    m.r0 = vgetq_lane_f64(r0, 0) + vgetq_lane_f64(r0, 1);
    m.r1 = vgetq_lane_f64(r1, 0) + vgetq_lane_f64(r1, 1);
    m.n_inside = n_inside;
    for (; t < count; ++t) {
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

double pair_max_stat_neon(const double* mi, const double* mj, const double* vi, const double* vj,
                          const double* s, const double* sqrt_th, const double* lambda,
                          std::size_t count) {
    const float64x2_t vzero = vdupq_n_f64(0.0);
    float64x2_t vbest = vdupq_n_f64(-std::numeric_limits<double>::infinity());

    std::size_t g = 0;
    for (; g + 2 <= count; g += 2) {
        const float64x2_t diff = vsubq_f64(vld1q_f64(mi + g), vld1q_f64(mj + g));
        const float64x2_t ad = vabsq_f64(diff);
        const float64x2_t nu =
            vmulq_f64(vaddq_f64(vld1q_f64(vi + g), vld1q_f64(vj + g)), vld1q_f64(s + g));
        const float64x2_t den = vsqrtq_f64(nu);
        const float64x2_t num = vmulq_f64(vld1q_f64(sqrt_th + g), ad);
        const float64x2_t lam = vld1q_f64(lambda + g);
        float64x2_t val = vsubq_f64(vdivq_f64(num, den), lam);
        const uint64x2_t zero_num = vceqq_f64(ad, vzero);
        val = vbslq_f64(zero_num, vnegq_f64(lam), val);
        vbest = vmaxq_f64(vbest, val);
    }

    double best = vgetq_lane_f64(vbest, 0);
    if (vgetq_lane_f64(vbest, 1) > best) best = vgetq_lane_f64(vbest, 1);
    for (; g < count; ++g) {
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

double pair_max_gauss_neon(const double* zi, const double* zj, const double* lambda,
                           std::size_t count) {
    float64x2_t vbest = vdupq_n_f64(-std::numeric_limits<double>::infinity());

    std::size_t l = 0;
    for (; l + 2 <= count; l += 2) {
        const float64x2_t diff = vsubq_f64(vld1q_f64(zi + l), vld1q_f64(zj + l));
        const float64x2_t val = vsubq_f64(vabsq_f64(diff), vld1q_f64(lambda + l));
        vbest = vmaxq_f64(vbest, val);
    }

    double best = vgetq_lane_f64(vbest, 0);
    if (vgetq_lane_f64(vbest, 1) > best) best = vgetq_lane_f64(vbest, 1);
    for (; l < count; ++l) {
        const double val = std::fabs(zi[l] - zj[l]) - lambda[l];
        if (val > best) best = val;
    }
    return best;
}

}  // namespace

const Kernels& neon_kernels() {
    static const Kernels k{local_moments_neon, pair_max_stat_neon, pair_max_gauss_neon, "neon"};
    return k;
}

}  // namespace curvecluster::simd

#endif  // aarch64
