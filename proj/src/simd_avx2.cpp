// AVX2 + FMA variants.  This translation unit is compiled with
// -mavx2 -mfma (see src/CMakeLists.txt); nothing here runs unless the
// dispatcher verified CPU support first.

#include "curvecluster/simd.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>
#include <limits>

namespace curvecluster::simd {

namespace {

inline double hsum4(__m256d v) {
    // Fixed-order lane sum so results are reproducible run to run.
    alignas(32) double lane[4];
    _mm256_store_pd(lane, v);
    return ((lane[0] + lane[1]) + lane[2]) + lane[3];
}

inline double hmax4(__m256d v) {
    alignas(32) double lane[4];
    _mm256_store_pd(lane, v);
    double best = lane[0];
    if (lane[1] > best) best = lane[1];
    if (lane[2] > best) best = lane[2];
    if (lane[3] > best) best = lane[3];
    return best;
}

inline double weight_of(double t_pos, KernId kern) {
    return kern == KernId::epanechnikov ? 0.75 * t_pos : 0.9375 * (t_pos * t_pos);
}

Moments local_moments_avx2(const double* xs, const double* ys, std::size_t count, double x0,
                           double inv_h, KernId kern) {
    const __m256d vx0 = _mm256_set1_pd(x0);
    const __m256d vinvh = _mm256_set1_pd(inv_h);
    const __m256d vone = _mm256_set1_pd(1.0);
    const __m256d vzero = _mm256_setzero_pd();
    const __m256d vc =
        _mm256_set1_pd(kern == KernId::epanechnikov ? 0.75 : 0.9375);
    const bool quartic = kern == KernId::biweight;

    __m256d s0 = vzero, s1 = vzero, s2 = vzero, r0 = vzero, r1 = vzero;
    std::int64_t n_inside = 0;

    std::size_t t = 0;
    for (; t + 4 <= count; t += 4) {
        const __m256d x = _mm256_loadu_pd(xs + t);
        const __m256d y = _mm256_loadu_pd(ys + t);
        const __m256d u = _mm256_mul_pd(_mm256_sub_pd(x, vx0), vinvh);
        const __m256d shape = _mm256_fnmadd_pd(u, u, vone);  // 1 - u^2
        const __m256d inside = _mm256_cmp_pd(shape, vzero, _CMP_GT_OQ);
        const __m256d tpos = _mm256_and_pd(shape, inside);   // 0 outside the support
        __m256d k = _mm256_mul_pd(vc, tpos);
        if (quartic) k = _mm256_mul_pd(k, tpos);
        const __m256d ku = _mm256_mul_pd(k, u);
        s0 = _mm256_add_pd(s0, k);
        s1 = _mm256_add_pd(s1, ku);
        s2 = _mm256_fmadd_pd(ku, u, s2);
        r0 = _mm256_fmadd_pd(k, y, r0);
        r1 = _mm256_fmadd_pd(ku, y, r1);
        n_inside += __builtin_popcount(static_cast<unsigned>(_mm256_movemask_pd(inside)));
    }

    Moments m;
    m.s0 = hsum4(s0);
    m.s1 = hsum4(s1);
    m.s2 = hsum4(s2);
    m.r0 = hsum4(r0);
    m.r1 = hsum4(r1);
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

double pair_max_stat_avx2(const double* mi, const double* mj, const double* vi, const double* vj,
                          const double* s, const double* sqrt_th, const double* lambda,
                          std::size_t count) {
    const __m256d vzero = _mm256_setzero_pd();
    const __m256d sign = _mm256_set1_pd(-0.0);
    __m256d vbest = _mm256_set1_pd(-std::numeric_limits<double>::infinity());

    std::size_t g = 0;
    for (; g + 4 <= count; g += 4) {
        const __m256d diff = _mm256_sub_pd(_mm256_loadu_pd(mi + g), _mm256_loadu_pd(mj + g));
        const __m256d ad = _mm256_andnot_pd(sign, diff);
        const __m256d nu =
            _mm256_mul_pd(_mm256_add_pd(_mm256_loadu_pd(vi + g), _mm256_loadu_pd(vj + g)),
                          _mm256_loadu_pd(s + g));
        const __m256d den = _mm256_sqrt_pd(nu);
        const __m256d num = _mm256_mul_pd(_mm256_loadu_pd(sqrt_th + g), ad);
        const __m256d lam = _mm256_loadu_pd(lambda + g);
        __m256d val = _mm256_sub_pd(_mm256_div_pd(num, den), lam);
        // Exact-zero numerator: the statistic is defined as 0 regardless of
        // the variance estimate, so the contribution is just -lambda.
        const __m256d zero_num = _mm256_cmp_pd(ad, vzero, _CMP_EQ_OQ);
        val = _mm256_blendv_pd(val, _mm256_xor_pd(lam, sign), zero_num);
        vbest = _mm256_max_pd(vbest, val);
    }

    double best = hmax4(vbest);
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

double pair_max_gauss_avx2(const double* zi, const double* zj, const double* lambda,
                           std::size_t count) {
    const __m256d sign = _mm256_set1_pd(-0.0);
    __m256d vbest = _mm256_set1_pd(-std::numeric_limits<double>::infinity());

    std::size_t l = 0;
    for (; l + 4 <= count; l += 4) {
        const __m256d diff = _mm256_sub_pd(_mm256_loadu_pd(zi + l), _mm256_loadu_pd(zj + l));
        const __m256d val = _mm256_sub_pd(_mm256_andnot_pd(sign, diff), _mm256_loadu_pd(lambda + l));
        vbest = _mm256_max_pd(vbest, val);
    }

    double best = hmax4(vbest);
    for (; l < count; ++l) {
        const double val = std::fabs(zi[l] - zj[l]) - lambda[l];
        if (val > best) best = val;
    }
    return best;
}

}  // namespace

bool avx2_available() {
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

const Kernels& avx2_kernels() {
    static const Kernels k{local_moments_avx2, pair_max_stat_avx2, pair_max_gauss_avx2, "avx2"};
    return k;
}

}  // namespace curvecluster::simd

#endif  // x86-64
