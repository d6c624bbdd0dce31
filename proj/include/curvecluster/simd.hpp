#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace curvecluster::simd {

// Vectorized inner loops behind the curve-distance machinery.  Each entry
// point has a scalar reference implementation plus ISA-specific variants
// (AVX2+FMA on x86-64, NEON on aarch64) with identical signatures; the
// variant is picked once at runtime from CPU capabilities and can be forced
// with the CURVECLUSTER_SIMD environment variable or force_kernels().
//
// Determinism contract: for a fixed variant the output is a pure function of
// the inputs (no reordering across calls or threads).  pair_max_stat and
// pair_max_gauss are additionally bit-identical across variants -- they are
// pointwise arithmetic plus a max-reduction, and max is exactly associative.
// local_moments accumulates partial sums per lane, so scalar and vector
// variants may differ by harmless last-ulp rounding; tests bound that gap.

// Builtin kernel shapes with vectorizable weight evaluation.  Custom kernel
// profiles fall back to a separate scalar path in the kernel module.
enum class KernId : int { epanechnikov = 0, biweight = 1 };

// Kernel-weighted sums over one observation window, everything expressed in
// normalized offsets u = (x_t - x0) * inv_h:
//   s_l = sum K(u_t) u_t^l   (l = 0,1,2),   r_l = sum K(u_t) u_t^l y_t  (l = 0,1)
// n_inside counts observations with strictly positive weight.
struct Moments {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0;
    double r0 = 0.0, r1 = 0.0;
    std::int64_t n_inside = 0;
};

using local_moments_fn = Moments (*)(const double* xs, const double* ys, std::size_t count,
                                     double x0, double inv_h, KernId kern);

// max over g of  sqrt_th[g]*|mi[g]-mj[g]| / sqrt((vi[g]+vj[g])*s[g]) - lambda[g],
// with an exact-zero numerator mapping to -lambda[g] (identical curves carry
// no signal even when the variance estimate is zero too).  A zero denominator
// against a nonzero numerator yields +inf, which the caller turns into a
// degenerate-variance failure.  Returns -inf for count == 0.
using pair_max_stat_fn = double (*)(const double* mi, const double* mj, const double* vi,
                                    const double* vj, const double* s, const double* sqrt_th,
                                    const double* lambda, std::size_t count);

// max over l of |zi[l] - zj[l]| - lambda[l]; -inf for count == 0.
using pair_max_gauss_fn = double (*)(const double* zi, const double* zj, const double* lambda,
                                     std::size_t count);

struct Kernels {
    local_moments_fn local_moments;
    pair_max_stat_fn pair_max_stat;
    pair_max_gauss_fn pair_max_gauss;
    const char* name;
};

const Kernels& scalar_kernels();
#if defined(__x86_64__) || defined(_M_X64)
bool avx2_available();
const Kernels& avx2_kernels();
#endif
#if defined(__aarch64__)
const Kernels& neon_kernels();
#endif

// The variant in use.  Resolution order: force_kernels() override, then the
// CURVECLUSTER_SIMD environment variable ("scalar", "avx2", "neon"), then the
// best variant the CPU supports.  Requesting an unavailable variant falls
// back to scalar.
const Kernels& active_kernels();

// Test hook: force a specific variant by name; nullptr restores automatic
// selection.  Returns the name actually in effect.
std::string force_kernels(const char* name);

}  // namespace curvecluster::simd
