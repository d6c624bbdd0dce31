// Vector-kernel equivalence: the scalar reference and the ISA-specific
// variants must agree bit for bit on the pairwise max reductions and to
// last-ulp accuracy on the windowed moment sums, across awkward lengths,
// zero-weight elements, and exact-zero contrasts.

#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <string>
#include <vector>

#include "curvecluster/kernel.hpp"
#include "curvecluster/multiscale.hpp"
#include "curvecluster/panel.hpp"
#include "curvecluster/rng.hpp"
#include "curvecluster/simd.hpp"

using namespace curvecluster;

namespace {

struct StatInputs {
    std::vector<double> mi, mj, vi, vj, s, sqrt_th, lambda;
};

StatInputs random_stat_inputs(Rng& rng, std::size_t count, bool plant_zero_diff) {
    StatInputs in;
    for (std::size_t g = 0; g < count; ++g) {
        const double m = rng.normal();
        in.mi.push_back(m);
        in.mj.push_back(plant_zero_diff && g % 5 == 0 ? m : m + 0.3 * rng.normal());
        in.vi.push_back(0.2 + rng.uniform01());
        in.vj.push_back(0.2 + rng.uniform01());
        in.s.push_back(0.5 + rng.uniform01());
        in.sqrt_th.push_back(std::sqrt(100.0 + 400.0 * rng.uniform01()));
        in.lambda.push_back(rng.uniform01());
    }
    return in;
}

bool bits_equal(double a, double b) {
    std::uint64_t ua, ub;
    std::memcpy(&ua, &a, 8);
    std::memcpy(&ub, &b, 8);
    return ua == ub;
}

}  // namespace

TEST_CASE("an implementation is selected and carries a known name") {
    const simd::Kernels& k = simd::active_kernels();
    const std::string name = k.name;
    CHECK((name == "scalar" || name == "avx2" || name == "neon"));
    REQUIRE(k.local_moments != nullptr);
    REQUIRE(k.pair_max_stat != nullptr);
    REQUIRE(k.pair_max_gauss != nullptr);
}

TEST_CASE("forcing a variant works and nullptr restores automatic choice") {
    const std::string original = simd::active_kernels().name;
    CHECK(simd::force_kernels("scalar") == "scalar");
    CHECK(std::string(simd::active_kernels().name) == "scalar");
    // unavailable name falls back to scalar rather than crashing
    CHECK(simd::force_kernels("no_such_isa") == "scalar");
    simd::force_kernels(nullptr);
    CHECK(std::string(simd::active_kernels().name) == original);
}

TEST_CASE("scalar reference: hand-checked values") {
    const simd::Kernels& k = simd::scalar_kernels();

    // moments over two points at u = 0 and u = 0.5 (epanechnikov weights 0.75
    // and 0.5625), one point outside
    const double xs[3] = {0.5, 0.55, 0.9};
    const double ys[3] = {2.0, 4.0, 1.0};
    const simd::Moments m = k.local_moments(xs, ys, 3, 0.5, 10.0, simd::KernId::epanechnikov);
    CHECK(m.n_inside == 2);
    CHECK(m.s0 == doctest::Approx(0.75 + 0.5625).epsilon(1e-15));
    CHECK(m.s1 == doctest::Approx(0.5625 * 0.5).epsilon(1e-15));
    CHECK(m.s2 == doctest::Approx(0.5625 * 0.25).epsilon(1e-15));
    CHECK(m.r0 == doctest::Approx(0.75 * 2.0 + 0.5625 * 4.0).epsilon(1e-15));
    CHECK(m.r1 == doctest::Approx(0.5625 * 0.5 * 4.0).epsilon(1e-15));

    // pair_max_stat: single entry, worked by hand
    const double mi = 1.0, mj = 0.25, vi = 0.5, vj = 0.5, s = 0.75, st = 20.0, lam = 1.0;
    const double expect = st * 0.75 / std::sqrt(1.0 * 0.75) - 1.0;
    CHECK(k.pair_max_stat(&mi, &mj, &vi, &vj, &s, &st, &lam, 1) ==
          doctest::Approx(expect).epsilon(1e-15));

    // exact-zero numerator maps to -lambda even with zero variance
    const double z = 0.0;
    CHECK(k.pair_max_stat(&mi, &mi, &z, &z, &s, &st, &lam, 1) == -1.0);
    // zero denominator against a real contrast escalates to +inf
    CHECK(std::isinf(k.pair_max_stat(&mi, &mj, &z, &z, &s, &st, &lam, 1)));

    // empty windows
    CHECK(k.pair_max_stat(nullptr, nullptr, nullptr, nullptr, nullptr, nullptr, nullptr, 0) ==
          -std::numeric_limits<double>::infinity());
    CHECK(k.pair_max_gauss(nullptr, nullptr, nullptr, 0) ==
          -std::numeric_limits<double>::infinity());

    // gauss reduction picks the right element
    const double zi[3] = {1.0, -2.0, 0.5};
    const double zj[3] = {0.5, 1.0, 0.4};
    const double lam3[3] = {0.1, 2.9, 0.0};
    // |diffs| - lambda = 0.4, 0.1, 0.1 -> max 0.4
    CHECK(k.pair_max_gauss(zi, zj, lam3, 3) == doctest::Approx(0.4).epsilon(1e-15));
}

#if defined(__x86_64__) || defined(_M_X64)
TEST_CASE("avx2 pair reductions are bit-identical to scalar") {
    if (!simd::avx2_available()) return;
    const simd::Kernels& sc = simd::scalar_kernels();
    const simd::Kernels& vx = simd::avx2_kernels();
    Rng rng(31337);
    for (std::size_t count : {1ul, 2ul, 3ul, 4ul, 5ul, 7ul, 8ul, 13ul, 64ul, 91ul, 910ul}) {
        for (int rep = 0; rep < 20; ++rep) {
            const StatInputs in = random_stat_inputs(rng, count, rep % 2 == 0);
            const double a = sc.pair_max_stat(in.mi.data(), in.mj.data(), in.vi.data(),
                                              in.vj.data(), in.s.data(), in.sqrt_th.data(),
                                              in.lambda.data(), count);
            const double b = vx.pair_max_stat(in.mi.data(), in.mj.data(), in.vi.data(),
                                              in.vj.data(), in.s.data(), in.sqrt_th.data(),
                                              in.lambda.data(), count);
            CHECK(bits_equal(a, b));

            const double g1 = sc.pair_max_gauss(in.mi.data(), in.mj.data(), in.lambda.data(), count);
            const double g2 = vx.pair_max_gauss(in.mi.data(), in.mj.data(), in.lambda.data(), count);
            CHECK(bits_equal(g1, g2));
        }
    }
}

TEST_CASE("avx2 moments agree with scalar to relative 1e-12 with identical counts") {
    if (!simd::avx2_available()) return;
    const simd::Kernels& sc = simd::scalar_kernels();
    const simd::Kernels& vx = simd::avx2_kernels();
    Rng rng(777);
    for (std::size_t count : {1ul, 3ul, 4ul, 6ul, 17ul, 100ul, 501ul}) {
        for (simd::KernId kid : {simd::KernId::epanechnikov, simd::KernId::biweight}) {
            std::vector<double> xs, ys;
            for (std::size_t t = 0; t < count; ++t) {
                xs.push_back(rng.uniform01());
                ys.push_back(rng.normal());
            }
            const double x0 = 0.4, inv_h = 1.0 / 0.15;
            const simd::Moments a = sc.local_moments(xs.data(), ys.data(), count, x0, inv_h, kid);
            const simd::Moments b = vx.local_moments(xs.data(), ys.data(), count, x0, inv_h, kid);
            CHECK(a.n_inside == b.n_inside);
            for (auto [u, v] : {std::pair{a.s0, b.s0},
                                {a.s1, b.s1},
                                {a.s2, b.s2},
                                {a.r0, b.r0},
                                {a.r1, b.r1}}) {
                const double scale = std::max({std::fabs(u), std::fabs(v), 1e-30});
                CHECK(std::fabs(u - v) / scale <= 1e-12);
            }
        }
    }
}

TEST_CASE("window-edge weights count identically in both variants") {
    if (!simd::avx2_available()) return;
    const simd::Kernels& sc = simd::scalar_kernels();
    const simd::Kernels& vx = simd::avx2_kernels();
    // points placed exactly at |u| = 1 carry zero weight and must not be
    // counted as inside by either variant
    const double xs[6] = {0.25, 0.55, 0.4, 0.399999999, 0.4000001, 0.3};
    const double ys[6] = {1, 1, 1, 1, 1, 1};
    // x0 = 0.4, h = 0.15: u = -1 at x = 0.25 and u = +1 at x = 0.55
    const simd::Moments a = sc.local_moments(xs, ys, 6, 0.4, 1.0 / 0.15, simd::KernId::epanechnikov);
    const simd::Moments b = vx.local_moments(xs, ys, 6, 0.4, 1.0 / 0.15, simd::KernId::epanechnikov);
    CHECK(a.n_inside == b.n_inside);
    CHECK(a.n_inside == 4);
    CHECK(a.s0 == doctest::Approx(b.s0).epsilon(1e-15));
}

TEST_CASE("full distance matrices match across forced variants") {
    if (!simd::avx2_available()) return;
    Rng rng(2468);
    PanelData p;
    p.n = 6;
    p.T = 257;  // odd length exercises vector remainders in every window
    for (int i = 0; i < p.n; ++i) {
        p.series_ids.push_back("s" + std::to_string(i));
        for (int t = 0; t < p.T; ++t) {
            const double x = rng.uniform01();
            p.x.push_back(x);
            p.y.push_back(std::cos(4.0 * x + i % 2) + 0.5 * rng.normal());
        }
    }
    const TransformedPanel tp = within_transform(p);
    const LocationScaleGrid grid = make_grid({0.1, 0.3, 0.5, 0.7, 0.9}, {0.075, 0.15, 0.25});

    simd::force_kernels("scalar");
    const DistanceMatrix dm_scalar = distance_matrix(tp, grid, epanechnikov(),
                                                     VarianceMode::homoskedastic,
                                                     DegeneracyPolicy::strict, 1);
    simd::force_kernels("avx2");
    REQUIRE(std::string(simd::active_kernels().name) == "avx2");
    const DistanceMatrix dm_avx2 = distance_matrix(tp, grid, epanechnikov(),
                                                   VarianceMode::homoskedastic,
                                                   DegeneracyPolicy::strict, 1);
    simd::force_kernels(nullptr);

    REQUIRE(dm_scalar.d.size() == dm_avx2.d.size());
    // the pairwise reduction is bit-stable; the smoother sums may differ in
    // the last ulp, which propagates to a tiny relative gap in the distances
    for (std::size_t idx = 0; idx < dm_scalar.d.size(); ++idx) {
        const double a = dm_scalar.d[idx], b = dm_avx2.d[idx];
        CHECK(std::fabs(a - b) <= 1e-9 * std::max(1.0, std::max(std::fabs(a), std::fabs(b))));
    }
}
#endif
