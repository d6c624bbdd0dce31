// Smoothing primitives: weighted-least-squares oracle for the local-linear
// fit, composite-Simpson oracles for the kernel functionals, exactness on
// affine data, and the failure modes around degenerate windows.

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "curvecluster/errors.hpp"
#include "curvecluster/kernel.hpp"
#include "curvecluster/rng.hpp"

using namespace curvecluster;

namespace {

// Independent local-linear oracle: minimize sum_t w_t (y_t - a - b (x_t - x0))^2
// with w_t = K((x_t - x0)/h), accumulated in long double and solved by
// Cramer's rule on raw (un-normalized) offsets.  Deliberately a different
// parameterization from the library's normalized-offset moment pipeline.
double wls_line_oracle(const std::vector<double>& xs, const std::vector<double>& ys, double x0,
                       double h, const KernelProfile& kern) {
    long double w0 = 0, w1 = 0, w2 = 0, z0 = 0, z1 = 0;
    for (std::size_t t = 0; t < xs.size(); ++t) {
        const long double d = static_cast<long double>(xs[t]) - x0;
        const double u = static_cast<double>(d) / h;
        if (std::fabs(u) >= 1.0) continue;
        const long double w = kern.eval(u);
        if (w <= 0.0) continue;
        w0 += w;
        w1 += w * d;
        w2 += w * d * d;
        z0 += w * ys[t];
        z1 += w * d * ys[t];
    }
    const long double det = w0 * w2 - w1 * w1;
    REQUIRE(static_cast<double>(det) > 0.0);
    return static_cast<double>((w2 * z0 - w1 * z1) / det);
}

// Composite Simpson over [a, b]; plenty of panels so the oracle error is far
// below the comparison tolerance for these smooth integrands.
template <typename F>
double simpson(F f, double a, double b, int panels = 20000) {
    const double step = (b - a) / panels;
    double acc = f(a) + f(b);
    for (int k = 1; k < panels; ++k) acc += (k % 2 ? 4.0 : 2.0) * f(a + k * step);
    return acc * step / 3.0;
}

struct ConstantsOracle {
    double kappa0, kappa1, kappa2, rho, s;
};

ConstantsOracle constants_oracle(const KernelProfile& kern, double x, double h) {
    const double lo = std::max(-1.0, -x / h);
    const double hi = std::min(1.0, (1.0 - x) / h);
    ConstantsOracle o;
    o.kappa0 = simpson([&](double u) { return kern.eval(u); }, lo, hi);
    o.kappa1 = simpson([&](double u) { return u * kern.eval(u); }, lo, hi);
    o.kappa2 = simpson([&](double u) { return u * u * kern.eval(u); }, lo, hi);
    o.rho = simpson(
        [&](double u) {
            const double k = kern.eval(u);
            const double lin = o.kappa2 - o.kappa1 * u;
            return k * k * lin * lin;
        },
        lo, hi);
    const double det = o.kappa0 * o.kappa2 - o.kappa1 * o.kappa1;
    o.s = o.rho / (det * det);
    return o;
}

std::vector<double> uniform_xs(Rng& rng, int T) {
    std::vector<double> xs(T);
    for (double& v : xs) v = rng.uniform01();
    return xs;
}

}  // namespace

TEST_CASE("interior kernel constants match their closed forms") {
    // Epanechnikov on [-1,1]: kappa0 = 1, kappa1 = 0, kappa2 = 1/5,
    // rho = kappa2^2 * int K^2 = (1/25)(3/5), s = rho / kappa2^2 = 3/5.
    const KernelConstants e = kernel_constants(epanechnikov(), 0.5, 0.25);
    CHECK(e.kappa0 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::fabs(e.kappa1) < 1e-14);
    CHECK(e.kappa2 == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(e.rho == doctest::Approx(0.024).epsilon(1e-12));
    CHECK(e.s == doctest::Approx(0.6).epsilon(1e-12));

    // Biweight: kappa2 = 1/7, int K^2 = 5/7, rho = 5/343, s = 5/7.
    const KernelConstants b = kernel_constants(biweight(), 0.5, 0.3);
    CHECK(b.kappa0 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::fabs(b.kappa1) < 1e-14);
    CHECK(b.kappa2 == doctest::Approx(1.0 / 7.0).epsilon(1e-12));
    CHECK(b.rho == doctest::Approx(5.0 / 343.0).epsilon(1e-12));
    CHECK(b.s == doctest::Approx(5.0 / 7.0).epsilon(1e-12));
}

TEST_CASE("boundary kernel constants match a quadrature oracle") {
    for (const KernelProfile* kern : {&epanechnikov(), &biweight()}) {
        for (const auto& [x, h] : std::vector<std::pair<double, double>>{
                 {0.05, 0.25}, {0.0, 0.1}, {1.0, 0.25}, {0.95, 0.2}, {0.02, 0.05}, {0.5, 0.5}}) {
            CAPTURE(kern->name);
            CAPTURE(x);
            CAPTURE(h);
            const ConstantsOracle o = constants_oracle(*kern, x, h);
            const KernelConstants c = kernel_constants(*kern, x, h);
            CHECK(c.kappa0 == doctest::Approx(o.kappa0).epsilon(1e-10));
            CHECK(c.kappa1 == doctest::Approx(o.kappa1).epsilon(1e-10).scale(1.0));
            CHECK(c.kappa2 == doctest::Approx(o.kappa2).epsilon(1e-10));
            CHECK(c.rho == doctest::Approx(o.rho).epsilon(1e-9));
            CHECK(c.s == doctest::Approx(o.s).epsilon(1e-9));
        }
    }
}

TEST_CASE("kernel_constants validates its arguments") {
    CHECK_THROWS_AS(kernel_constants(epanechnikov(), -0.1, 0.25), Error);
    CHECK_THROWS_AS(kernel_constants(epanechnikov(), 0.5, 0.0), Error);
    CHECK_THROWS_AS(kernel_constants(epanechnikov(), 0.5, 0.6), Error);
    try {
        kernel_constants(epanechnikov(), 0.5, 0.6);
    } catch (const Error& e) {
        CHECK(e.code() == errc::bad_bandwidth);
        CHECK(e.is_input_error());
    }
}

TEST_CASE("local-linear fit reproduces affine functions to 1e-10") {
    Rng rng(20240811);
    int checked = 0;
    while (checked < 100) {
        const int T = 40 + static_cast<int>(rng.uniform01() * 160);
        const std::vector<double> xs = uniform_xs(rng, T);
        const double a = 4.0 * rng.uniform01() - 2.0;
        const double b = 4.0 * rng.uniform01() - 2.0;
        std::vector<double> ys(xs.size());
        for (std::size_t t = 0; t < xs.size(); ++t) ys[t] = a + b * xs[t];

        const double x = rng.uniform01();
        const double h = 0.15 + 0.35 * rng.uniform01();
        const SeriesView view = make_series_view(xs, ys);
        const auto [lo, hi] = view.window(x, h);
        if (hi - lo < 5) continue;  // keep the fit clearly identified
        const double fit = local_linear_fit(view, x, h, epanechnikov());
        CHECK(std::fabs(fit - (a + b * x)) <= 1e-10);
        ++checked;
    }
    CHECK(checked == 100);
}

TEST_CASE("local-linear fit agrees with the normal-equations oracle on noisy data") {
    Rng rng(77);
    for (int rep = 0; rep < 60; ++rep) {
        const KernelProfile& kern = (rep % 2 == 0) ? epanechnikov() : biweight();
        const int T = 60 + static_cast<int>(rng.uniform01() * 100);
        const std::vector<double> xs = uniform_xs(rng, T);
        std::vector<double> ys(xs.size());
        for (std::size_t t = 0; t < xs.size(); ++t)
            ys[t] = std::sin(6.0 * xs[t]) + 0.5 * rng.normal();

        const double x = rng.uniform01();
        const double h = 0.12 + 0.3 * rng.uniform01();
        const SeriesView view = make_series_view(xs, ys);
        if (view.window(x, h).second - view.window(x, h).first < 5) continue;
        const double fit = local_linear_fit(view, x, h, kern);
        const double oracle = wls_line_oracle(xs, ys, x, h, kern);
        CHECK(fit == doctest::Approx(oracle).epsilon(1e-9));
    }
}

TEST_CASE("windows without two distinct design points are refused") {
    // All mass on one design point: a line is not identified.
    std::vector<double> xs(20, 0.5), ys(20, 1.0);
    CHECK_THROWS_AS(local_linear_fit(make_series_view(xs, ys), 0.5, 0.05, epanechnikov()), Error);
    try {
        local_linear_fit(make_series_view(xs, ys), 0.5, 0.05, epanechnikov());
    } catch (const Error& e) {
        CHECK(e.code() == errc::insufficient_local_data);
        CHECK(e.is_degeneracy());
    }

    // Empty window: no design points at all near x = 0.9.
    std::vector<double> xs2{0.1, 0.12, 0.15, 0.2}, ys2{1.0, 2.0, 3.0, 4.0};
    CHECK_THROWS_AS(local_linear_fit(make_series_view(xs2, ys2), 0.9, 0.05, epanechnikov()),
                    Error);
}

TEST_CASE("series label is quoted in degenerate-window errors") {
    std::vector<double> xs(10, 0.3), ys(10, 0.0);
    try {
        local_linear_fit(make_series_view(xs, ys), 0.3, 0.05, epanechnikov(), 7);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("7") != std::string::npos);
    }
}

TEST_CASE("series view sorts by design point and window() brackets the support") {
    std::vector<double> xs{0.9, 0.1, 0.5, 0.3, 0.7};
    std::vector<double> ys{9.0, 1.0, 5.0, 3.0, 7.0};
    const SeriesView v = make_series_view(xs, ys);
    CHECK(std::is_sorted(v.x.begin(), v.x.end()));
    for (std::size_t t = 0; t < v.size(); ++t)
        CHECK(v.y[t] == doctest::Approx(10.0 * v.x[t]).epsilon(1e-15));

    const auto [lo, hi] = v.window(0.5, 0.25);
    for (std::size_t t = lo; t < hi; ++t) CHECK(std::fabs(v.x[t] - 0.5) <= 0.25);
    if (lo > 0) CHECK(v.x[lo - 1] < 0.25);
    if (hi < v.size()) CHECK(v.x[hi] > 0.75);
}

TEST_CASE("density estimate is near 1 for uniform designs, boundary included") {
    Rng rng(5150);
    const int T = 20000;
    const std::vector<double> xs = uniform_xs(rng, T);
    for (double x : {0.02, 0.3, 0.5, 0.97}) {
        const double f = density_estimate(xs, x, 0.1, epanechnikov());
        CHECK(f == doctest::Approx(1.0).epsilon(0.05));
    }
}

TEST_CASE("homoskedastic variance estimate recovers the noise level") {
    Rng rng(99);
    const int T = 4000;
    const std::vector<double> xs = uniform_xs(rng, T);
    std::vector<double> ys(xs.size());
    const double sd = 0.7;
    for (std::size_t t = 0; t < xs.size(); ++t) ys[t] = 2.0 * xs[t] + sd * rng.normal();
    const double v = variance_homoskedastic(ys, xs, 0.1, epanechnikov());
    CHECK(v == doctest::Approx(sd * sd).epsilon(0.08));

    // residual_sweep is the batch form of the same estimator
    const SeriesView view = make_series_view(xs, ys);
    const ResidualSweep sweep = residual_sweep(view, 0.1, epanechnikov());
    CHECK(sweep.failed_x.empty());
    CHECK(sweep.sigma2 == doctest::Approx(v).epsilon(1e-12));
    CHECK(sweep.squared.size() == xs.size());
}

TEST_CASE("conditional variance estimate tracks x-dependent noise") {
    Rng rng(123);
    const int T = 30000;
    const std::vector<double> xs = uniform_xs(rng, T);
    std::vector<double> ys(xs.size());
    // noise sd ramps from 0.2 at x=0 to 1.2 at x=1
    for (std::size_t t = 0; t < xs.size(); ++t)
        ys[t] = std::cos(3.0 * xs[t]) + (0.2 + xs[t]) * rng.normal();
    const double lo = variance_conditional(ys, xs, 0.15, 0.1, epanechnikov());
    const double hi = variance_conditional(ys, xs, 0.85, 0.1, epanechnikov());
    CHECK(lo == doctest::Approx(0.35 * 0.35).epsilon(0.25));
    CHECK(hi == doctest::Approx(1.05 * 1.05).epsilon(0.25));
    CHECK(hi > 4.0 * lo);
}

TEST_CASE("custom kernel profiles reproduce the builtin results") {
    const KernelProfile custom =
        custom_kernel("custom-epa", [](double u) { return 0.75 * (1.0 - u * u); });
    CHECK_FALSE(custom.has_poly);

    const KernelConstants a = kernel_constants(epanechnikov(), 0.1, 0.2);
    const KernelConstants b = kernel_constants(custom, 0.1, 0.2);
    CHECK(b.kappa0 == doctest::Approx(a.kappa0).epsilon(1e-9));
    CHECK(b.kappa2 == doctest::Approx(a.kappa2).epsilon(1e-9));
    CHECK(b.s == doctest::Approx(a.s).epsilon(1e-8));

    Rng rng(31);
    const std::vector<double> xs = uniform_xs(rng, 300);
    std::vector<double> ys(xs.size());
    for (std::size_t t = 0; t < xs.size(); ++t) ys[t] = std::sin(4.0 * xs[t]) + rng.normal();
    const double f1 = local_linear_fit(xs, ys, 0.4, 0.15, epanechnikov());
    const double f2 = local_linear_fit(xs, ys, 0.4, 0.15, custom);
    CHECK(f2 == doctest::Approx(f1).epsilon(1e-12));
}

TEST_CASE("kernel_by_name resolves builtins and refuses unknown names") {
    CHECK(kernel_by_name("epanechnikov").name == "epanechnikov");
    CHECK(kernel_by_name("biweight").name == "biweight");
    CHECK_THROWS_AS(kernel_by_name("tricube"), Error);
}

TEST_CASE("fit_from_moments flags unidentified windows instead of dividing by zero") {
    simd::Moments mo;  // empty window
    CHECK_FALSE(fit_from_moments(mo).ok);
    mo.s0 = 1.0;
    mo.n_inside = 1;  // single point: s0 s2 - s1^2 = 0
    CHECK_FALSE(fit_from_moments(mo).ok);
}
