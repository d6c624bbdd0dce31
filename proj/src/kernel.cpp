#include "curvecluster/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "curvecluster/errors.hpp"
#include "curvecluster/quadrature.hpp"

namespace curvecluster {

namespace {

std::string point_tag(int series_label, double x, double h) {
    std::ostringstream os;
    if (series_label >= 0) os << "series " << series_label << ", ";
    os << "x=" << x << ", h=" << h;
    return os.str();
}

// u is always formed as (x_t - x0) * (1/h); keep every code path on the same
// expression so batch and one-shot entry points agree bit for bit.
simd::Moments generic_moments(const double* xs, const double* ys, std::size_t count, double x0,
                              double inv_h, const std::function<double(double)>& eval) {
    simd::Moments m;
    for (std::size_t t = 0; t < count; ++t) {
        const double u = (xs[t] - x0) * inv_h;
        if (!(u > -1.0 && u < 1.0)) continue;
        const double k = eval(u);
        if (k == 0.0) continue;
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

}  // namespace

const KernelProfile& epanechnikov() {
    static const KernelProfile k = [] {
        KernelProfile p;
        p.name = "epanechnikov";
        p.eval = [](double u) { return 0.75 * std::max(0.0, 1.0 - u * u); };
        p.has_poly = true;
        p.poly = Poly({0.75, 0.0, -0.75});
        p.simd_id = static_cast<int>(simd::KernId::epanechnikov);
        return p;
    }();
    return k;
}

const KernelProfile& biweight() {
    static const KernelProfile k = [] {
        KernelProfile p;
        p.name = "biweight";
        p.eval = [](double u) {
            const double t = std::max(0.0, 1.0 - u * u);
            return 0.9375 * t * t;
        };
        p.has_poly = true;
        p.poly = Poly({0.9375, 0.0, -1.875, 0.0, 0.9375});
        p.simd_id = static_cast<int>(simd::KernId::biweight);
        return p;
    }();
    return k;
}

KernelProfile custom_kernel(std::string name, std::function<double(double)> eval) {
    KernelProfile p;
    p.name = std::move(name);
    p.eval = std::move(eval);
    return p;
}

const KernelProfile& kernel_by_name(const std::string& name) {
    if (name == "epanechnikov") return epanechnikov();
    if (name == "biweight") return biweight();
    raise(errc::bad_config, "unknown kernel '" + name + "' (builtin: epanechnikov, biweight)");
}

KernelConstants kernel_constants(const KernelProfile& kern, double x, double h) {
    if (!(h > 0.0) || h > 0.5)
        raise(errc::bad_bandwidth, "bandwidth " + std::to_string(h) + " outside (0, 0.5]");
    if (!(x >= 0.0 && x <= 1.0))
        raise(errc::out_of_support, "location " + std::to_string(x) + " outside [0, 1]");

    const double a = std::max(-1.0, -x / h);
    const double b = std::min(1.0, (1.0 - x) / h);

    KernelConstants c{};
    if (kern.has_poly) {
        c.kappa0 = kern.poly.integral(a, b);
        c.kappa1 = kern.poly.shifted_up(1).integral(a, b);
        c.kappa2 = kern.poly.shifted_up(2).integral(a, b);
        const Poly lin({c.kappa2, -c.kappa1});
        c.rho = (kern.poly * kern.poly * lin * lin).integral(a, b);
    } else {
        const auto& f = kern.eval;
        c.kappa0 = integrate_adaptive(f, a, b, 1e-10);
        c.kappa1 = integrate_adaptive([&](double u) { return f(u) * u; }, a, b, 1e-10);
        c.kappa2 = integrate_adaptive([&](double u) { return f(u) * u * u; }, a, b, 1e-10);
        const double k1 = c.kappa1, k2 = c.kappa2;
        c.rho = integrate_adaptive(
            [&](double u) {
                const double ku = f(u);
                const double lin = k2 - k1 * u;
                return ku * ku * lin * lin;
            },
            a, b, 1e-10);
    }

    const double det = c.kappa0 * c.kappa2 - c.kappa1 * c.kappa1;
    if (!(det > 0.0) || !(c.rho > 0.0))
        raise(errc::quadrature_failure, "kernel moment matrix degenerate at " + point_tag(-1, x, h));
    c.s = c.rho / (det * det);
    return c;
}

std::pair<std::size_t, std::size_t> SeriesView::window(double x0, double h) const {
    const auto lo = std::lower_bound(x.begin(), x.end(), x0 - h);
    const auto hi = std::upper_bound(lo, x.end(), x0 + h);
    return {static_cast<std::size_t>(lo - x.begin()), static_cast<std::size_t>(hi - x.begin())};
}

SeriesView make_series_view(std::span<const double> x, std::span<const double> y) {
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });

    SeriesView v;
    v.x.resize(x.size());
    v.y.resize(x.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        v.x[i] = x[order[i]];
        v.y[i] = y.empty() ? 0.0 : y[order[i]];
    }
    return v;
}

simd::Moments window_moments_over(const SeriesView& v, const double* ys, double x0, double h,
                                  const KernelProfile& kern) {
    const auto [lo, hi] = v.window(x0, h);
    const double inv_h = 1.0 / h;
    if (kern.simd_id >= 0) {
        return simd::active_kernels().local_moments(v.x.data() + lo, ys + lo, hi - lo, x0, inv_h,
                                                    static_cast<simd::KernId>(kern.simd_id));
    }
    return generic_moments(v.x.data() + lo, ys + lo, hi - lo, x0, inv_h, kern.eval);
}

simd::Moments window_moments(const SeriesView& v, double x0, double h, const KernelProfile& kern) {
    return window_moments_over(v, v.y.data(), x0, h, kern);
}

LocalFit fit_from_moments(const simd::Moments& mo) {
    // Weighted least squares of a line through the window, written in the raw
    // sums: m = (s2 r0 - s1 r1) / (s0 s2 - s1^2).  The usual (T h)^-1 scaling
    // of the sums cancels between numerator and denominator.
    if (mo.n_inside < 2) return {0.0, false};
    const double den = mo.s0 * mo.s2 - mo.s1 * mo.s1;
    if (!(den > 0.0)) return {0.0, false};
    return {(mo.s2 * mo.r0 - mo.s1 * mo.r1) / den, true};
}

double local_linear_fit(const SeriesView& v, double x, double h, const KernelProfile& kern,
                        int series_label) {
    const LocalFit fit = fit_from_moments(window_moments(v, x, h, kern));
    if (!fit.ok)
        raise(errc::insufficient_local_data,
              "local-linear window holds fewer than two distinct design points (" +
                  point_tag(series_label, x, h) + "); consider a larger minimum bandwidth");
    return fit.m;
}

double local_linear_fit(std::span<const double> ystar_row, std::span<const double> x_row, double x,
                        double h, const KernelProfile& kern, int series_label) {
    return local_linear_fit(make_series_view(x_row, ystar_row), x, h, kern, series_label);
}

double density_estimate(const SeriesView& v, double x, double h, const KernelProfile& kern) {
    const KernelConstants c = kernel_constants(kern, x, h);
    const simd::Moments mo = window_moments(v, x, h, kern);
    return density_from_moments(mo.s0, v.size(), h, c.kappa0);
}

double density_estimate(std::span<const double> x_row, double x, double h,
                        const KernelProfile& kern) {
    return density_estimate(make_series_view(x_row, {}), x, h, kern);
}

ResidualSweep residual_sweep(const SeriesView& v, double h, const KernelProfile& kern) {
    const std::size_t T = v.size();
    ResidualSweep out;
    out.squared.assign(T, 0.0);

    // The sample points are sorted, so both window edges only move forward.
    std::size_t lo = 0, hi = 0;
    const double inv_h = 1.0 / h;
    for (std::size_t t = 0; t < T; ++t) {
        const double x0 = v.x[t];
        while (lo < T && v.x[lo] < x0 - h) ++lo;
        if (hi < lo) hi = lo;
        while (hi < T && v.x[hi] <= x0 + h) ++hi;

        simd::Moments mo;
        if (kern.simd_id >= 0) {
            mo = simd::active_kernels().local_moments(v.x.data() + lo, v.y.data() + lo, hi - lo, x0,
                                                      inv_h,
                                                      static_cast<simd::KernId>(kern.simd_id));
        } else {
            mo = generic_moments(v.x.data() + lo, v.y.data() + lo, hi - lo, x0, inv_h, kern.eval);
        }
        const LocalFit fit = fit_from_moments(mo);
        if (!fit.ok) {
            out.failed_x.push_back(x0);
            continue;
        }
        const double r = v.y[t] - fit.m;
        out.squared[t] = r * r;
    }

    double acc = 0.0;
    for (double sq : out.squared) acc += sq;
    out.sigma2 = acc / static_cast<double>(T);
    return out;
}

namespace {
[[noreturn]] void raise_sweep_failure(const ResidualSweep& sweep, double h, int series_label) {
    std::ostringstream os;
    os << "local-linear fit degenerated at " << sweep.failed_x.size()
       << " sample design point(s) for h=" << h;
    if (series_label >= 0) os << " (series " << series_label << ")";
    os << ":";
    for (double x : sweep.failed_x) os << " " << x;
    os << "; consider a larger minimum bandwidth";
    raise(errc::insufficient_local_data, os.str());
}
}  // namespace

double variance_homoskedastic(std::span<const double> ystar_row, std::span<const double> x_row,
                              double h, const KernelProfile& kern, int series_label) {
    const SeriesView v = make_series_view(x_row, ystar_row);
    const ResidualSweep sweep = residual_sweep(v, h, kern);
    if (!sweep.failed_x.empty()) raise_sweep_failure(sweep, h, series_label);
    return sweep.sigma2;
}

double variance_conditional(std::span<const double> ystar_row, std::span<const double> x_row,
                            double x, double h, const KernelProfile& kern, int series_label) {
    const SeriesView v = make_series_view(x_row, ystar_row);
    const ResidualSweep sweep = residual_sweep(v, h, kern);
    if (!sweep.failed_x.empty()) raise_sweep_failure(sweep, h, series_label);
    const simd::Moments mo = window_moments_over(v, sweep.squared.data(), x, h, kern);
    if (mo.n_inside < 1 || !(mo.s0 > 0.0))
        raise(errc::insufficient_local_data,
              "no kernel mass for the conditional variance at " + point_tag(series_label, x, h));
    return mo.r0 / mo.s0;
}

}  // namespace curvecluster
