#include "curvecluster/quadrature.hpp"

#include <cmath>

#include "curvecluster/errors.hpp"

namespace curvecluster {

namespace {

// 15-point Kronrod extension of 7-point Gauss (QUADPACK dqk15 abscissae and
// weights).  Even-index nodes are the embedded Gauss points.
constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct GkResult {
    double kronrod;
    double err;
};

GkResult gk15(const std::function<double(double)>& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double half = 0.5 * (b - a);

    const double fc = f(c);
    double gauss = kWg[3] * fc;
    double kron = kWgk[7] * fc;
    for (int i = 0; i < 7; ++i) {
        const double dx = half * kXgk[i];
        const double fsum = f(c - dx) + f(c + dx);
        kron += kWgk[i] * fsum;
        if (i % 2 == 1) gauss += kWg[i / 2] * fsum;
    }
    kron *= half;
    gauss *= half;
    return {kron, std::fabs(kron - gauss)};
}

double integrate_rec(const std::function<double(double)>& f, double a, double b, double tol,
                     int depth) {
    const GkResult r = gk15(f, a, b);
    if (r.err <= tol || b - a < 1e-14) return r.kronrod;
    if (depth <= 0)
        raise(errc::quadrature_failure,
              "adaptive integration depth exhausted on [" + std::to_string(a) + ", " +
                  std::to_string(b) + "], residual error " + std::to_string(r.err));
    const double c = 0.5 * (a + b);
    return integrate_rec(f, a, c, 0.5 * tol, depth - 1) +
           integrate_rec(f, c, b, 0.5 * tol, depth - 1);
}

}  // namespace

double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double abs_tol, int max_depth) {
    if (!(a < b)) return 0.0;
    return integrate_rec(f, a, b, abs_tol, max_depth);
}

}  // namespace curvecluster
