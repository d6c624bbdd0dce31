#pragma once

#include <functional>

namespace curvecluster {

// Adaptive Gauss-Kronrod (7/15 pair) integration with bisection refinement.
// Used for kernel profiles without a polynomial closed form.  Throws
// Error(errc::quadrature_failure) if the error estimate cannot be pushed
// below the tolerance within the depth budget.
double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double abs_tol, int max_depth = 40);

}  // namespace curvecluster
