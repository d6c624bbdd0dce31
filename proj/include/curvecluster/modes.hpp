#pragma once

#include <string>

namespace curvecluster {

// Which error-variance estimator feeds the statistic normalization.
enum class VarianceMode { homoskedastic, conditional };

// What to do when a local fit or density is unusable at some (series, x, h):
// strict refuses with a typed error naming every failing point; lenient drops
// those grid points for *all* series pairs so every distance still scans the
// same grid.
enum class DegeneracyPolicy { strict, lenient };

std::string to_string(VarianceMode m);
std::string to_string(DegeneracyPolicy p);
VarianceMode variance_mode_from_string(const std::string& s);
DegeneracyPolicy policy_from_string(const std::string& s);

}  // namespace curvecluster
