#include "curvecluster/modes.hpp"

#include "curvecluster/errors.hpp"

namespace curvecluster {

std::string to_string(VarianceMode m) {
    return m == VarianceMode::homoskedastic ? "homoskedastic" : "conditional";
}

std::string to_string(DegeneracyPolicy p) {
    return p == DegeneracyPolicy::strict ? "strict" : "lenient";
}

VarianceMode variance_mode_from_string(const std::string& s) {
    if (s == "homoskedastic") return VarianceMode::homoskedastic;
    if (s == "conditional") return VarianceMode::conditional;
    raise(errc::bad_config, "unknown variance mode '" + s + "' (homoskedastic|conditional)");
}

DegeneracyPolicy policy_from_string(const std::string& s) {
    if (s == "strict") return DegeneracyPolicy::strict;
    if (s == "lenient") return DegeneracyPolicy::lenient;
    raise(errc::bad_config, "unknown degeneracy policy '" + s + "' (strict|lenient)");
}

}  // namespace curvecluster
