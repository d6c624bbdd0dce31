#pragma once

#include <string>

#include "curvecluster/cluster.hpp"

namespace curvecluster {

// Self-contained SVG of the merge tree with a dashed cut line at `threshold`
// and the resulting cluster count in the title.  Leaf labels are drawn when
// there are at most 40 leaves.
std::string render_dendrogram_svg(const Dendrogram& dend, double threshold);

void write_dendrogram_svg(const Dendrogram& dend, double threshold, const std::string& path);

}  // namespace curvecluster
