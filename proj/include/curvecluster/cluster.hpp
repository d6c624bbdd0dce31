#pragma once

#include <string>
#include <vector>

#include "curvecluster/kernel.hpp"
#include "curvecluster/multiscale.hpp"
#include "curvecluster/panel.hpp"

namespace curvecluster {

// Agglomerative merge tree.  Leaves are clusters 0..n-1 (in series order);
// merge k creates cluster id n+k.  Heights are nondecreasing (complete
// linkage is reducible), and singleton_height records the self-distance
// -lambda(2 h_max) every leaf starts at -- the natural floor of the tree.
struct Merge {
    int left;   // child with the smaller minimal leaf index
    int right;
    double height;
    int id;
};

struct Dendrogram {
    int n = 0;
    std::vector<std::string> leaf_labels;
    std::vector<Merge> merges;  // n-1 entries, height-ordered
    double singleton_height = 0.0;
};

// Complete-linkage agglomeration of a symmetric distance matrix via
// Lance-Williams max updates.  Ties are broken lexicographically on the
// merged clusters' (smaller, larger) minimal leaf indices, so the tree is a
// pure function of the matrix.  Non-finite off-diagonal entries are refused.
Dendrogram hac_complete_linkage(const DistanceMatrix& dm, std::vector<std::string> leaf_labels);

// Partition obtained by executing every merge with height <= threshold.
// Groups hold ascending leaf indices and are ordered by smallest member.
std::vector<std::vector<int>> cut_dendrogram(const Dendrogram& dend, double threshold);

// Partition with exactly k groups: the state after the first n-k merges.
std::vector<std::vector<int>> partition_at_k(const Dendrogram& dend, int k);

struct ClusteringResult {
    int k_hat = 0;
    std::vector<std::vector<int>> partition;
    double threshold = 0.0;
    // criterion_values[K-1] = largest within-group distance over the best
    // K-group partition of the tree = height of merge n-K (singleton height
    // for K = n)
    std::vector<double> criterion_values;
};

// Smallest K whose K-group partition keeps every within-group distance at or
// below the threshold; K = n always qualifies when the threshold is at least
// the singleton height, and is returned as the fallback otherwise.
ClusteringResult estimate_k0(const Dendrogram& dend, double threshold);

// Average fitted curve per group at bandwidth h_display over eval_points.
// Result is group-major: curves[g][e].
std::vector<std::vector<double>> group_mean_curves(const TransformedPanel& tp,
                                                   const std::vector<std::vector<int>>& partition,
                                                   double h_display,
                                                   const std::vector<double>& eval_points,
                                                   const KernelProfile& kern);

// JSON round-trip: {n, leaves: [labels], merges: [{left, right, height, id}],
// singleton_height}.
std::string dendrogram_to_json(const Dendrogram& dend);
Dendrogram dendrogram_from_json(const std::string& text);
void write_dendrogram_json(const Dendrogram& dend, const std::string& path);
Dendrogram read_dendrogram_json(const std::string& path);

}  // namespace curvecluster
