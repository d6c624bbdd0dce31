#include "curvecluster/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "curvecluster/errors.hpp"

namespace curvecluster {

Dendrogram hac_complete_linkage(const DistanceMatrix& dm, std::vector<std::string> leaf_labels) {
    const int n = dm.n;
    if (n < 1) raise(errc::bad_config, "distance matrix is empty");
    if (leaf_labels.empty()) {
        for (int i = 0; i < n; ++i) leaf_labels.push_back(std::to_string(i));
    }
    if (static_cast<int>(leaf_labels.size()) != n)
        raise(errc::bad_config, "expected " + std::to_string(n) + " leaf labels, got " +
                                    std::to_string(leaf_labels.size()));
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (!std::isfinite(dm.at(i, j)))
                raise(errc::non_finite_distance, "distance (" + std::to_string(i) + ", " +
                                                     std::to_string(j) + ") is not finite");

    Dendrogram dend;
    dend.n = n;
    dend.leaf_labels = std::move(leaf_labels);
    dend.singleton_height = dm.diagonal_value();
    if (n == 1) return dend;

    // Working distance matrix over active clusters, shrunk in place via the
    // complete-linkage Lance-Williams rule d(a+b, c) = max(d(a,c), d(b,c)).
    std::vector<double> work(dm.d);
    std::vector<int> cluster_id(n);    // current cluster id per active slot
    std::vector<int> min_leaf(n);      // smallest leaf index inside the slot
    std::vector<bool> active(n, true);
    for (int i = 0; i < n; ++i) {
        cluster_id[i] = i;
        min_leaf[i] = i;
    }
    auto wd = [&](int a, int b) -> double& { return work[static_cast<std::size_t>(a) * n + b]; };

    for (int step = 0; step < n - 1; ++step) {
        int best_a = -1, best_b = -1;
        double best_d = std::numeric_limits<double>::infinity();
        int best_lo = 0, best_hi = 0;
        for (int a = 0; a < n; ++a) {
            if (!active[a]) continue;
            for (int b = a + 1; b < n; ++b) {
                if (!active[b]) continue;
                const double d = wd(a, b);
                const int lo = std::min(min_leaf[a], min_leaf[b]);
                const int hi = std::max(min_leaf[a], min_leaf[b]);
                const bool better =
                    d < best_d || (d == best_d && (lo < best_lo || (lo == best_lo && hi < best_hi)));
                if (best_a < 0 || better) {
                    best_a = a;
                    best_b = b;
                    best_d = d;
                    best_lo = lo;
                    best_hi = hi;
                }
            }
        }

        const int a = best_a, b = best_b;
        const int left = min_leaf[a] <= min_leaf[b] ? cluster_id[a] : cluster_id[b];
        const int right = min_leaf[a] <= min_leaf[b] ? cluster_id[b] : cluster_id[a];
        dend.merges.push_back({left, right, best_d, n + step});

        // fold b into a
        for (int c = 0; c < n; ++c) {
            if (!active[c] || c == a || c == b) continue;
            const double d = std::max(wd(a, c), wd(b, c));
            wd(a, c) = d;
            wd(c, a) = d;
        }
        active[b] = false;
        cluster_id[a] = n + step;
        min_leaf[a] = std::min(min_leaf[a], min_leaf[b]);
    }
    return dend;
}

namespace {

// Resolve a cluster id to its leaf set using the merge list.
void validate_tree(const Dendrogram& dend) {
    const int n = dend.n;
    if (n < 1 || static_cast<int>(dend.merges.size()) != n - 1)
        raise(errc::malformed_dendrogram, "merge count does not match leaf count");
    std::vector<bool> consumed(2 * n - 1, false);
    for (std::size_t k = 0; k < dend.merges.size(); ++k) {
        const Merge& m = dend.merges[k];
        const int id = n + static_cast<int>(k);
        if (m.id != id) raise(errc::malformed_dendrogram, "merge ids must be n, n+1, ...");
        for (int child : {m.left, m.right}) {
            if (child < 0 || child >= id)
                raise(errc::malformed_dendrogram, "merge " + std::to_string(id) +
                                                      " references invalid child " +
                                                      std::to_string(child));
            if (consumed[child])
                raise(errc::malformed_dendrogram,
                      "cluster " + std::to_string(child) + " merged twice");
            consumed[child] = true;
        }
        if (k > 0 && dend.merges[k].height < dend.merges[k - 1].height)
            raise(errc::malformed_dendrogram, "merge heights must be nondecreasing");
    }
}

std::vector<std::vector<int>> groups_after(const Dendrogram& dend, int merges_to_apply) {
    const int n = dend.n;
    std::vector<int> parent(2 * n - 1);
    for (int i = 0; i < 2 * n - 1; ++i) parent[i] = i;
    auto find = [&](int v) {
        while (parent[v] != v) {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        return v;
    };
    for (int k = 0; k < merges_to_apply; ++k) {
        const Merge& m = dend.merges[k];
        const int id = m.id;
        parent[find(m.left)] = id;
        parent[find(m.right)] = id;
    }

    std::vector<std::vector<int>> by_root(2 * n - 1);
    for (int leaf = 0; leaf < n; ++leaf) by_root[find(leaf)].push_back(leaf);
    std::vector<std::vector<int>> groups;
    for (int leaf = 0; leaf < n; ++leaf) {
        const int root = find(leaf);
        if (!by_root[root].empty() && by_root[root].front() == leaf)
            groups.push_back(by_root[root]);  // members are already ascending
    }
    return groups;
}

}  // namespace

std::vector<std::vector<int>> cut_dendrogram(const Dendrogram& dend, double threshold) {
    validate_tree(dend);
    int applied = 0;
    while (applied < dend.n - 1 && dend.merges[applied].height <= threshold) ++applied;
    return groups_after(dend, applied);
}

std::vector<std::vector<int>> partition_at_k(const Dendrogram& dend, int k) {
    validate_tree(dend);
    if (k < 1 || k > dend.n)
        raise(errc::bad_group, "cannot cut " + std::to_string(dend.n) + " leaves into " +
                                   std::to_string(k) + " groups");
    return groups_after(dend, dend.n - k);
}

ClusteringResult estimate_k0(const Dendrogram& dend, double threshold) {
    validate_tree(dend);
    const int n = dend.n;

    ClusteringResult res;
    res.threshold = threshold;
    res.criterion_values.resize(n);
    for (int K = 1; K < n; ++K) res.criterion_values[K - 1] = dend.merges[n - K - 1].height;
    res.criterion_values[n - 1] = dend.singleton_height;

    res.k_hat = n;  // fallback when even all-singletons exceeds the threshold
    for (int K = 1; K <= n; ++K) {
        if (res.criterion_values[K - 1] <= threshold) {
            res.k_hat = K;
            break;
        }
    }
    res.partition = cut_dendrogram(dend, threshold);
    if (static_cast<int>(res.partition.size()) != res.k_hat)
        raise(errc::malformed_dendrogram,
              "criterion scan and threshold cut disagree; merge heights are not monotone");
    return res;
}

std::vector<std::vector<double>> group_mean_curves(const TransformedPanel& tp,
                                                   const std::vector<std::vector<int>>& partition,
                                                   double h_display,
                                                   const std::vector<double>& eval_points,
                                                   const KernelProfile& kern) {
    std::vector<std::vector<double>> curves;
    curves.reserve(partition.size());
    for (const auto& group : partition) {
        if (group.empty()) raise(errc::bad_group, "empty group in partition");
        std::vector<double> curve(eval_points.size(), 0.0);
        for (int i : group) {
            if (i < 0 || i >= tp.n) raise(errc::bad_group, "series index out of range");
            const SeriesView view = make_series_view(tp.x_row(i), tp.ystar_row(i));
            for (std::size_t e = 0; e < eval_points.size(); ++e)
                curve[e] += local_linear_fit(view, eval_points[e], h_display, kern, i);
        }
        for (double& v : curve) v /= static_cast<double>(group.size());
        curves.push_back(std::move(curve));
    }
    return curves;
}

std::string dendrogram_to_json(const Dendrogram& dend) {
    nlohmann::json j;
    j["n"] = dend.n;
    j["leaves"] = dend.leaf_labels;
    j["singleton_height"] = dend.singleton_height;
    auto& merges = j["merges"] = nlohmann::json::array();
    for (const Merge& m : dend.merges)
        merges.push_back(
            {{"left", m.left}, {"right", m.right}, {"height", m.height}, {"id", m.id}});
    return j.dump(2);
}

Dendrogram dendrogram_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        raise(errc::malformed_dendrogram, std::string("invalid JSON: ") + e.what());
    }
    Dendrogram dend;
    try {
        dend.n = j.at("n").get<int>();
        dend.leaf_labels = j.at("leaves").get<std::vector<std::string>>();
        dend.singleton_height = j.value("singleton_height", 0.0);
        for (const auto& m : j.at("merges"))
            dend.merges.push_back({m.at("left").get<int>(), m.at("right").get<int>(),
                                   m.at("height").get<double>(), m.at("id").get<int>()});
    } catch (const nlohmann::json::exception& e) {
        raise(errc::malformed_dendrogram, std::string("missing or mistyped field: ") + e.what());
    }
    if (static_cast<int>(dend.leaf_labels.size()) != dend.n)
        raise(errc::malformed_dendrogram, "leaf label count does not match n");
    validate_tree(dend);
    return dend;
}

void write_dendrogram_json(const Dendrogram& dend, const std::string& path) {
    std::ofstream out(path);
    if (!out) raise(errc::io_error, "cannot write '" + path + "'");
    out << dendrogram_to_json(dend) << '\n';
    if (!out) raise(errc::io_error, "failed writing '" + path + "'");
}

Dendrogram read_dendrogram_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(errc::io_error, "cannot open '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return dendrogram_from_json(buffer.str());
}

}  // namespace curvecluster
