#include "curvecluster/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>

#include "curvecluster/cluster.hpp"
#include "curvecluster/errors.hpp"
#include "curvecluster/parallel.hpp"
#include "curvecluster/rng.hpp"
#include "curvecluster/threshold.hpp"

namespace curvecluster {

double bump(double x, double center, double width) {
    const double v = (x - center) / width;
    if (std::abs(v) > 1.0) return 0.0;
    const double w = 1.0 - v * v;
    return w * w;
}

double group_function(int k, double x) {
    switch (k) {
        case 1: return 0.0;
        case 2: return 0.35 * bump(x, 0.25, 0.25);
        case 3: return 0.35 * bump(x, 0.75, 0.25);
        case 4: return 2.0 * bump(x, 0.25, 0.025);
        case 5: return 2.0 * bump(x, 0.75, 0.025);
        default:
            raise(errc::bad_group,
                  "group function index " + std::to_string(k) + " outside 1..5");
    }
}

GroupStructure equal_blocks(int n, int k0) {
    if (k0 < 1 || k0 > n)
        raise(errc::bad_group, "cannot split " + std::to_string(n) + " series into " +
                                   std::to_string(k0) + " groups");
    if (n % k0 != 0)
        raise(errc::bad_group, "equal blocks need k0 | n; got n=" + std::to_string(n) +
                                   ", k0=" + std::to_string(k0));
    GroupStructure gs;
    gs.k0 = k0;
    gs.assignment.resize(static_cast<std::size_t>(n));
    const int block = n / k0;
    for (int i = 0; i < n; ++i) gs.assignment[static_cast<std::size_t>(i)] = i / block;
    return gs;
}

PanelData draw_sample(const SimulationDesign& design, std::uint64_t seed) {
    if (design.n < 2) raise(errc::too_few_series, "need at least 2 series");
    if (design.T < 2) raise(errc::bad_config, "need at least 2 observations per series");
    if (design.k0 > 5)
        raise(errc::bad_group, "only 5 distinct group curves are defined");
    if (!(std::abs(design.ar_coeff) < 1.0))
        raise(errc::bad_config, "AR coefficient must satisfy |a| < 1");
    const GroupStructure gs = equal_blocks(design.n, design.k0);

    PanelData panel;
    panel.n = design.n;
    panel.T = design.T;
    panel.y.resize(static_cast<std::size_t>(design.n) * design.T);
    panel.x.resize(static_cast<std::size_t>(design.n) * design.T);
    panel.series_ids.reserve(static_cast<std::size_t>(design.n));

    const double a = design.ar_coeff;
    const double innov = std::sqrt(1.0 - a * a);  // keeps the noise unit-variance
    const std::uint64_t base = derive_seed(seed, seed_tag::series);

    for (int i = 0; i < design.n; ++i) {
        panel.series_ids.push_back("s" + std::to_string(i + 1));
        Rng rng(derive_seed(base, static_cast<std::uint64_t>(i)));
        double* xr = panel.x.data() + static_cast<std::size_t>(i) * design.T;
        double* yr = panel.y.data() + static_cast<std::size_t>(i) * design.T;
        for (int t = 0; t < design.T; ++t) xr[t] = rng.uniform01();
        const int k = gs.assignment[static_cast<std::size_t>(i)] + 1;
        double e = 0.0;
        for (int t = 0; t < design.T; ++t) {
            const double z = rng.normal();
            e = (t == 0) ? z : a * e + innov * z;
            yr[t] = group_function(k, xr[t]) + design.noise_scale * e;
        }
    }
    return panel;
}

namespace {

// Max-weight bijection between k labels via shortest augmenting paths with
// potentials; O(k^3).  Row i of the confusion matrix is a truth label,
// column j an estimated label.
long long assignment_max(const std::vector<std::vector<long long>>& c) {
    const int k = static_cast<int>(c.size());
    const long long inf = std::numeric_limits<long long>::max() / 4;
    std::vector<long long> u(static_cast<std::size_t>(k) + 1, 0),
        v(static_cast<std::size_t>(k) + 1, 0);
    std::vector<int> p(static_cast<std::size_t>(k) + 1, 0),
        way(static_cast<std::size_t>(k) + 1, 0);
    for (int i = 1; i <= k; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<long long> minv(static_cast<std::size_t>(k) + 1, inf);
        std::vector<char> used(static_cast<std::size_t>(k) + 1, 0);
        do {
            used[static_cast<std::size_t>(j0)] = 1;
            const int i0 = p[static_cast<std::size_t>(j0)];
            int j1 = 0;
            long long delta = inf;
            for (int j = 1; j <= k; ++j) {
                if (used[static_cast<std::size_t>(j)]) continue;
                const long long cur = -c[static_cast<std::size_t>(i0 - 1)]
                                        [static_cast<std::size_t>(j - 1)] -
                                      u[static_cast<std::size_t>(i0)] -
                                      v[static_cast<std::size_t>(j)];
                if (cur < minv[static_cast<std::size_t>(j)]) {
                    minv[static_cast<std::size_t>(j)] = cur;
                    way[static_cast<std::size_t>(j)] = j0;
                }
                if (minv[static_cast<std::size_t>(j)] < delta) {
                    delta = minv[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= k; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
                    v[static_cast<std::size_t>(j)] -= delta;
                } else {
                    minv[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (p[static_cast<std::size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<std::size_t>(j0)];
            p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0 != 0);
    }
    long long total = 0;
    for (int j = 1; j <= k; ++j)
        total += c[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)]
                  [static_cast<std::size_t>(j - 1)];
    return total;
}

}  // namespace

int classification_errors(const std::vector<int>& truth, const std::vector<int>& estimate,
                          int k0) {
    if (k0 < 1) raise(errc::bad_group, "k0 must be positive");
    if (truth.size() != estimate.size())
        raise(errc::bad_group, "label vectors have different lengths");
    const std::size_t n = truth.size();
    std::vector<std::vector<long long>> c(
        static_cast<std::size_t>(k0), std::vector<long long>(static_cast<std::size_t>(k0), 0));
    std::vector<char> seen_t(static_cast<std::size_t>(k0), 0),
        seen_e(static_cast<std::size_t>(k0), 0);
    for (std::size_t i = 0; i < n; ++i) {
        const int a = truth[i], b = estimate[i];
        if (a < 0 || a >= k0 || b < 0 || b >= k0)
            raise(errc::bad_group, "label outside [0, k0)");
        seen_t[static_cast<std::size_t>(a)] = 1;
        seen_e[static_cast<std::size_t>(b)] = 1;
        ++c[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
    }
    if (std::count(seen_t.begin(), seen_t.end(), 1) != k0 ||
        std::count(seen_e.begin(), seen_e.end(), 1) != k0)
        raise(errc::cluster_count_mismatch,
              "both partitions must use exactly " + std::to_string(k0) + " groups");

    long long best = 0;
    if (k0 <= 8) {
        std::vector<int> perm(static_cast<std::size_t>(k0));
        std::iota(perm.begin(), perm.end(), 0);
        do {
            long long s = 0;
            for (int j = 0; j < k0; ++j)
                s += c[static_cast<std::size_t>(perm[static_cast<std::size_t>(j)])]
                      [static_cast<std::size_t>(j)];
            best = std::max(best, s);
        } while (std::next_permutation(perm.begin(), perm.end()));
    } else {
        best = assignment_max(c);
    }
    return static_cast<int>(static_cast<long long>(n) - best);
}

namespace {

std::vector<int> labels_from_partition(const std::vector<std::vector<int>>& partition, int n) {
    std::vector<int> labels(static_cast<std::size_t>(n), -1);
    for (std::size_t g = 0; g < partition.size(); ++g)
        for (int member : partition[g]) labels[static_cast<std::size_t>(member)] =
            static_cast<int>(g);
    return labels;
}

MethodOutcome evaluate_method(const DistanceMatrix& dm,
                              const std::vector<std::string>& series_ids, double threshold,
                              const std::vector<int>& truth, int k0) {
    MethodOutcome out;
    const Dendrogram dend = hac_complete_linkage(dm, series_ids);
    const ClusteringResult res = estimate_k0(dend, threshold);
    out.k_hat = res.k_hat;
    out.errors_f = classification_errors(
        truth, labels_from_partition(partition_at_k(dend, k0), dend.n), k0);
    out.ok = true;
    return out;
}

MethodSummary summarize(const std::vector<RepRecord>& reps, int k0,
                        const std::function<const MethodOutcome&(const RepRecord&)>& pick) {
    MethodSummary s;
    std::vector<double> errs;
    int correct = 0;
    for (const RepRecord& r : reps) {
        const MethodOutcome& o = pick(r);
        if (!o.ok) continue;
        ++s.ok_count;
        if (o.k_hat == k0) ++correct;
        errs.push_back(static_cast<double>(o.errors_f));
    }
    const std::size_t total = reps.size();
    s.k_correct_rate = total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
    if (!errs.empty()) {
        s.mean_errors = std::accumulate(errs.begin(), errs.end(), 0.0) /
                        static_cast<double>(errs.size());
        std::sort(errs.begin(), errs.end());
        const std::size_t m = errs.size();
        s.median_errors = (m % 2 == 1) ? errs[m / 2] : 0.5 * (errs[m / 2 - 1] + errs[m / 2]);
    }
    return s;
}

}  // namespace

StudyReport run_study(const StudySetup& setup, std::ostream* progress) {
    if (setup.replications < 1) raise(errc::bad_reps, "need at least 1 replication");
    if (setup.grid.size() == 0) raise(errc::empty_grid, "study grid is empty");
    const GroupStructure truth = equal_blocks(setup.design.n, setup.design.k0);

    // every baseline bandwidth must be one of the grid's levels, so the
    // per-replication smoother work can be shared with the multiscale method
    std::vector<std::vector<double>> baseline_xs;
    for (double h : setup.baseline_bandwidths) {
        const auto lev = std::find_if(setup.grid.levels.begin(), setup.grid.levels.end(),
                                      [&](const BandwidthLevel& l) { return l.h == h; });
        if (lev == setup.grid.levels.end())
            raise(errc::bad_bandwidth,
                  "baseline bandwidth " + std::to_string(h) + " is not a grid level");
        std::vector<double> xs;
        for (std::size_t g = lev->begin; g < lev->end; ++g)
            xs.push_back(setup.grid.points[g].x);
        baseline_xs.push_back(std::move(xs));
    }

    StudyReport report;
    const std::uint64_t qseed = derive_seed(setup.master_seed, seed_tag::quantile);
    {
        const GaussianDesign design =
            build_covariance_cached(setup.grid, setup.kern, setup.cache_dir, setup.use_cache);
        report.threshold_multiscale = quantile_qn(design, setup.design.n, setup.alpha,
                                                  setup.mc_reps, derive_seed(qseed, 0),
                                                  setup.workers);
    }
    for (std::size_t b = 0; b < setup.baseline_bandwidths.size(); ++b) {
        const LocationScaleGrid sub =
            make_grid(baseline_xs[b], {setup.baseline_bandwidths[b]});
        const GaussianDesign design =
            build_covariance_cached(sub, setup.kern, setup.cache_dir, setup.use_cache);
        report.thresholds_baseline.push_back(quantile_qn(design, setup.design.n, setup.alpha,
                                                         setup.mc_reps,
                                                         derive_seed(qseed, b + 1),
                                                         setup.workers));
    }

    report.reps.resize(static_cast<std::size_t>(setup.replications));
    const std::uint64_t rep_base = derive_seed(setup.master_seed, seed_tag::study_rep);
    std::mutex progress_mutex;

    parallel_for(static_cast<std::size_t>(setup.replications), setup.workers,
                 [&](std::size_t r) {
        RepRecord& rec = report.reps[r];
        rec.rep = static_cast<int>(r);
        rec.baselines.resize(setup.baseline_bandwidths.size());

        const PanelData panel = draw_sample(setup.design, derive_seed(rep_base, r));
        const TransformedPanel tp = setup.fixed_effect_adjust ? within_transform(panel)
                                                              : transform_passthrough(panel);
        try {
            const MultiscaleEngine engine(tp, setup.grid, setup.kern, setup.variance_mode,
                                          setup.policy, 1);
            try {
                rec.multiscale = evaluate_method(engine.full_matrix(), panel.series_ids,
                                                 report.threshold_multiscale,
                                                 truth.assignment, setup.design.k0);
            } catch (const Error& e) {
                rec.multiscale.error = e.what();
            }
            for (std::size_t b = 0; b < setup.baseline_bandwidths.size(); ++b) {
                try {
                    rec.baselines[b] = evaluate_method(
                        engine.level_matrix(setup.baseline_bandwidths[b]), panel.series_ids,
                        report.thresholds_baseline[b], truth.assignment, setup.design.k0);
                } catch (const Error& e) {
                    rec.baselines[b].error = e.what();
                }
            }
        } catch (const Error& e) {
            rec.multiscale.error = e.what();  // smoothing itself failed
            for (auto& bout : rec.baselines) bout.error = e.what();
        }

        if (progress) {
            std::lock_guard<std::mutex> lock(progress_mutex);
            *progress << "rep " << (r + 1) << "/" << setup.replications;
            if (rec.multiscale.ok)
                *progress << "  k_hat=" << rec.multiscale.k_hat
                          << "  errors=" << rec.multiscale.errors_f;
            else
                *progress << "  failed: " << rec.multiscale.error;
            *progress << "\n" << std::flush;
        }
    });

    report.summary_multiscale = summarize(
        report.reps, setup.design.k0,
        [](const RepRecord& r) -> const MethodOutcome& { return r.multiscale; });
    for (std::size_t b = 0; b < setup.baseline_bandwidths.size(); ++b)
        report.summary_baselines.push_back(
            summarize(report.reps, setup.design.k0,
                      [b](const RepRecord& r) -> const MethodOutcome& {
                          return r.baselines[b];
                      }));
    return report;
}

namespace {

nlohmann::json outcome_json(const MethodOutcome& o, double threshold) {
    nlohmann::json j;
    j["ok"] = o.ok;
    j["threshold"] = threshold;
    if (o.ok) {
        j["k_hat"] = o.k_hat;
        j["errors_f"] = o.errors_f;
    } else {
        j["error"] = o.error;
    }
    return j;
}

nlohmann::json summary_json(const MethodSummary& s, int total) {
    return nlohmann::json{{"ok_count", s.ok_count},
                          {"failed_count", total - s.ok_count},
                          {"k_correct_rate", s.k_correct_rate},
                          {"mean_errors", s.mean_errors},
                          {"median_errors", s.median_errors}};
}

nlohmann::json histogram_json(const std::vector<RepRecord>& reps,
                              const std::function<const MethodOutcome&(const RepRecord&)>& pick) {
    std::map<int, int> k_counts, e_counts;
    for (const RepRecord& r : reps) {
        const MethodOutcome& o = pick(r);
        if (!o.ok) continue;
        ++k_counts[o.k_hat];
        ++e_counts[o.errors_f];
    }
    nlohmann::json k, e;
    for (auto [key, cnt] : k_counts) k[std::to_string(key)] = cnt;
    for (auto [key, cnt] : e_counts) e[std::to_string(key)] = cnt;
    return nlohmann::json{{"k_hat", k}, {"errors_f", e}};
}

}  // namespace

nlohmann::json study_report_json(const StudySetup& setup, const StudyReport& report) {
    nlohmann::json j;
    j["design"] = {{"n", setup.design.n},
                   {"T", setup.design.T},
                   {"k0", setup.design.k0},
                   {"ar_coeff", setup.design.ar_coeff},
                   {"noise_scale", setup.design.noise_scale}};
    j["grid"] = {{"size", setup.grid.size()},
                 {"h_min", setup.grid.h_min},
                 {"h_max", setup.grid.h_max},
                 {"levels", setup.grid.levels.size()}};
    j["alpha"] = setup.alpha;
    j["mc_reps"] = setup.mc_reps;
    j["replications"] = setup.replications;
    j["master_seed"] = setup.master_seed;
    j["variance_mode"] = to_string(setup.variance_mode);
    j["degeneracy_policy"] = to_string(setup.policy);
    j["kernel"] = setup.kern.name;
    j["fixed_effect_adjust"] = setup.fixed_effect_adjust;
    j["baseline_bandwidths"] = setup.baseline_bandwidths;
    j["thresholds"] = {{"multiscale", report.threshold_multiscale},
                       {"baselines", report.thresholds_baseline}};

    nlohmann::json records = nlohmann::json::array();
    for (const RepRecord& r : report.reps) {
        nlohmann::json rec;
        rec["rep"] = r.rep;
        rec["multiscale"] = outcome_json(r.multiscale, report.threshold_multiscale);
        nlohmann::json bl = nlohmann::json::array();
        for (std::size_t b = 0; b < r.baselines.size(); ++b) {
            nlohmann::json o = outcome_json(r.baselines[b], report.thresholds_baseline[b]);
            o["h"] = setup.baseline_bandwidths[b];
            bl.push_back(std::move(o));
        }
        rec["baselines"] = std::move(bl);
        records.push_back(std::move(rec));
    }
    j["records"] = std::move(records);

    const int total = setup.replications;
    j["summary"]["multiscale"] = summary_json(report.summary_multiscale, total);
    j["histograms"]["multiscale"] = histogram_json(
        report.reps, [](const RepRecord& r) -> const MethodOutcome& { return r.multiscale; });
    nlohmann::json bsum = nlohmann::json::array(), bhist = nlohmann::json::array();
    for (std::size_t b = 0; b < setup.baseline_bandwidths.size(); ++b) {
        nlohmann::json s = summary_json(report.summary_baselines[b], total);
        s["h"] = setup.baseline_bandwidths[b];
        bsum.push_back(std::move(s));
        nlohmann::json hgr = histogram_json(report.reps,
                                            [b](const RepRecord& r) -> const MethodOutcome& {
                                                return r.baselines[b];
                                            });
        hgr["h"] = setup.baseline_bandwidths[b];
        bhist.push_back(std::move(hgr));
    }
    j["summary"]["baselines"] = std::move(bsum);
    j["histograms"]["baselines"] = std::move(bhist);
    return j;
}

}  // namespace curvecluster
