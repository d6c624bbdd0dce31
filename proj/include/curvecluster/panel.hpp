#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace curvecluster {

// Balanced panel of n series observed at T common time indices.  Row-major
// n x T storage; row i holds series i in time order.
struct PanelData {
    int n = 0;
    int T = 0;
    std::vector<double> y;  // n*T
    std::vector<double> x;  // n*T
    std::vector<std::string> series_ids;

    double y_at(int i, int t) const { return y[static_cast<std::size_t>(i) * T + t]; }
    double x_at(int i, int t) const { return x[static_cast<std::size_t>(i) * T + t]; }
    std::span<const double> y_row(int i) const {
        return {y.data() + static_cast<std::size_t>(i) * T, static_cast<std::size_t>(T)};
    }
    std::span<const double> x_row(int i) const {
        return {x.data() + static_cast<std::size_t>(i) * T, static_cast<std::size_t>(T)};
    }
};

// Structural checks: n >= 2, T >= 1, consistent array sizes, design points
// inside [0, 1], finite values.  Throws the matching errc on violation.
void validate_panel(const PanelData& panel);

// Reads the `series_id,t,x,y` schema (header required).  Series appear in
// first-appearance order; within a series rows are sorted by t.  Every series
// must cover the same set of positive integer time indices exactly once.
PanelData read_panel_csv(const std::string& path);
PanelData read_panel_csv(std::istream& in, const std::string& origin);

// Two-way demeaned panel: for each series i,
//   ystar[i][t] = y[i][t] - rowmean_i - crossmean_t(i) + grandmean(i)
// where crossmean_t(i) averages the other series at time t and grandmean(i)
// averages them over all times.  Removes additive series and time effects;
// each transformed row sums to zero.
struct TransformedPanel {
    int n = 0;
    int T = 0;
    std::vector<double> ystar;  // n*T
    std::vector<double> x;      // n*T, copied from the panel
    std::vector<std::string> series_ids;
    std::vector<double> row_means;  // per series
    std::vector<double> col_sums;   // per time index, over all series
    double total_sum = 0.0;

    double ystar_at(int i, int t) const { return ystar[static_cast<std::size_t>(i) * T + t]; }
    std::span<const double> ystar_row(int i) const {
        return {ystar.data() + static_cast<std::size_t>(i) * T, static_cast<std::size_t>(T)};
    }
    std::span<const double> x_row(int i) const {
        return {x.data() + static_cast<std::size_t>(i) * T, static_cast<std::size_t>(T)};
    }
    // leave-one-out means, recomputable from the stored sums
    double cross_mean(int i, int t) const {
        return (col_sums[t] - ystar_unsafe_y(i, t)) / (n - 1);
    }
    double grand_mean(int i) const;

  private:
    friend TransformedPanel within_transform(const PanelData&);
    friend TransformedPanel transform_passthrough(const PanelData&);
    double ystar_unsafe_y(int i, int t) const;  // original y needed by cross_mean
    std::vector<double> y_copy_;                // original y rows for the accessors
};

TransformedPanel within_transform(const PanelData& panel);

// Wraps a panel without removing anything (ystar = y), for data known to be
// free of additive series/time effects; the smoothing pipeline downstream is
// identical.  The stored means/sums still describe the actual data.
TransformedPanel transform_passthrough(const PanelData& panel);

}  // namespace curvecluster
