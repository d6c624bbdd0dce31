#include "curvecluster/panel.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "curvecluster/errors.hpp"

namespace curvecluster {

void validate_panel(const PanelData& panel) {
    if (panel.n < 2)
        raise(errc::too_few_series, "need at least 2 series, got " + std::to_string(panel.n));
    if (panel.T < 1) raise(errc::unbalanced_panel, "panel has no time periods");
    const std::size_t cells = static_cast<std::size_t>(panel.n) * panel.T;
    if (panel.y.size() != cells || panel.x.size() != cells ||
        panel.series_ids.size() != static_cast<std::size_t>(panel.n))
        raise(errc::unbalanced_panel, "panel array sizes do not match n*T");
    for (int i = 0; i < panel.n; ++i) {
        for (int t = 0; t < panel.T; ++t) {
            const double xv = panel.x_at(i, t);
            const double yv = panel.y_at(i, t);
            if (!std::isfinite(xv) || xv < 0.0 || xv > 1.0)
                raise(errc::out_of_support, "design point x=" + std::to_string(xv) +
                                                " at series '" + panel.series_ids[i] + "', t=" +
                                                std::to_string(t + 1) + " is outside [0, 1]");
            if (!std::isfinite(yv))
                raise(errc::io_error, "non-finite response at series '" + panel.series_ids[i] +
                                          "', t=" + std::to_string(t + 1));
        }
    }
}

namespace {

struct CsvRow {
    std::string id;
    long long t;
    double x;
    double y;
};

std::vector<std::string> split_comma(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        std::string field = line.substr(start, pos == std::string::npos ? pos : pos - start);
        // trim surrounding blanks
        const auto b = field.find_first_not_of(" \t\r");
        const auto e = field.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

double parse_double(const std::string& s, const std::string& what, std::size_t line_no,
                    const std::string& origin) {
    double v = 0.0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        raise(errc::io_error, origin + ":" + std::to_string(line_no) + ": cannot parse " + what +
                                  " value '" + s + "'");
    return v;
}

long long parse_time(const std::string& s, std::size_t line_no, const std::string& origin) {
    long long v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || v <= 0)
        raise(errc::io_error, origin + ":" + std::to_string(line_no) +
                                  ": time index must be a positive integer, got '" + s + "'");
    return v;
}

}  // namespace

PanelData read_panel_csv(std::istream& in, const std::string& origin) {
    std::string line;
    if (!std::getline(in, line)) raise(errc::io_error, origin + ": empty file");
    {
        const auto header = split_comma(line);
        if (header.size() != 4 || header[0] != "series_id" || header[1] != "t" ||
            header[2] != "x" || header[3] != "y")
            raise(errc::io_error, origin + ": expected header 'series_id,t,x,y'");
    }

    std::vector<std::string> ids;                      // first-appearance order
    std::map<std::string, std::size_t> id_index;
    std::vector<std::vector<CsvRow>> rows_by_series;

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_comma(line);
        if (fields.size() != 4)
            raise(errc::io_error,
                  origin + ":" + std::to_string(line_no) + ": expected 4 fields, got " +
                      std::to_string(fields.size()));
        CsvRow row;
        row.id = fields[0];
        row.t = parse_time(fields[1], line_no, origin);
        row.x = parse_double(fields[2], "x", line_no, origin);
        row.y = parse_double(fields[3], "y", line_no, origin);

        auto [it, inserted] = id_index.try_emplace(row.id, ids.size());
        if (inserted) {
            ids.push_back(row.id);
            rows_by_series.emplace_back();
        }
        rows_by_series[it->second].push_back(row);
    }

    if (ids.size() < 2)
        raise(errc::too_few_series,
              origin + ": need at least 2 series, got " + std::to_string(ids.size()));

    for (std::size_t i = 0; i < ids.size(); ++i) {
        auto& rows = rows_by_series[i];
        std::sort(rows.begin(), rows.end(), [](const CsvRow& a, const CsvRow& b) { return a.t < b.t; });
        for (std::size_t k = 1; k < rows.size(); ++k)
            if (rows[k].t == rows[k - 1].t)
                raise(errc::duplicate_observation, origin + ": series '" + ids[i] +
                                                       "' has two rows for t=" +
                                                       std::to_string(rows[k].t));
    }

    // balance: identical time-index sets across series
    const auto& reference = rows_by_series[0];
    for (std::size_t i = 1; i < ids.size(); ++i) {
        const auto& rows = rows_by_series[i];
        if (rows.size() != reference.size())
            raise(errc::unbalanced_panel, origin + ": series '" + ids[i] + "' has " +
                                              std::to_string(rows.size()) + " rows but '" +
                                              ids[0] + "' has " +
                                              std::to_string(reference.size()));
        for (std::size_t k = 0; k < rows.size(); ++k)
            if (rows[k].t != reference[k].t)
                raise(errc::unbalanced_panel,
                      origin + ": series '" + ids[i] + "' covers t=" + std::to_string(rows[k].t) +
                          " where '" + ids[0] + "' covers t=" + std::to_string(reference[k].t));
    }

    PanelData panel;
    panel.n = static_cast<int>(ids.size());
    panel.T = static_cast<int>(reference.size());
    panel.series_ids = ids;
    panel.y.resize(static_cast<std::size_t>(panel.n) * panel.T);
    panel.x.resize(static_cast<std::size_t>(panel.n) * panel.T);
    for (int i = 0; i < panel.n; ++i) {
        for (int t = 0; t < panel.T; ++t) {
            panel.y[static_cast<std::size_t>(i) * panel.T + t] = rows_by_series[i][t].y;
            panel.x[static_cast<std::size_t>(i) * panel.T + t] = rows_by_series[i][t].x;
        }
    }
    validate_panel(panel);
    return panel;
}

PanelData read_panel_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(errc::io_error, "cannot open '" + path + "'");
    return read_panel_csv(in, path);
}

double TransformedPanel::ystar_unsafe_y(int i, int t) const {
    return y_copy_[static_cast<std::size_t>(i) * T + t];
}

double TransformedPanel::grand_mean(int i) const {
    double row_sum = 0.0;
    for (int t = 0; t < T; ++t) row_sum += ystar_unsafe_y(i, t);
    return (total_sum - row_sum) / (static_cast<double>(n - 1) * T);
}

TransformedPanel within_transform(const PanelData& panel) {
    validate_panel(panel);
    const int n = panel.n, T = panel.T;

    TransformedPanel tp;
    tp.n = n;
    tp.T = T;
    tp.series_ids = panel.series_ids;
    tp.x = panel.x;
    tp.y_copy_ = panel.y;
    tp.ystar.resize(panel.y.size());
    tp.row_means.resize(n);
    tp.col_sums.assign(T, 0.0);

    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int t = 0; t < T; ++t) acc += panel.y_at(i, t);
        tp.row_means[i] = acc / T;
    }
    for (int t = 0; t < T; ++t) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i) acc += panel.y_at(i, t);
        tp.col_sums[t] = acc;
    }
    tp.total_sum = 0.0;
    for (double v : tp.col_sums) tp.total_sum += v;

    for (int i = 0; i < n; ++i) {
        const double gm = tp.grand_mean(i);
        const double rm = tp.row_means[i];
        for (int t = 0; t < T; ++t) {
            const double cm = (tp.col_sums[t] - panel.y_at(i, t)) / (n - 1);
            tp.ystar[static_cast<std::size_t>(i) * T + t] = panel.y_at(i, t) - rm - cm + gm;
        }
    }
    return tp;
}

TransformedPanel transform_passthrough(const PanelData& panel) {
    validate_panel(panel);
    const int n = panel.n, T = panel.T;

    TransformedPanel tp;
    tp.n = n;
    tp.T = T;
    tp.series_ids = panel.series_ids;
    tp.x = panel.x;
    tp.y_copy_ = panel.y;
    tp.ystar = panel.y;
    tp.row_means.resize(n);
    tp.col_sums.assign(T, 0.0);
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int t = 0; t < T; ++t) acc += panel.y_at(i, t);
        tp.row_means[i] = acc / T;
    }
    for (int t = 0; t < T; ++t) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i) acc += panel.y_at(i, t);
        tp.col_sums[t] = acc;
    }
    tp.total_sum = 0.0;
    for (double v : tp.col_sums) tp.total_sum += v;
    return tp;
}

}  // namespace curvecluster
