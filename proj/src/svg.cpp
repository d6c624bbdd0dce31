#include "curvecluster/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "curvecluster/errors.hpp"

namespace curvecluster {

namespace {

std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

std::string escape_xml(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string render_dendrogram_svg(const Dendrogram& dend, double threshold) {
    const int n = dend.n;
    if (n < 1 || static_cast<int>(dend.merges.size()) != n - 1)
        raise(errc::malformed_dendrogram, "dendrogram has inconsistent sizes");

    // leaf order: in-order walk of the final merge tree
    std::vector<int> left(static_cast<std::size_t>(2 * n - 1), -1),
        right(static_cast<std::size_t>(2 * n - 1), -1);
    for (const Merge& m : dend.merges) {
        left[static_cast<std::size_t>(m.id)] = m.left;
        right[static_cast<std::size_t>(m.id)] = m.right;
    }
    std::vector<int> order;
    order.reserve(static_cast<std::size_t>(n));
    if (n == 1) {
        order.push_back(0);
    } else {
        std::vector<int> stack{2 * n - 2};
        while (!stack.empty()) {
            const int id = stack.back();
            stack.pop_back();
            if (id < n) {
                order.push_back(id);
            } else {
                stack.push_back(right[static_cast<std::size_t>(id)]);
                stack.push_back(left[static_cast<std::size_t>(id)]);
            }
        }
    }

    const double width = 960.0, height = 600.0;
    const double ml = 70.0, mr = 20.0, mt = 50.0;
    const bool draw_labels = n <= 40;
    const double mb = draw_labels ? 90.0 : 30.0;
    const double plot_w = width - ml - mr, plot_h = height - mt - mb;

    std::vector<double> slot_x(static_cast<std::size_t>(n));
    const double dx = plot_w / std::max(1, n);
    for (int s = 0; s < n; ++s)
        slot_x[static_cast<std::size_t>(order[static_cast<std::size_t>(s)])] =
            ml + (s + 0.5) * dx;

    std::vector<double> cx(static_cast<std::size_t>(2 * n - 1), 0.0),
        ch(static_cast<std::size_t>(2 * n - 1), dend.singleton_height);
    for (int i = 0; i < n; ++i) cx[static_cast<std::size_t>(i)] = slot_x[static_cast<std::size_t>(i)];
    double h_lo = std::min(dend.singleton_height, threshold);
    double h_hi = std::max(dend.singleton_height, threshold);
    for (const Merge& m : dend.merges) {
        cx[static_cast<std::size_t>(m.id)] = 0.5 * (cx[static_cast<std::size_t>(m.left)] +
                                                    cx[static_cast<std::size_t>(m.right)]);
        ch[static_cast<std::size_t>(m.id)] = m.height;
        h_lo = std::min(h_lo, m.height);
        h_hi = std::max(h_hi, m.height);
    }
    double pad = 0.05 * (h_hi - h_lo);
    if (!(pad > 0.0)) pad = 1.0;
    h_lo -= pad;
    h_hi += pad;
    const auto to_y = [&](double h) { return mt + (h_hi - h) / (h_hi - h_lo) * plot_h; };

    int k_at_threshold = n;
    for (const Merge& m : dend.merges)
        if (m.height <= threshold) --k_at_threshold;

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << width << " " << height
        << "\" font-family=\"sans-serif\">\n";
    svg << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
    svg << "<text x=\"" << width / 2 << "\" y=\"28\" text-anchor=\"middle\" font-size=\"18\">"
        << "complete linkage, K = " << k_at_threshold << " at threshold " << fmt(threshold)
        << "</text>\n";

    // height axis with a handful of ticks
    svg << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
        << mt + plot_h << "\" stroke=\"#888\"/>\n";
    for (int tick = 0; tick <= 4; ++tick) {
        const double hv = h_lo + (h_hi - h_lo) * tick / 4.0;
        const double y = to_y(hv);
        svg << "<line x1=\"" << ml - 5 << "\" y1=\"" << y << "\" x2=\"" << ml << "\" y2=\"" << y
            << "\" stroke=\"#888\"/>\n";
        svg << "<text x=\"" << ml - 9 << "\" y=\"" << y + 4
            << "\" text-anchor=\"end\" font-size=\"12\" fill=\"#444\">" << fmt(hv)
            << "</text>\n";
    }

    svg << "<g stroke=\"black\" stroke-width=\"1.2\" fill=\"none\">\n";
    for (const Merge& m : dend.merges) {
        const double y = to_y(m.height);
        const double xl = cx[static_cast<std::size_t>(m.left)];
        const double xr = cx[static_cast<std::size_t>(m.right)];
        svg << "<path d=\"M " << xl << " " << to_y(ch[static_cast<std::size_t>(m.left)]) << " V "
            << y << " H " << xr << " V " << to_y(ch[static_cast<std::size_t>(m.right)])
            << "\"/>\n";
    }
    svg << "</g>\n";

    const double ty = to_y(threshold);
    svg << "<line x1=\"" << ml << "\" y1=\"" << ty << "\" x2=\"" << ml + plot_w << "\" y2=\""
        << ty << "\" stroke=\"#c0392b\" stroke-dasharray=\"6 4\" stroke-width=\"1.5\"/>\n";
    svg << "<text x=\"" << ml + plot_w << "\" y=\"" << ty - 6
        << "\" text-anchor=\"end\" font-size=\"12\" fill=\"#c0392b\">threshold "
        << fmt(threshold) << "</text>\n";

    if (draw_labels) {
        for (int i = 0; i < n; ++i) {
            const double x = cx[static_cast<std::size_t>(i)];
            const double y = mt + plot_h + 12;
            const std::string label =
                i < static_cast<int>(dend.leaf_labels.size()) ? dend.leaf_labels[static_cast<std::size_t>(i)]
                                                              : std::to_string(i);
            svg << "<text x=\"" << x << "\" y=\"" << y << "\" font-size=\"11\" fill=\"#222\""
                << " text-anchor=\"end\" transform=\"rotate(-45 " << x << " " << y << ")\">"
                << escape_xml(label) << "</text>\n";
        }
    }

    svg << "</svg>\n";
    return svg.str();
}

void write_dendrogram_svg(const Dendrogram& dend, double threshold, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) raise(errc::io_error, "cannot open " + path + " for writing");
    out << render_dendrogram_svg(dend, threshold);
    if (!out) raise(errc::io_error, "failed writing " + path);
}

}  // namespace curvecluster
