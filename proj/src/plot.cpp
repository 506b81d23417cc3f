#include "paramtrack/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "paramtrack/csv.hpp"
#include "paramtrack/errors.hpp"

namespace paramtrack {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 480.0;
constexpr double kMarginLeft = 72.0;
constexpr double kMarginRight = 24.0;
constexpr double kMarginTop = 40.0;
constexpr double kMarginBottom = 56.0;

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                          "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
constexpr int kPaletteSize = 8;

struct Range {
    double lo = 0.0;
    double hi = 1.0;

    void expand(double v) {
        if (!std::isfinite(v)) return;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void pad() {
        if (hi <= lo) {
            lo -= 0.5;
            hi += 0.5;
        } else {
            double m = 0.05 * (hi - lo);
            lo -= m;
            hi += m;
        }
    }
};

Range fresh_range() {
    Range r;
    r.lo = std::numeric_limits<double>::infinity();
    r.hi = -std::numeric_limits<double>::infinity();
    return r;
}

double nice_step(double span, int target_ticks) {
    double raw = span / std::max(target_ticks, 1);
    double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double mult : {1.0, 2.0, 5.0, 10.0})
        if (raw <= mult * mag) return mult * mag;
    return 10.0 * mag;
}

std::string escape_xml(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        default: out += c;
        }
    }
    return out;
}

class SvgBuilder {
public:
    SvgBuilder(const PlotTable& table) : table_(table) {
        out_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
             << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight
             << "\">\n";
        if (!table.provenance.empty())
            out_ << "<!-- " << escape_xml(table.provenance) << " -->\n";
        out_ << "<rect width=\"" << kWidth << "\" height=\"" << kHeight
             << "\" fill=\"white\"/>\n";
    }

    double sx(double x) const {
        return kMarginLeft + (x - xr_.lo) / (xr_.hi - xr_.lo) * plot_width();
    }
    double sy(double y) const {
        return kHeight - kMarginBottom - (y - yr_.lo) / (yr_.hi - yr_.lo) * plot_height();
    }
    static double plot_width() { return kWidth - kMarginLeft - kMarginRight; }
    static double plot_height() { return kHeight - kMarginTop - kMarginBottom; }

    void set_ranges(Range xr, Range yr) {
        xr.pad();
        yr.pad();
        xr_ = xr;
        yr_ = yr;
    }

    void axes(bool numeric_x) {
        double x0 = kMarginLeft, x1 = kWidth - kMarginRight;
        double y0 = kHeight - kMarginBottom, y1 = kMarginTop;
        out_ << "<g stroke=\"#333\" stroke-width=\"1\" fill=\"none\">\n";
        out_ << line(x0, y0, x1, y0) << line(x0, y0, x0, y1);
        out_ << "</g>\n";
        out_ << "<g font-family=\"sans-serif\" font-size=\"12\" fill=\"#333\">\n";
        // y ticks
        double step = nice_step(yr_.hi - yr_.lo, 6);
        double first = std::ceil(yr_.lo / step) * step;
        for (double v = first; v <= yr_.hi + 1e-12 * step; v += step) {
            double y = sy(v);
            out_ << "<line x1=\"" << format_num(x0 - 4) << "\" y1=\"" << format_num(y)
                 << "\" x2=\"" << format_num(x0) << "\" y2=\"" << format_num(y)
                 << "\" stroke=\"#333\"/>\n";
            out_ << "<text x=\"" << format_num(x0 - 8) << "\" y=\"" << format_num(y + 4)
                 << "\" text-anchor=\"end\">" << format_tick(v) << "</text>\n";
        }
        if (numeric_x) {
            step = nice_step(xr_.hi - xr_.lo, 7);
            first = std::ceil(xr_.lo / step) * step;
            for (double v = first; v <= xr_.hi + 1e-12 * step; v += step) {
                double x = sx(v);
                out_ << "<line x1=\"" << format_num(x) << "\" y1=\"" << format_num(y0)
                     << "\" x2=\"" << format_num(x) << "\" y2=\"" << format_num(y0 + 4)
                     << "\" stroke=\"#333\"/>\n";
                out_ << "<text x=\"" << format_num(x) << "\" y=\"" << format_num(y0 + 18)
                     << "\" text-anchor=\"middle\">" << format_tick(v) << "</text>\n";
            }
        }
        out_ << "</g>\n";
        labels();
    }

    void labels() {
        out_ << "<g font-family=\"sans-serif\" fill=\"#111\">\n";
        if (!table_.title.empty())
            out_ << "<text x=\"" << kWidth / 2 << "\" y=\"22\" font-size=\"15\" "
                 << "text-anchor=\"middle\">" << escape_xml(table_.title) << "</text>\n";
        if (!table_.x_label.empty())
            out_ << "<text x=\"" << (kMarginLeft + plot_width() / 2) << "\" y=\""
                 << kHeight - 14 << "\" font-size=\"13\" text-anchor=\"middle\">"
                 << escape_xml(table_.x_label) << "</text>\n";
        if (!table_.y_label.empty())
            out_ << "<text x=\"18\" y=\"" << (kMarginTop + plot_height() / 2)
                 << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
                 << (kMarginTop + plot_height() / 2) << ")\">" << escape_xml(table_.y_label)
                 << "</text>\n";
        out_ << "</g>\n";
    }

    void legend(const std::vector<std::pair<std::string, std::string>>& entries) {
        if (entries.empty()) return;
        double x = kWidth - kMarginRight - 170;
        double y = kMarginTop + 10;
        out_ << "<g font-family=\"sans-serif\" font-size=\"12\">\n";
        for (const auto& [label, color] : entries) {
            out_ << "<rect x=\"" << x << "\" y=\"" << y - 9 << "\" width=\"14\" height=\"10\" "
                 << "fill=\"" << color << "\"/>\n";
            out_ << "<text x=\"" << x + 20 << "\" y=\"" << y << "\" fill=\"#111\">"
                 << escape_xml(label) << "</text>\n";
            y += 18;
        }
        out_ << "</g>\n";
    }

    void polyline(const PlotSeries& s, const std::string& color, bool dashed) {
        out_ << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\""
             << (dashed ? "2.2" : "1.4") << "\"";
        if (dashed) out_ << " stroke-dasharray=\"7 5\"";
        out_ << " points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (i) out_ << ' ';
            out_ << format_num(sx(s.x[i])) << ',' << format_num(sy(s.y[i]));
        }
        out_ << "\"/>\n";
        if (!s.yerr.empty()) {
            out_ << "<g stroke=\"" << color << "\" stroke-width=\"1\">\n";
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                double x = sx(s.x[i]);
                out_ << line(x, sy(s.y[i] - s.yerr[i]), x, sy(s.y[i] + s.yerr[i]));
                out_ << line(x - 3, sy(s.y[i] - s.yerr[i]), x + 3, sy(s.y[i] - s.yerr[i]));
                out_ << line(x - 3, sy(s.y[i] + s.yerr[i]), x + 3, sy(s.y[i] + s.yerr[i]));
            }
            out_ << "</g>\n";
        }
        // markers help when a sweep has few points
        if (s.x.size() <= 24) {
            out_ << "<g fill=\"" << color << "\">\n";
            for (std::size_t i = 0; i < s.x.size(); ++i)
                out_ << "<circle cx=\"" << format_num(sx(s.x[i])) << "\" cy=\""
                     << format_num(sy(s.y[i])) << "\" r=\"3\"/>\n";
            out_ << "</g>\n";
        }
    }

    void raw(const std::string& fragment) { out_ << fragment; }

    std::string finish() {
        out_ << "</svg>\n";
        return out_.str();
    }

    static std::string line(double x1, double y1, double x2, double y2) {
        std::ostringstream s;
        s << "<line x1=\"" << format_num(x1) << "\" y1=\"" << format_num(y1) << "\" x2=\""
          << format_num(x2) << "\" y2=\"" << format_num(y2) << "\"/>\n";
        return s.str();
    }

    static std::string format_tick(double v) {
        if (v != 0.0 && (std::abs(v) < 1e-3 || std::abs(v) >= 1e5)) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.1e", v);
            return buf;
        }
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.6g", v);
        return buf;
    }

private:
    const PlotTable& table_;
    std::ostringstream out_;
    Range xr_, yr_;
};

std::string render_lines(const PlotTable& table, bool overlay) {
    Range xr = fresh_range(), yr = fresh_range();
    for (const auto& s : table.series) {
        if (s.x.size() != s.y.size() || (!s.yerr.empty() && s.yerr.size() != s.y.size()))
            throw ConfigError("render_plot: series length mismatch");
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            xr.expand(s.x[i]);
            yr.expand(s.y[i] - (s.yerr.empty() ? 0.0 : s.yerr[i]));
            yr.expand(s.y[i] + (s.yerr.empty() ? 0.0 : s.yerr[i]));
        }
    }
    SvgBuilder svg(table);
    svg.set_ranges(xr, yr);
    svg.axes(true);
    std::vector<std::pair<std::string, std::string>> legend;
    for (std::size_t i = 0; i < table.series.size(); ++i) {
        bool dashed = overlay && i == 0; // ground truth first, dashed
        const char* color = overlay && i == 0 ? "#555555" : kPalette[i % kPaletteSize];
        svg.polyline(table.series[i], color, dashed);
        legend.emplace_back(table.series[i].label, color);
    }
    svg.legend(legend);
    return svg.finish();
}

std::string render_bars(const PlotTable& table) {
    const auto n_groups = static_cast<Eigen::Index>(table.groups.size());
    const auto n_series = static_cast<Eigen::Index>(table.bar_series.size());
    if (table.bar_values.rows() != n_groups || table.bar_values.cols() != n_series)
        throw ConfigError("render_plot: bar table shape mismatch");

    Range yr = fresh_range();
    yr.expand(0.0);
    for (Eigen::Index g = 0; g < n_groups; ++g)
        for (Eigen::Index s = 0; s < n_series; ++s) yr.expand(table.bar_values(g, s));
    Range xr;
    xr.lo = 0.0;
    xr.hi = static_cast<double>(n_groups);

    SvgBuilder svg(table);
    svg.set_ranges(xr, yr);
    svg.axes(false);

    const double group_width = SvgBuilder::plot_width() / static_cast<double>(n_groups);
    const double bar_width = 0.8 * group_width / static_cast<double>(n_series);
    std::ostringstream bars;
    for (Eigen::Index g = 0; g < n_groups; ++g) {
        for (Eigen::Index s = 0; s < n_series; ++s) {
            double x = kMarginLeft + static_cast<double>(g) * group_width +
                       0.1 * group_width + static_cast<double>(s) * bar_width;
            double v = table.bar_values(g, s);
            double y = svg.sy(v);
            double y0 = svg.sy(0.0);
            bars << "<rect x=\"" << format_num(x) << "\" y=\"" << format_num(std::min(y, y0))
                 << "\" width=\"" << format_num(bar_width) << "\" height=\""
                 << format_num(std::abs(y0 - y)) << "\" fill=\""
                 << kPalette[s % kPaletteSize] << "\"/>\n";
        }
        double cx = kMarginLeft + (static_cast<double>(g) + 0.5) * group_width;
        bars << "<text x=\"" << format_num(cx) << "\" y=\"" << kHeight - kMarginBottom + 18
             << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#333\" "
             << "text-anchor=\"middle\">" << escape_xml(table.groups[g]) << "</text>\n";
    }
    svg.raw(bars.str());
    std::vector<std::pair<std::string, std::string>> legend;
    for (Eigen::Index s = 0; s < n_series; ++s)
        legend.emplace_back(table.bar_series[s], kPalette[s % kPaletteSize]);
    svg.legend(legend);
    return svg.finish();
}

} // namespace

void render_plot(const PlotTable& table, PlotKind kind, const std::filesystem::path& path) {
    std::string body;
    switch (kind) {
    case PlotKind::Line:
    case PlotKind::Overlay: {
        if (table.series.empty()) throw ConfigError("render_plot: no series");
        for (const auto& s : table.series)
            if (s.x.empty()) throw ConfigError("render_plot: empty series '" + s.label + "'");
        body = render_lines(table, kind == PlotKind::Overlay);
        break;
    }
    case PlotKind::Bar: {
        if (table.groups.empty() || table.bar_series.empty())
            throw ConfigError("render_plot: empty bar table");
        body = render_bars(table);
        break;
    }
    }
    std::ofstream out(path);
    if (!out) throw ConfigError("render_plot: cannot open " + path.string());
    out << body;
    if (!out) throw NumericError("render_plot: write failed for " + path.string());
}

} // namespace paramtrack
