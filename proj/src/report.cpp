#include "mobkit/report.hpp"

#include "mobkit/csv.hpp"
#include "mobkit/dates.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

namespace mobkit::report {

namespace {

constexpr int kWidth = 860;
constexpr int kPanelHeight = 240;
constexpr int kMarginLeft = 70;
constexpr int kMarginRight = 20;
constexpr int kMarginTop = 34;
constexpr int kMarginBottom = 34;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

} // namespace

void ReportBuilder::add_sweep(const std::vector<regress::SweepEntry>& entries, const std::string& label)
{
    std::map<std::string, Curve> by_kind;
    for (const auto& e : entries) {
        if (e.skipped) continue;
        const std::string name = label + "/" + regress::model_kind_name(e.kind);
        Curve& c = by_kind[name];
        c.panel = "r_squared";
        c.name = name;
        c.points.push_back({static_cast<double>(e.date.days()), e.fit.r_squared, e.date.to_string()});
    }
    for (auto& [name, curve] : by_kind) curves_.push_back(std::move(curve));
}

void ReportBuilder::add_lag_estimate(const leadlag::LagEstimate& estimate, const std::string& label)
{
    Curve c;
    c.panel = "contrast";
    c.name = label;
    for (std::size_t i = 0; i < estimate.grid.size(); ++i) {
        if (estimate.excluded[i] || std::isnan(estimate.contrast[i])) continue;
        c.points.push_back({estimate.grid[i], estimate.contrast[i], fmt(estimate.grid[i])});
    }
    curves_.push_back(std::move(c));
}

void ReportBuilder::add_network(const netgraph::LeadLagNetwork& network, const std::string& label)
{
    std::vector<int> lags;
    for (const auto& e : network.edges) lags.push_back(e.lag_days);
    lag_sets_.push_back({label, std::move(lags)});
}

std::string ReportBuilder::long_csv() const
{
    std::ostringstream out;
    out << "panel,series,x,y\n";
    for (const Curve& c : curves_) {
        for (const Point& p : c.points) {
            out << c.panel << ',' << c.name << ',' << p.x_label << ',' << format_double(p.y) << '\n';
        }
    }
    for (const auto& [label, lags] : lag_sets_) {
        std::map<int, int> hist;
        for (int lag : lags) ++hist[lag];
        for (const auto& [lag, count] : hist) {
            out << "lag_histogram," << label << ',' << lag << ',' << count << '\n';
        }
    }
    return out.str();
}

std::string ReportBuilder::svg() const
{
    // Panels in fixed order; absent families are simply not drawn.
    struct Panel {
        std::string id;
        std::string title;
        std::vector<const Curve*> curves;
    };
    std::vector<Panel> panels;
    for (const char* id : {"r_squared", "contrast"}) {
        Panel p;
        p.id = id;
        p.title = std::string(id) == "r_squared" ? "Goodness of fit over time" : "Lag contrast";
        for (const Curve& c : curves_) {
            if (c.panel == id) p.curves.push_back(&c);
        }
        if (!p.curves.empty()) panels.push_back(std::move(p));
    }
    const bool with_hist = !lag_sets_.empty();
    const int n_panels = static_cast<int>(panels.size()) + (with_hist ? 1 : 0);
    const int height = std::max(60, n_panels * kPanelHeight + 20);

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << height
        << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (n_panels == 0) {
        out << "<text x=\"20\" y=\"35\">no data</text>\n</svg>\n";
        return out.str();
    }

    int top = 10;
    auto draw_frame = [&](const std::string& title, double x0, double x1, double y0, double y1, auto x_of,
                          auto y_of, const std::function<std::string(double)>& x_fmt) {
        out << "<text x=\"" << kMarginLeft << "\" y=\"" << top + 14 << "\" font-size=\"13\">" << title
            << "</text>\n";
        const int px0 = kMarginLeft, px1 = kWidth - kMarginRight;
        const int py0 = top + kPanelHeight - kMarginBottom, py1 = top + kMarginTop;
        out << "<line x1=\"" << px0 << "\" y1=\"" << py0 << "\" x2=\"" << px1 << "\" y2=\"" << py0
            << "\" stroke=\"black\"/>\n";
        out << "<line x1=\"" << px0 << "\" y1=\"" << py0 << "\" x2=\"" << px0 << "\" y2=\"" << py1
            << "\" stroke=\"black\"/>\n";
        for (int k = 0; k <= 4; ++k) {
            const double xv = x0 + (x1 - x0) * k / 4.0;
            const double yv = y0 + (y1 - y0) * k / 4.0;
            out << "<text x=\"" << x_of(xv) << "\" y=\"" << py0 + 16 << "\" text-anchor=\"middle\">" << x_fmt(xv)
                << "</text>\n";
            out << "<text x=\"" << px0 - 6 << "\" y=\"" << y_of(yv) + 4 << "\" text-anchor=\"end\">" << fmt(yv)
                << "</text>\n";
        }
    };
    const auto number_fmt = [](double v) { return fmt(v); };
    const auto date_fmt = [](double v) { return Date(static_cast<std::int64_t>(std::llround(v))).to_string(); };

    for (const Panel& panel : panels) {
        double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
        for (const Curve* c : panel.curves) {
            for (const Point& p : c->points) {
                x0 = std::min(x0, p.x);
                x1 = std::max(x1, p.x);
                y0 = std::min(y0, p.y);
                y1 = std::max(y1, p.y);
            }
        }
        if (x1 <= x0) x1 = x0 + 1;
        if (y1 <= y0) y1 = y0 + 1;
        const int px0 = kMarginLeft, px1 = kWidth - kMarginRight;
        const int py0 = top + kPanelHeight - kMarginBottom, py1 = top + kMarginTop;
        auto x_of = [&](double v) { return px0 + (v - x0) / (x1 - x0) * (px1 - px0); };
        auto y_of = [&](double v) { return py0 - (v - y0) / (y1 - y0) * (py0 - py1); };
        draw_frame(panel.title, x0, x1, y0, y1, x_of, y_of, panel.id == "r_squared" ? date_fmt : number_fmt);

        int color = 0;
        int legend_y = top + kMarginTop + 4;
        for (const Curve* c : panel.curves) {
            const char* stroke = kPalette[color % 6];
            out << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"1.5\" points=\"";
            for (const Point& p : c->points) out << fmt(x_of(p.x)) << ',' << fmt(y_of(p.y)) << ' ';
            out << "\"/>\n";
            out << "<text x=\"" << px1 - 4 << "\" y=\"" << legend_y << "\" text-anchor=\"end\" fill=\"" << stroke
                << "\">" << c->name << "</text>\n";
            legend_y += 14;
            ++color;
        }
        top += kPanelHeight;
    }

    if (with_hist) {
        std::map<int, int> hist;
        for (const auto& [label, lags] : lag_sets_) {
            for (int lag : lags) ++hist[lag];
        }
        int max_count = 1, lag_lo = 0, lag_hi = 1;
        if (!hist.empty()) {
            lag_lo = hist.begin()->first;
            lag_hi = hist.rbegin()->first;
            for (const auto& [lag, count] : hist) max_count = std::max(max_count, count);
        }
        if (lag_hi <= lag_lo) lag_hi = lag_lo + 1;
        const int px0 = kMarginLeft, px1 = kWidth - kMarginRight;
        const int py0 = top + kPanelHeight - kMarginBottom, py1 = top + kMarginTop;
        auto x_of = [&](double v) { return px0 + (v - lag_lo) / double(lag_hi - lag_lo + 1) * (px1 - px0); };
        auto y_of = [&](double v) { return py0 - v / double(max_count) * (py0 - py1); };
        draw_frame("Lag histogram (days)", lag_lo, lag_hi, 0, max_count, x_of, y_of, number_fmt);
        const double bar_w = std::max(2.0, (px1 - px0) / double(lag_hi - lag_lo + 1) - 2.0);
        for (const auto& [lag, count] : hist) {
            out << "<rect x=\"" << fmt(x_of(lag)) << "\" y=\"" << fmt(y_of(count)) << "\" width=\"" << fmt(bar_w)
                << "\" height=\"" << fmt(py0 - y_of(count)) << "\" fill=\"#1f77b4\"/>\n";
        }
    }

    out << "</svg>\n";
    return out.str();
}

} // namespace mobkit::report
