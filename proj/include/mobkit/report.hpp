#pragma once

#include "mobkit/leadlag.hpp"
#include "mobkit/netgraph.hpp"
#include "mobkit/regress.hpp"

#include <string>
#include <vector>

namespace mobkit::report {

/// Collects sweep tables, lag estimates and networks into plot-ready data:
/// a long-form CSV (panel,series,x,y) and a static SVG with one panel per
/// input family (goodness-of-fit curves, lag contrast curves, lag
/// histogram). Empty input produces a valid empty report.
class ReportBuilder {
public:
    void add_sweep(const std::vector<regress::SweepEntry>& entries, const std::string& label);
    void add_lag_estimate(const leadlag::LagEstimate& estimate, const std::string& label);
    void add_network(const netgraph::LeadLagNetwork& network, const std::string& label);

    std::string long_csv() const;
    std::string svg() const;

private:
    struct Point {
        double x;
        double y;
        std::string x_label; // ISO date for sweep curves, numeric otherwise
    };
    struct Curve {
        std::string panel;
        std::string name;
        std::vector<Point> points;
    };

    std::vector<Curve> curves_;
    std::vector<std::pair<std::string, std::vector<int>>> lag_sets_; // label -> lags
};

} // namespace mobkit::report
