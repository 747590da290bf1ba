#pragma once

#include "mobkit/dates.hpp"
#include "mobkit/odm.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace mobkit::odm {

/// Daily-average movement counts between coarse groups over a period:
/// cell (A,B) sums all fine-cell flows i->j with group(i)=A, group(j)=B,
/// divided by the number of days in the period. Missing cells count as 0.
struct ConnectivityMatrix {
    DateRange period;
    std::vector<std::string> groups; // ordered coarse ids (lexicographic)
    std::vector<double> values;      // row-major, size = groups^2

    double at(std::size_t origin_group, std::size_t dest_group) const
    {
        return values[origin_group * groups.size() + dest_group];
    }
    double& at(std::size_t origin_group, std::size_t dest_group)
    {
        return values[origin_group * groups.size() + dest_group];
    }
    double total() const;

    std::string to_json() const;
    static ConnectivityMatrix from_json(const std::string& text);
    void write_long_csv(std::ostream& out) const; // origin,destination,value
};

/// Sums fine-cell flows into coarse group cells and averages over the days
/// of `period`. Requires period inside the series date range.
ConnectivityMatrix aggregate_connectivity(const ODMSeries& series, const DateRange& period);

/// One matrix per weekly window of the series range (last window may be
/// shorter and is averaged over its own day count).
std::vector<ConnectivityMatrix> aggregate_weekly(const ODMSeries& series);

/// Diagonal of a connectivity matrix: movements staying inside each group.
std::map<std::string, double> internal_mobility(const ConnectivityMatrix& matrix);

/// Diagonals of consecutive matrices stacked into per-group time series.
struct InternalMobilitySeries {
    std::vector<Date> period_starts;             // chronological
    std::vector<std::string> groups;             // shared group order
    std::vector<std::vector<double>> values;     // [period][group]

    std::vector<double> series_for(const std::string& group_id) const;
};

InternalMobilitySeries internal_mobility_series(const std::vector<ConnectivityMatrix>& weekly);

} // namespace mobkit::odm
