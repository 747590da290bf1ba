#include "mobkit/connectivity.hpp"

#include "mobkit/csv.hpp"
#include "mobkit/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <ostream>

namespace mobkit::odm {

double ConnectivityMatrix::total() const
{
    double t = 0.0;
    for (double v : values) t += v;
    return t;
}

ConnectivityMatrix aggregate_connectivity(const ODMSeries& series, const DateRange& period)
{
    if (!series.date_range().contains(period)) {
        throw Error("aggregation period " + period.start.to_string() + ".." + period.end.to_string() +
                    " outside series range " + series.date_range().start.to_string() + ".." +
                    series.date_range().end.to_string());
    }
    const RegionRegistry& reg = series.registry();
    const std::size_t n = reg.groups().size();

    ConnectivityMatrix out;
    out.period = period;
    out.groups = reg.groups();
    out.values.assign(n * n, 0.0);

    // Records are sorted by (date, origin id, destination id), so each
    // cell accumulates in a fixed order regardless of caller context.
    for (const ODMRecord& r : series.records()) {
        if (r.date < period.start || r.date > period.end) continue;
        out.values[reg.group_of(r.origin) * n + reg.group_of(r.destination)] += r.count;
    }
    const double days = static_cast<double>(period.length());
    for (double& v : out.values) v /= days;
    return out;
}

std::vector<ConnectivityMatrix> aggregate_weekly(const ODMSeries& series)
{
    std::vector<ConnectivityMatrix> out;
    for (const DateRange& week : weekly_periods(series.date_range())) {
        out.push_back(aggregate_connectivity(series, week));
    }
    return out;
}

std::map<std::string, double> internal_mobility(const ConnectivityMatrix& matrix)
{
    std::map<std::string, double> out;
    for (std::size_t g = 0; g < matrix.groups.size(); ++g) out[matrix.groups[g]] = matrix.at(g, g);
    return out;
}

InternalMobilitySeries internal_mobility_series(const std::vector<ConnectivityMatrix>& weekly)
{
    InternalMobilitySeries out;
    if (weekly.empty()) return out;
    out.groups = weekly.front().groups;
    for (const ConnectivityMatrix& m : weekly) {
        if (m.groups != out.groups) throw Error("internal mobility series: group sets differ between periods");
        if (!out.period_starts.empty() && m.period.start <= out.period_starts.back())
            throw Error("internal mobility series: periods not in chronological order");
        out.period_starts.push_back(m.period.start);
        std::vector<double> diag(m.groups.size());
        for (std::size_t g = 0; g < m.groups.size(); ++g) diag[g] = m.at(g, g);
        out.values.push_back(std::move(diag));
    }
    return out;
}

std::vector<double> InternalMobilitySeries::series_for(const std::string& group_id) const
{
    auto it = std::find(groups.begin(), groups.end(), group_id);
    if (it == groups.end()) throw Error("internal mobility series: unknown group " + group_id);
    const std::size_t g = static_cast<std::size_t>(it - groups.begin());
    std::vector<double> out;
    out.reserve(values.size());
    for (const auto& row : values) out.push_back(row[g]);
    return out;
}

std::string ConnectivityMatrix::to_json() const
{
    nlohmann::json j;
    j["period_start"] = period.start.to_string();
    j["period_end"] = period.end.to_string();
    j["groups"] = groups;
    j["values"] = values;
    return j.dump(2) + "\n";
}

ConnectivityMatrix ConnectivityMatrix::from_json(const std::string& text)
{
    nlohmann::json j = nlohmann::json::parse(text);
    ConnectivityMatrix m;
    m.period.start = Date::parse(j.at("period_start").get<std::string>());
    m.period.end = Date::parse(j.at("period_end").get<std::string>());
    m.groups = j.at("groups").get<std::vector<std::string>>();
    m.values = j.at("values").get<std::vector<double>>();
    if (m.values.size() != m.groups.size() * m.groups.size())
        throw Error("connectivity JSON: values size does not match groups");
    return m;
}

void ConnectivityMatrix::write_long_csv(std::ostream& out) const
{
    out << "origin,destination,value\n";
    for (std::size_t a = 0; a < groups.size(); ++a) {
        for (std::size_t b = 0; b < groups.size(); ++b) {
            out << groups[a] << ',' << groups[b] << ',' << format_double(at(a, b)) << '\n';
        }
    }
}

} // namespace mobkit::odm
