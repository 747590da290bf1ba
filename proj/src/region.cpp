#include "mobkit/region.hpp"

#include "mobkit/csv.hpp"
#include "mobkit/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

namespace mobkit::odm {

namespace {
constexpr double kEarthRadiusKm = 6371.0088;
constexpr double kDegToRad = 0.017453292519943295;
} // namespace

RegionRegistry::RegionRegistry(std::vector<Region> regions) : regions_(std::move(regions))
{
    index_.reserve(regions_.size());
    for (std::uint32_t i = 0; i < regions_.size(); ++i) {
        const Region& r = regions_[i];
        if (r.id.empty()) throw Error("region with empty id");
        if (r.latitude < -90.0 || r.latitude > 90.0)
            throw Error("region " + r.id + ": latitude out of range: " + std::to_string(r.latitude));
        if (r.longitude < -180.0 || r.longitude > 180.0)
            throw Error("region " + r.id + ": longitude out of range: " + std::to_string(r.longitude));
        if (r.population < 0.0) throw Error("region " + r.id + ": negative population");
        if (!index_.emplace(r.id, i).second) throw Error("duplicate region id: " + r.id);
    }

    // Sorted coarse groups define the connectivity matrix layout.
    groups_.reserve(regions_.size());
    for (const Region& r : regions_) {
        const std::string& g = r.group_id.empty() ? r.id : r.group_id;
        groups_.push_back(g);
    }
    std::sort(groups_.begin(), groups_.end());
    groups_.erase(std::unique(groups_.begin(), groups_.end()), groups_.end());
    for (std::uint32_t gi = 0; gi < groups_.size(); ++gi) group_lookup_.emplace(groups_[gi], gi);

    group_index_.resize(regions_.size());
    for (std::uint32_t i = 0; i < regions_.size(); ++i) {
        const std::string& g = regions_[i].group_id.empty() ? regions_[i].id : regions_[i].group_id;
        group_index_[i] = group_lookup_.at(g);
    }

    // lex_rank_[i] = position of regions_[i].id among all ids sorted.
    std::vector<std::uint32_t> order(regions_.size());
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(),
              [this](std::uint32_t a, std::uint32_t b) { return regions_[a].id < regions_[b].id; });
    lex_rank_.resize(regions_.size());
    for (std::uint32_t rank = 0; rank < order.size(); ++rank) lex_rank_[order[rank]] = rank;
}

RegionRegistry RegionRegistry::load_csv(std::istream& in)
{
    CsvReader reader(in);
    std::vector<std::string> fields;
    if (!reader.next(fields)) throw Error("region registry: empty input");
    if (fields.size() != 6 || fields[0] != "id")
        throw Error("region registry: expected header 'id,name,lat,lon,population,group_id'");

    std::vector<Region> regions;
    while (reader.next(fields)) {
        const std::string where = "regions line " + std::to_string(reader.line_number());
        if (fields.size() != 6) throw Error(where + ": expected 6 fields, got " + std::to_string(fields.size()));
        Region r;
        r.id = fields[0];
        r.name = fields[1];
        r.latitude = parse_double(fields[2], where + ", lat");
        r.longitude = parse_double(fields[3], where + ", lon");
        r.population = parse_double(fields[4], where + ", population");
        r.group_id = fields[5];
        regions.push_back(std::move(r));
    }
    return RegionRegistry(std::move(regions));
}

void RegionRegistry::save_csv(std::ostream& out) const
{
    out << "id,name,lat,lon,population,group_id\n";
    for (const Region& r : regions_) {
        out << r.id << ',' << r.name << ',' << format_double(r.latitude) << ',' << format_double(r.longitude) << ','
            << format_double(r.population) << ',' << r.group_id << '\n';
    }
}

std::uint32_t RegionRegistry::index_of(const std::string& id) const
{
    auto it = index_.find(id);
    if (it == index_.end()) throw Error("unknown region id: " + id);
    return it->second;
}

std::uint32_t RegionRegistry::group_index(const std::string& group_id) const
{
    auto it = group_lookup_.find(group_id);
    if (it == group_lookup_.end()) throw Error("unknown group id: " + group_id);
    return it->second;
}

double region_distance(const Region& a, const Region& b)
{
    const double lat1 = a.latitude * kDegToRad;
    const double lat2 = b.latitude * kDegToRad;
    const double dlat = (b.latitude - a.latitude) * kDegToRad;
    const double dlon = (b.longitude - a.longitude) * kDegToRad;
    const double s1 = std::sin(dlat / 2.0);
    const double s2 = std::sin(dlon / 2.0);
    const double h = s1 * s1 + std::cos(lat1) * std::cos(lat2) * s2 * s2;
    return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

} // namespace mobkit::odm
