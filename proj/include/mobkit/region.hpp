#pragma once

#include "mobkit/dates.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

namespace mobkit::odm {

/// One geographic unit at the fine (ODM cell) level. `group_id` names the
/// coarse statistical unit the cell aggregates into; for data already at
/// the coarse level, group_id == id.
struct Region {
    std::string id;
    std::string name;
    double latitude  = 0.0; // degrees, [-90, 90]
    double longitude = 0.0; // degrees, [-180, 180]
    double population = 0.0;
    std::string group_id;
};

/// Immutable set of regions with id lookup and a fixed ordering of the
/// coarse groups (lexicographic, so output layouts never depend on file
/// order).
class RegionRegistry {
public:
    explicit RegionRegistry(std::vector<Region> regions);

    /// Reads `id,name,lat,lon,population,group_id` CSV.
    static RegionRegistry load_csv(std::istream& in);
    void save_csv(std::ostream& out) const;

    std::size_t size() const { return regions_.size(); }
    const Region& at(std::uint32_t index) const { return regions_[index]; }
    const std::vector<Region>& regions() const { return regions_; }

    bool contains(const std::string& id) const { return index_.count(id) != 0; }
    std::uint32_t index_of(const std::string& id) const; // throws on unknown id

    /// Rank of a region in lexicographic id order; used to fix summation
    /// order independently of registry file order.
    std::uint32_t lex_rank(std::uint32_t index) const { return lex_rank_[index]; }

    const std::vector<std::string>& groups() const { return groups_; } // sorted coarse ids
    std::uint32_t group_of(std::uint32_t region_index) const { return group_index_[region_index]; }
    std::uint32_t group_index(const std::string& group_id) const; // throws on unknown group

private:
    std::vector<Region> regions_;
    std::unordered_map<std::string, std::uint32_t> index_;
    std::vector<std::uint32_t> lex_rank_;
    std::vector<std::string> groups_;
    std::unordered_map<std::string, std::uint32_t> group_lookup_;
    std::vector<std::uint32_t> group_index_;
};

/// Great-circle distance in kilometers between region centroids
/// (haversine, sphere radius 6371.0088 km).
double region_distance(const Region& a, const Region& b);

} // namespace mobkit::odm
