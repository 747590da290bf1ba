#pragma once

#include "mobkit/leadlag.hpp"

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace mobkit::netgraph {

/// Directed edge: the origin's internal-mobility reduction leads the
/// destination's cumulative-death curve by lag_days. Weight is the R^2 of
/// the shifted simple regression.
struct LeadLagEdge {
    std::string origin;
    std::string destination;
    int lag_days = 0;
    double weight = 0.0; // in [0,1]
    std::set<std::string> flags;
    bool inter_cluster = false;
};

struct LeadLagNetwork {
    std::vector<std::string> nodes; // sorted region ids
    std::vector<LeadLagEdge> edges; // at most one in-edge per destination, no loops
    std::map<std::string, int> clusters;
    std::vector<std::pair<std::string, std::string>> excluded; // (region, reason)

    bool operator==(const LeadLagNetwork& other) const;
};

struct NetworkConfig {
    leadlag::LagConfig lag;
    leadlag::LagQualityConfig quality;
};

/// Runs the pairwise lag scan between every ordered region pair (loops
/// cut) and keeps, per destination, the single origin with the highest
/// shifted correlation. Regions whose series cannot be normalized are
/// excluded and listed. Ties resolve by weight, then origin id.
LeadLagNetwork build_network(const std::map<std::string, leadlag::IrregularSeries>& mobility,
                             const std::map<std::string, leadlag::IrregularSeries>& cumdeaths,
                             const NetworkConfig& config = {}, int threads = 1);

/// Directed-modularity Louvain with seeded node order and deterministic
/// tie-breaking. Canonical labels 0..k-1; isolated nodes get singleton
/// clusters; inter-cluster edges are marked on the returned network.
LeadLagNetwork detect_communities(const LeadLagNetwork& network, std::uint64_t seed);

enum class ExportFormat { Json, EdgeList };

/// JSON (nodes, edges with lag/weight/width/flags/inter_cluster marker,
/// clusters) or the plain-text edge list. Edge width is the display rule
/// 1/max(lag_days, 1).
std::string export_network(const LeadLagNetwork& network, ExportFormat format);

LeadLagNetwork parse_network(const std::string& json_text);

} // namespace mobkit::netgraph
