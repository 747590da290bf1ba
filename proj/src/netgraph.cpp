#include "mobkit/netgraph.hpp"

#include "mobkit/error.hpp"
#include "mobkit/parallel.hpp"
#include "mobkit/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>

namespace mobkit::netgraph {

namespace {

struct PairResult {
    bool valid = false;
    double correlation = 0.0;
    int lag_days = 0;
    double weight = 0.0;
    std::set<std::string> flags;
};

// Weighted directed graph over node indices, built once per clustering run.
struct Graph {
    std::size_t n = 0;
    std::vector<std::vector<std::pair<std::size_t, double>>> out; // i -> (j, w)
    std::vector<std::vector<std::pair<std::size_t, double>>> in;  // j -> (i, w)
    std::vector<double> k_out, k_in;
    double total = 0.0;

    void add_edge(std::size_t i, std::size_t j, double w)
    {
        out[i].push_back({j, w});
        in[j].push_back({i, w});
        k_out[i] += w;
        k_in[j] += w;
        total += w;
    }
};

// One Louvain level: local moving until stable. Returns node -> community.
std::vector<std::size_t> local_moving(const Graph& g, Rng& rng)
{
    std::vector<std::size_t> community(g.n);
    std::iota(community.begin(), community.end(), std::size_t{0});
    if (g.total <= 0.0) return community;

    std::vector<double> comm_in(g.k_in), comm_out(g.k_out);
    const double m = g.total;

    std::vector<std::size_t> order(g.n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    bool moved = true;
    int guard = 0;
    while (moved && guard++ < 100) {
        moved = false;
        // Fisher-Yates with the seeded stream; deterministic pass order.
        for (std::size_t i = g.n; i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(rng.next_u64() % i);
            std::swap(order[i - 1], order[j]);
        }
        for (std::size_t node : order) {
            const std::size_t old_c = community[node];
            comm_in[old_c] -= g.k_in[node];
            comm_out[old_c] -= g.k_out[node];

            // Directed link weight from `node` to each neighboring community.
            std::map<std::size_t, double> links;
            links[old_c] += 0.0;
            for (const auto& [j, w] : g.out[node]) {
                if (j != node) links[community[j]] += w;
            }
            for (const auto& [j, w] : g.in[node]) {
                if (j != node) links[community[j]] += w;
            }

            std::size_t best_c = old_c;
            double best_gain = links[old_c] / m -
                               (g.k_out[node] * comm_in[old_c] + g.k_in[node] * comm_out[old_c]) / (m * m);
            for (const auto& [c, link] : links) {
                if (c == best_c && c == old_c) continue;
                const double gain =
                    link / m - (g.k_out[node] * comm_in[c] + g.k_in[node] * comm_out[c]) / (m * m);
                if (gain > best_gain + 1e-12 || (std::abs(gain - best_gain) <= 1e-12 && c < best_c)) {
                    best_gain = gain;
                    best_c = c;
                }
            }
            comm_in[best_c] += g.k_in[node];
            comm_out[best_c] += g.k_out[node];
            if (best_c != old_c) {
                community[node] = best_c;
                moved = true;
            }
        }
    }
    return community;
}

std::vector<std::size_t> louvain(Graph g, Rng rng)
{
    std::vector<std::size_t> mapping(g.n);
    std::iota(mapping.begin(), mapping.end(), std::size_t{0});

    for (int level = 0; level < 32; ++level) {
        std::vector<std::size_t> community = local_moving(g, rng);

        // Compact community ids.
        std::map<std::size_t, std::size_t> compact;
        for (std::size_t c : community) compact.emplace(c, compact.size());
        std::size_t n_comm = compact.size();
        for (auto& c : community) c = compact.at(c);

        for (auto& c : mapping) c = community[c];
        if (n_comm == g.n) break; // no merge happened, done

        // Aggregate graph: communities become nodes, weights summed.
        Graph next;
        next.n = n_comm;
        next.out.resize(n_comm);
        next.in.resize(n_comm);
        next.k_out.assign(n_comm, 0.0);
        next.k_in.assign(n_comm, 0.0);
        std::map<std::pair<std::size_t, std::size_t>, double> agg;
        for (std::size_t i = 0; i < g.n; ++i) {
            for (const auto& [j, w] : g.out[i]) agg[{community[i], community[j]}] += w;
        }
        for (const auto& [key, w] : agg) next.add_edge(key.first, key.second, w);
        g = std::move(next);
    }
    return mapping;
}

} // namespace

bool LeadLagNetwork::operator==(const LeadLagNetwork& other) const
{
    auto edge_tuple = [](const LeadLagEdge& e) {
        return std::tie(e.origin, e.destination, e.lag_days, e.weight, e.flags, e.inter_cluster);
    };
    if (nodes != other.nodes || clusters != other.clusters || edges.size() != other.edges.size()) return false;
    for (std::size_t i = 0; i < edges.size(); ++i) {
        if (edge_tuple(edges[i]) != edge_tuple(other.edges[i])) return false;
    }
    return true;
}

LeadLagNetwork build_network(const std::map<std::string, leadlag::IrregularSeries>& mobility,
                             const std::map<std::string, leadlag::IrregularSeries>& cumdeaths,
                             const NetworkConfig& config, int threads)
{
    LeadLagNetwork net;

    // Usable regions: present in both inputs and normalizable.
    std::vector<std::string> usable;
    std::map<std::string, leadlag::NormalizedSeries> nmob, ncum;
    for (const auto& [region, series] : mobility) {
        auto it = cumdeaths.find(region);
        if (it == cumdeaths.end()) {
            net.excluded.push_back({region, "no cumulative-deaths series"});
            continue;
        }
        try {
            leadlag::NormalizedSeries m = leadlag::normalize_mobility_reduction(series);
            leadlag::NormalizedSeries c = leadlag::normalize_cumdeaths(it->second);
            nmob.emplace(region, std::move(m));
            ncum.emplace(region, std::move(c));
            usable.push_back(region);
        }
        catch (const Error& e) {
            net.excluded.push_back({region, e.what()});
        }
    }
    for (const auto& [region, series] : cumdeaths) {
        if (!mobility.count(region)) net.excluded.push_back({region, "no mobility series"});
    }
    if (usable.empty()) throw Error("build_network: no usable regions");

    net.nodes = usable; // map iteration is sorted, so this is sorted
    const std::size_t n = usable.size();

    std::vector<PairResult> results(n * n);
    parallel_for(n * n, threads, [&](std::size_t idx) {
        const std::size_t i = idx / n, j = idx % n;
        if (i == j) return; // loops cut
        try {
            const leadlag::LagEstimate est =
                leadlag::estimate_lag(nmob.at(usable[i]), ncum.at(usable[j]), config.lag, 1);
            if (std::isnan(est.correlation_shifted)) return;
            PairResult& r = results[idx];
            r.valid = true;
            r.correlation = est.correlation_shifted;
            r.lag_days = static_cast<int>(std::llround(est.theta_hat));
            r.weight = est.r_squared_shifted;
            r.flags = leadlag::lag_quality_flags(est, config.quality);
        }
        catch (const Error&) {
            // pair without enough overlap: no candidate edge
        }
    });

    // Per destination keep the origin with maximal shifted correlation;
    // ties by larger weight, then smaller origin id.
    for (std::size_t j = 0; j < n; ++j) {
        std::optional<std::size_t> best;
        for (std::size_t i = 0; i < n; ++i) {
            if (i == j) continue;
            const PairResult& r = results[i * n + j];
            if (!r.valid) continue;
            if (!best) {
                best = i;
                continue;
            }
            const PairResult& b = results[*best * n + j];
            if (r.correlation > b.correlation ||
                (r.correlation == b.correlation &&
                 (r.weight > b.weight || (r.weight == b.weight && usable[i] < usable[*best])))) {
                best = i;
            }
        }
        if (best) {
            const PairResult& r = results[*best * n + j];
            net.edges.push_back({usable[*best], usable[j], r.lag_days, r.weight, r.flags, false});
        }
    }
    std::sort(net.edges.begin(), net.edges.end(), [](const LeadLagEdge& a, const LeadLagEdge& b) {
        return std::tie(a.destination, a.origin) < std::tie(b.destination, b.origin);
    });
    return net;
}

LeadLagNetwork detect_communities(const LeadLagNetwork& network, std::uint64_t seed)
{
    LeadLagNetwork out = network;

    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < out.nodes.size(); ++i) index.emplace(out.nodes[i], i);

    Graph g;
    g.n = out.nodes.size();
    g.out.resize(g.n);
    g.in.resize(g.n);
    g.k_out.assign(g.n, 0.0);
    g.k_in.assign(g.n, 0.0);
    for (const LeadLagEdge& e : out.edges) {
        auto oi = index.find(e.origin);
        auto di = index.find(e.destination);
        if (oi == index.end() || di == index.end()) throw Error("detect_communities: edge endpoint not in nodes");
        g.add_edge(oi->second, di->second, std::max(e.weight, 0.0));
    }

    std::vector<std::size_t> community = louvain(g, Rng(seed));

    // Canonical labels by first appearance over sorted node order.
    std::map<std::size_t, int> relabel;
    for (std::size_t i = 0; i < out.nodes.size(); ++i) {
        if (!relabel.count(community[i])) relabel[community[i]] = static_cast<int>(relabel.size());
    }
    out.clusters.clear();
    for (std::size_t i = 0; i < out.nodes.size(); ++i) out.clusters[out.nodes[i]] = relabel.at(community[i]);

    for (LeadLagEdge& e : out.edges) {
        e.inter_cluster = out.clusters.at(e.origin) != out.clusters.at(e.destination);
    }
    return out;
}

std::string export_network(const LeadLagNetwork& network, ExportFormat format)
{
    if (format == ExportFormat::Json) {
        nlohmann::json j;
        j["nodes"] = network.nodes;
        nlohmann::json edges = nlohmann::json::array();
        for (const LeadLagEdge& e : network.edges) {
            nlohmann::json edge;
            edge["origin"] = e.origin;
            edge["destination"] = e.destination;
            edge["lag_days"] = e.lag_days;
            edge["weight"] = e.weight;
            edge["width"] = 1.0 / static_cast<double>(std::max(e.lag_days, 1));
            edge["flags"] = e.flags;
            edge["inter_cluster"] = e.inter_cluster;
            edges.push_back(edge);
        }
        j["edges"] = edges;
        j["clusters"] = network.clusters;
        return j.dump(2) + "\n";
    }

    // Edge list: origin destination lag weight cluster_o cluster_d
    std::ostringstream out;
    for (const LeadLagEdge& e : network.edges) {
        auto cluster_of = [&network](const std::string& id) {
            auto it = network.clusters.find(id);
            return it == network.clusters.end() ? -1 : it->second;
        };
        out << e.origin << ' ' << e.destination << ' ' << e.lag_days << ' ' << e.weight << ' '
            << cluster_of(e.origin) << ' ' << cluster_of(e.destination) << '\n';
    }
    return out.str();
}

LeadLagNetwork parse_network(const std::string& json_text)
{
    nlohmann::json j = nlohmann::json::parse(json_text);
    LeadLagNetwork net;
    net.nodes = j.at("nodes").get<std::vector<std::string>>();
    for (const auto& edge : j.at("edges")) {
        LeadLagEdge e;
        e.origin = edge.at("origin").get<std::string>();
        e.destination = edge.at("destination").get<std::string>();
        e.lag_days = edge.at("lag_days").get<int>();
        e.weight = edge.at("weight").get<double>();
        e.flags = edge.at("flags").get<std::set<std::string>>();
        e.inter_cluster = edge.at("inter_cluster").get<bool>();
        net.edges.push_back(std::move(e));
    }
    if (j.contains("clusters")) net.clusters = j.at("clusters").get<std::map<std::string, int>>();
    return net;
}

} // namespace mobkit::netgraph
