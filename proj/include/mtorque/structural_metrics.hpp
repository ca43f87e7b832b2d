#pragma once

#include <mtorque/multiplex_graph.hpp>
#include <mtorque/parallel.hpp>

#include <numeric>
#include <optional>
#include <queue>
#include <vector>

namespace mtorque {

/// How nodes of degree < 2 enter the average local clustering coefficient.
enum class LowDegreePolicy {
    count_as_zero, ///< contribute 0 and stay in the denominator (default)
    exclude,       ///< dropped from the average
};

struct LayerStats {
    LayerId layer{};
    std::optional<double> prevalence;
    double clustering = 0.0;
    std::optional<double> reachability;
    std::optional<double> monoplexity;
    std::optional<double> mean_edge_betweenness;
};

/// Share of nominations tagged with `layer` (directed nomination counts).
inline double prevalence(const MultiplexNetwork &net, LayerId layer) {
    net.check_layer(layer);
    auto noms = net.nominations();
    if (noms.empty())
        throw UndefinedStatisticError("prevalence undefined for a network without nominations");
    auto hits = std::count_if(noms.begin(), noms.end(), [&](const Nomination &n) { return n.layer == layer; });
    return static_cast<double>(hits) / static_cast<double>(noms.size());
}

/// Triangles through each node.
inline std::vector<std::size_t> triangle_counts(const SimpleGraph &g) {
    const std::size_t n = g.node_count();
    std::vector<std::size_t> triangles(n, 0);
    std::vector<char> marked(n, 0);
    for (NodeId v = 0; v < n; ++v) {
        auto nb = g.neighbors(v);
        for (NodeId u : nb)
            marked[u] = 1;
        std::size_t twice = 0;
        for (NodeId u : nb)
            for (NodeId w : g.neighbors(u))
                twice += marked[w];
        for (NodeId u : nb)
            marked[u] = 0;
        triangles[v] = twice / 2;
    }
    return triangles;
}

/// Average local clustering coefficient.
inline double clustering(const SimpleGraph &g, LowDegreePolicy policy = LowDegreePolicy::count_as_zero) {
    const std::size_t n = g.node_count();
    auto triangles = triangle_counts(g);
    double sum = 0.0;
    std::size_t counted = 0;
    for (NodeId v = 0; v < n; ++v) {
        const double d = static_cast<double>(g.degree(v));
        if (g.degree(v) < 2) {
            if (policy == LowDegreePolicy::count_as_zero)
                ++counted;
            continue;
        }
        sum += static_cast<double>(triangles[v]) / (d * (d - 1.0) / 2.0);
        ++counted;
    }
    return counted == 0 ? 0.0 : sum / static_cast<double>(counted);
}

/// Global transitivity: 3 * triangles / connected triples.
inline double transitivity(const SimpleGraph &g) {
    auto triangles = triangle_counts(g);
    double closed = 0.0, triples = 0.0;
    for (NodeId v = 0; v < g.node_count(); ++v) {
        const double d = static_cast<double>(g.degree(v));
        closed += static_cast<double>(triangles[v]);
        triples += d * (d - 1.0) / 2.0;
    }
    return triples == 0.0 ? 0.0 : closed / triples;
}

/// Component id per node, numbered in order of the smallest member.
inline std::vector<std::size_t> connected_components(const SimpleGraph &g) {
    constexpr auto unset = static_cast<std::size_t>(-1);
    std::vector<std::size_t> component(g.node_count(), unset);
    std::size_t next = 0;
    std::vector<NodeId> stack;
    for (NodeId s = 0; s < g.node_count(); ++s) {
        if (component[s] != unset)
            continue;
        component[s] = next;
        stack.push_back(s);
        while (!stack.empty()) {
            NodeId v = stack.back();
            stack.pop_back();
            for (NodeId w : g.neighbors(v))
                if (component[w] == unset) {
                    component[w] = next;
                    stack.push_back(w);
                }
        }
        ++next;
    }
    return component;
}

/// Share of unordered node pairs joined by a finite path.
inline double reachability(const SimpleGraph &g) {
    const std::size_t n = g.node_count();
    if (n < 2)
        throw UndefinedStatisticError("reachability undefined for fewer than two nodes");
    auto component = connected_components(g);
    std::vector<std::size_t> sizes;
    for (auto c : component) {
        if (c >= sizes.size())
            sizes.resize(c + 1, 0);
        ++sizes[c];
    }
    std::size_t joined = 0;
    for (auto s : sizes)
        joined += s * (s - 1) / 2;
    return static_cast<double>(joined) / (static_cast<double>(n) * static_cast<double>(n - 1) / 2.0);
}

/// Share of the layer's dyads that no other layer supports.
inline double monoplexity(const MultiplexNetwork &net, LayerId layer) {
    net.check_layer(layer);
    std::size_t supported = 0, alone = 0;
    for (const auto &d : net.dyads()) {
        if (!d.supported_by(layer))
            continue;
        ++supported;
        if (d.support() == layer_bit(layer))
            ++alone;
    }
    if (supported == 0)
        throw UndefinedStatisticError("monoplexity undefined for a layer without dyads");
    return static_cast<double>(alone) / static_cast<double>(supported);
}

namespace detail {

// Single-source dependency accumulation (Brandes). Adds the contribution of
// every target reachable from `source` to `out`, indexed by edge.
struct BrandesWorkspace {
    std::vector<std::int64_t> dist;
    std::vector<double> paths;
    std::vector<double> delta;
    std::vector<NodeId> order;
    std::vector<NodeId> queue;

    explicit BrandesWorkspace(std::size_t n) : dist(n), paths(n), delta(n) {
        order.reserve(n);
        queue.reserve(n);
    }

    void accumulate(const SimpleGraph &g, NodeId source, std::vector<double> &out) {
        std::fill(dist.begin(), dist.end(), -1);
        std::fill(paths.begin(), paths.end(), 0.0);
        std::fill(delta.begin(), delta.end(), 0.0);
        order.clear();
        queue.clear();
        dist[source] = 0;
        paths[source] = 1.0;
        queue.push_back(source);
        for (std::size_t head = 0; head < queue.size(); ++head) {
            NodeId v = queue[head];
            order.push_back(v);
            for (NodeId w : g.neighbors(v)) {
                if (dist[w] < 0) {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if (dist[w] == dist[v] + 1)
                    paths[w] += paths[v];
            }
        }
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            NodeId w = *it;
            auto nb = g.neighbors(w);
            auto edges = g.incident_edges(w);
            for (std::size_t p = 0; p < nb.size(); ++p) {
                NodeId v = nb[p];
                if (dist[v] == dist[w] - 1) {
                    double c = paths[v] / paths[w] * (1.0 + delta[w]);
                    out[edges[p]] += c;
                    delta[v] += c;
                }
            }
        }
    }
};

} // namespace detail

/// Unweighted edge betweenness, indexed like g.edges(). Each unordered pair
/// counts once and splits its weight equally among its geodesics. Sources
/// are processed in fixed blocks and summed in block order, so the result
/// does not depend on `threads`.
inline std::vector<double> edge_betweenness(const SimpleGraph &g, unsigned threads = 1) {
    const std::size_t n = g.node_count();
    constexpr std::size_t block = 32;
    const std::size_t blocks = (n + block - 1) / block;
    std::vector<std::vector<double>> partial(blocks);
    parallel_for(blocks, threads, [&](std::size_t b) {
        detail::BrandesWorkspace ws(n);
        partial[b].assign(g.edge_count(), 0.0);
        for (std::size_t s = b * block; s < std::min(n, (b + 1) * block); ++s)
            ws.accumulate(g, static_cast<NodeId>(s), partial[b]);
    });
    std::vector<double> total(g.edge_count(), 0.0);
    for (const auto &p : partial)
        for (std::size_t e = 0; e < total.size(); ++e)
            total[e] += p[e];
    for (auto &value : total)
        value /= 2.0;
    return total;
}

/// Mean composite-graph betweenness over the dyads supported by `layer`.
/// `betweenness` must be indexed like composite(net).edges().
inline double layer_mean_betweenness(const MultiplexNetwork &net, LayerId layer,
                                     std::span<const double> betweenness) {
    net.check_layer(layer);
    // composite(net) has exactly one edge per dyad, in dyad order
    auto dyads = net.dyads();
    if (betweenness.size() != dyads.size())
        throw std::invalid_argument("betweenness does not match the composite graph");
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < dyads.size(); ++i)
        if (dyads[i].supported_by(layer)) {
            sum += betweenness[i];
            ++count;
        }
    if (count == 0)
        throw UndefinedStatisticError("mean betweenness undefined for a layer without dyads");
    return sum / static_cast<double>(count);
}

inline double layer_mean_betweenness(const MultiplexNetwork &net, LayerId layer) {
    auto b = edge_betweenness(composite(net));
    return layer_mean_betweenness(net, layer, b);
}

/// All per-layer descriptive statistics of one village. Undefined values
/// (no nominations, no dyads on the layer, fewer than two nodes) are empty.
inline std::vector<LayerStats> layer_statistics(const MultiplexNetwork &net, unsigned threads = 1,
                                                LowDegreePolicy policy = LowDegreePolicy::count_as_zero) {
    auto betweenness = edge_betweenness(composite(net), threads);
    std::vector<LayerStats> out;
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        LayerStats s;
        s.layer = layer_at(l);
        auto sub = layer_subgraph(net, s.layer);
        if (!net.nominations().empty())
            s.prevalence = prevalence(net, s.layer);
        s.clustering = clustering(sub, policy);
        if (net.node_count() >= 2)
            s.reachability = reachability(sub);
        if (net.dyad_count(s.layer) > 0) {
            s.monoplexity = monoplexity(net, s.layer);
            s.mean_edge_betweenness = layer_mean_betweenness(net, s.layer, betweenness);
        }
        out.push_back(s);
    }
    return out;
}

} // namespace mtorque
